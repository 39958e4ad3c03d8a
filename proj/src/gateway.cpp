#include "aes/gateway.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <ctime>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include "aes/rng.hpp"

namespace aes {

namespace {

using json = nlohmann::json;

std::string iso8601_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::optional<CompletionStatus> status_from_name(std::string_view s) {
    if (s == "ok") return CompletionStatus::Ok;
    if (s == "transport_error") return CompletionStatus::TransportError;
    if (s == "timeout") return CompletionStatus::Timeout;
    if (s == "empty") return CompletionStatus::Empty;
    return std::nullopt;
}

json record_to_json(const CompletionRecord& r) {
    return json{{"prompt_hash", r.prompt_hash},
                {"essay_id", r.essay_id},
                {"level", r.level},
                {"subject", r.subject},
                {"model_name", r.model_name},
                {"raw_text", r.raw_text},
                {"status", std::string(completion_status_name(r.status))},
                {"attempts", r.attempts},
                {"timestamp", r.timestamp}};
}

std::optional<CompletionRecord> record_from_json(const json& doc) {
    if (!doc.is_object()) return std::nullopt;
    CompletionRecord r;
    try {
        r.prompt_hash = doc.at("prompt_hash").get<std::string>();
        r.essay_id = doc.at("essay_id").get<std::string>();
        r.level = doc.at("level").get<int>();
        r.subject = doc.at("subject").get<std::string>();
        r.model_name = doc.at("model_name").get<std::string>();
        r.raw_text = doc.at("raw_text").get<std::string>();
        auto status = status_from_name(doc.at("status").get<std::string>());
        if (!status) return std::nullopt;
        r.status = *status;
        r.attempts = doc.at("attempts").get<int>();
        r.timestamp = doc.at("timestamp").get<std::string>();
    } catch (const json::exception&) {
        return std::nullopt;
    }
    return r;
}

struct UrlParts {
    bool https = false;
    std::string host_port;
    std::string path;
};

std::optional<UrlParts> split_url(const std::string& url) {
    UrlParts parts;
    std::string rest;
    if (url.rfind("https://", 0) == 0) {
        parts.https = true;
        rest = url.substr(8);
    } else if (url.rfind("http://", 0) == 0) {
        rest = url.substr(7);
    } else {
        return std::nullopt;
    }
    std::size_t slash = rest.find('/');
    parts.host_port = slash == std::string::npos ? rest : rest.substr(0, slash);
    parts.path = slash == std::string::npos ? "/" : rest.substr(slash);
    if (parts.host_port.empty()) return std::nullopt;
    return parts;
}

}  // namespace

std::string_view completion_status_name(CompletionStatus s) {
    switch (s) {
        case CompletionStatus::Ok: return "ok";
        case CompletionStatus::TransportError: return "transport_error";
        case CompletionStatus::Timeout: return "timeout";
        case CompletionStatus::Empty: return "empty";
    }
    return {};
}

std::vector<std::string> BackendConfig::validate() const {
    std::vector<std::string> violations;
    if (kind == BackendKind::HttpChat) {
        if (endpoint.empty()) violations.push_back("http_chat backend requires an endpoint");
        else if (!split_url(endpoint)) violations.push_back("endpoint is not an http(s) URL");
        if (model_name.empty()) violations.push_back("http_chat backend requires model_name");
    }
    if (temperature < 0.0) violations.push_back("temperature must be >= 0");
    if (max_output_tokens <= 0) violations.push_back("max_output_tokens must be positive");
    if (timeout_ms <= 0) violations.push_back("timeout must be positive");
    if (max_retries < 0) violations.push_back("max_retries must be non-negative");
    if (max_concurrency <= 0) violations.push_back("max_concurrency must be positive");
    return violations;
}

std::string mock_generate(const std::string& prompt_hash, std::uint64_t seed,
                          const std::string& schema_hint) {
    // Fill each `"key": <int a-b>` placeholder with a uniform draw keyed on
    // (prompt_hash, seed, key); a `total` placeholder becomes the running sum.
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    int sum = 0;
    std::size_t pos = 0;
    while (true) {
        std::size_t key_start = schema_hint.find('"', pos);
        if (key_start == std::string::npos) break;
        std::size_t key_end = schema_hint.find('"', key_start + 1);
        if (key_end == std::string::npos) break;
        std::string key = schema_hint.substr(key_start + 1, key_end - key_start - 1);
        pos = key_end + 1;

        std::size_t colon = schema_hint.find(':', key_end);
        if (colon == std::string::npos) break;
        std::size_t value_start = schema_hint.find_first_not_of(" \t", colon + 1);
        if (value_start == std::string::npos) break;

        if (schema_hint.compare(value_start, 5, "<int ") == 0) {
            std::size_t close = schema_hint.find('>', value_start);
            if (close == std::string::npos) break;
            std::string range = schema_hint.substr(value_start + 5, close - value_start - 5);
            std::size_t dash = range.find('-', 1);
            int lo = std::stoi(range.substr(0, dash));
            int hi = std::stoi(range.substr(dash + 1));
            if (key == "total") {
                out[key] = sum;
            } else {
                auto rng = CounterRng::substream(seed, prompt_hash + "|" + key);
                int value = rng.uniform_int(lo, hi);
                out[key] = value;
                sum += value;
            }
            pos = close + 1;
        } else if (schema_hint.compare(value_start, 10, "\"<string>\"") == 0) {
            out[key] = "Deterministic mock justification for offline runs.";
            pos = value_start + 10;
        }
    }
    return out.dump();
}

struct Gateway::Impl {
    BackendConfig cfg;
    std::filesystem::path cache_path;

    mutable std::mutex mutex;
    std::condition_variable pending_cv;
    std::condition_variable slot_cv;
    std::map<std::pair<std::string, std::string>, CompletionRecord> cache;
    std::set<std::pair<std::string, std::string>> pending;
    std::ofstream cache_out;

    int in_flight = 0;  // guarded by mutex
    GatewayStats stats;

    void load_cache() {
        if (cache_path.empty() || !std::filesystem::exists(cache_path)) return;
        std::ifstream in(cache_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json doc = json::parse(line, nullptr, false);
            if (doc.is_discarded()) continue;  // interrupted write; drop the tail
            if (auto record = record_from_json(doc)) {
                cache[{record->prompt_hash, record->model_name}] = std::move(*record);
            }
        }
    }

    void persist(const CompletionRecord& record) {
        if (cache_path.empty()) return;
        if (!cache_out.is_open()) {
            cache_out.open(cache_path, std::ios::app | std::ios::binary);
        }
        // replace handler: raw model output is not guaranteed to be valid UTF-8
        cache_out << record_to_json(record).dump(-1, ' ', false,
                                                 json::error_handler_t::replace)
                  << '\n';
        cache_out.flush();
    }

    CompletionRecord call_backend(const RenderedPrompt& prompt) {
        CompletionRecord record;
        record.prompt_hash = prompt.content_hash;
        record.essay_id = prompt.essay_id;
        record.level = prompt.level;
        record.subject = prompt.subject.to_string();
        record.model_name = cfg.model_name;
        record.timestamp = iso8601_now();

        if (cfg.kind == BackendKind::Mock) {
            if (cfg.mock_latency_ms > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(cfg.mock_latency_ms));
            }
            record.raw_text = mock_generate(prompt.content_hash, cfg.seed, prompt.schema_hint);
            record.status =
                record.raw_text.empty() ? CompletionStatus::Empty : CompletionStatus::Ok;
            record.attempts = 1;
            return record;
        }

        auto parts = split_url(cfg.endpoint);
        CounterRng jitter_rng = CounterRng::substream(cfg.seed, prompt.content_hash + "|backoff");
        std::string last_error = "unreachable";
        bool timed_out = false;

        for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
            record.attempts = attempt + 1;
            if (attempt > 0) {
                // base * 2^(attempt-1), jitter +-20%
                double base = cfg.backoff_base_ms * std::pow(2.0, attempt - 1);
                double factor = 0.8 + 0.4 * jitter_rng.uniform01();
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(static_cast<long>(base * factor)));
            }
            if (!parts) {
                last_error = "bad endpoint URL";
                break;
            }

            httplib::Client client((parts->https ? "https://" : "http://") + parts->host_port);
            client.set_connection_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);
            client.set_read_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);
            client.set_write_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);

            json body = {{"model", cfg.model_name},
                         {"temperature", cfg.temperature},
                         {"max_tokens", cfg.max_output_tokens},
                         {"messages", json::array({json{{"role", "user"},
                                                        {"content", prompt.text}}})}};
            httplib::Headers headers;
            if (const char* key = std::getenv(cfg.api_key_env.c_str()); key && *key) {
                headers.emplace("Authorization", std::string("Bearer ") + key);
            }

            auto result = client.Post(parts->path, headers, body.dump(), "application/json");
            if (!result) {
                timed_out = result.error() == httplib::Error::ConnectionTimeout ||
                            result.error() == httplib::Error::Read ||
                            result.error() == httplib::Error::Write;
                last_error = httplib::to_string(result.error());
                continue;
            }
            if (result->status != 200) {
                last_error = "HTTP " + std::to_string(result->status);
                timed_out = false;
                continue;
            }
            json doc = json::parse(result->body, nullptr, false);
            if (doc.is_discarded() || !doc.contains("choices") || doc["choices"].empty()) {
                last_error = "malformed completion response";
                timed_out = false;
                continue;
            }
            const auto& message = doc["choices"][0];
            std::string content;
            if (message.contains("message") && message["message"].contains("content") &&
                message["message"]["content"].is_string()) {
                content = message["message"]["content"].get<std::string>();
            }
            record.raw_text = content;
            record.status = content.empty() ? CompletionStatus::Empty : CompletionStatus::Ok;
            return record;
        }

        record.raw_text = last_error;
        record.status = timed_out ? CompletionStatus::Timeout : CompletionStatus::TransportError;
        return record;
    }
};

Gateway::Gateway(BackendConfig cfg, std::filesystem::path cache_path)
    : impl_(std::make_unique<Impl>()) {
    impl_->cfg = std::move(cfg);
    impl_->cache_path = std::move(cache_path);
    impl_->load_cache();
}

Gateway::~Gateway() = default;

CompletionRecord Gateway::complete(const RenderedPrompt& prompt) {
    const std::pair<std::string, std::string> key{prompt.content_hash, impl_->cfg.model_name};

    {
        std::unique_lock lock(impl_->mutex);
        ++impl_->stats.dispatched;
        // wait out an identical in-flight request rather than duplicating it
        impl_->pending_cv.wait(lock, [&] { return !impl_->pending.count(key); });
        auto it = impl_->cache.find(key);
        if (it != impl_->cache.end()) {
            ++impl_->stats.cache_hits;
            return it->second;
        }
        impl_->pending.insert(key);
    }

    {
        // bound concurrency even for direct complete() callers
        std::unique_lock lock(impl_->mutex);
        impl_->slot_cv.wait(lock, [&] { return impl_->in_flight < impl_->cfg.max_concurrency; });
        ++impl_->in_flight;
        impl_->stats.max_in_flight = std::max(impl_->stats.max_in_flight, impl_->in_flight);
        ++impl_->stats.backend_calls;
    }
    CompletionRecord record;
    try {
        record = impl_->call_backend(prompt);
    } catch (const std::exception& e) {
        // a single essay must never take down the run
        record.prompt_hash = prompt.content_hash;
        record.essay_id = prompt.essay_id;
        record.level = prompt.level;
        record.subject = prompt.subject.to_string();
        record.model_name = impl_->cfg.model_name;
        record.raw_text = e.what();
        record.status = CompletionStatus::TransportError;
        record.attempts = 1;
        record.timestamp = iso8601_now();
    }
    {
        std::lock_guard lock(impl_->mutex);
        --impl_->in_flight;
    }
    impl_->slot_cv.notify_one();

    {
        std::lock_guard lock(impl_->mutex);
        if (record.status == CompletionStatus::Ok && record.raw_text.empty()) {
            record.status = CompletionStatus::Empty;  // keep the record invariant
        }
        impl_->cache[key] = record;
        impl_->persist(record);
        impl_->pending.erase(key);
    }
    impl_->pending_cv.notify_all();
    return record;
}

std::vector<CompletionRecord> Gateway::complete_all(std::span<const RenderedPrompt> prompts) {
    std::vector<CompletionRecord> results(prompts.size());
    if (prompts.empty()) return results;

    const int workers =
        std::min<int>(impl_->cfg.max_concurrency, static_cast<int>(prompts.size()));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                std::size_t i = next.fetch_add(1);
                if (i >= prompts.size()) return;
                results[i] = complete(prompts[i]);
            }
        });
    }
    for (auto& t : pool) t.join();
    return results;
}

GatewayStats Gateway::stats() const {
    std::lock_guard lock(impl_->mutex);
    return impl_->stats;
}

}  // namespace aes
