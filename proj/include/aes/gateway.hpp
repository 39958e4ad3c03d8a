#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "aes/prompt_engine.hpp"

namespace aes {

enum class BackendKind { HttpChat, Mock };

struct BackendConfig {
    BackendKind kind = BackendKind::Mock;
    std::string endpoint;    // full chat-completions URL (http_chat)
    std::string model_name;
    std::string api_key_env = "LLM_API_KEY";
    double temperature = 0.0;
    int max_output_tokens = 1024;
    int timeout_ms = 30000;
    int max_retries = 2;
    int max_concurrency = 4;
    std::uint64_t seed = 0;     // mock only
    int backoff_base_ms = 1000; // exponential, factor 2, jitter +-20%
    int mock_latency_ms = 0;    // simulated latency, exercises the pool

    /// Violations of the config invariants; empty when valid.
    std::vector<std::string> validate() const;
};

enum class CompletionStatus { Ok, TransportError, Timeout, Empty };

std::string_view completion_status_name(CompletionStatus s);

struct CompletionRecord {
    std::string prompt_hash;
    std::string essay_id;
    int level = 0;
    std::string subject;
    std::string model_name;
    std::string raw_text;
    CompletionStatus status = CompletionStatus::Empty;
    int attempts = 0;
    std::string timestamp;  // ISO-8601 UTC
};

/// Deterministic offline completion: a pure function of
/// (prompt_hash, seed, schema_hint). Each `"key": <int a-b>` placeholder in
/// the hint is drawn uniformly from [a,b], keyed on (prompt_hash, seed, key);
/// a `total` placeholder is emitted as the sum of the trait draws.
std::string mock_generate(const std::string& prompt_hash, std::uint64_t seed,
                          const std::string& schema_hint);

struct GatewayStats {
    std::uint64_t backend_calls = 0;  // actual mock/http invocations
    std::uint64_t cache_hits = 0;
    std::uint64_t dispatched = 0;     // complete() entries
    int max_in_flight = 0;            // high-water mark of concurrent backend calls
};

/// Dispatches rendered prompts to one backend with bounded concurrency,
/// retries with exponential backoff, and an append-only JSONL cache keyed
/// on (prompt_hash, model_name). Re-running an interrupted run only calls
/// the backend for uncached prompts.
class Gateway {
public:
    /// cache_path may be empty for a purely in-memory cache.
    Gateway(BackendConfig cfg, std::filesystem::path cache_path);
    ~Gateway();

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    /// Thread-safe; never throws for transport problems — failures are
    /// encoded in the record status.
    CompletionRecord complete(const RenderedPrompt& prompt);

    /// Runs all prompts through a bounded worker pool; results in input order.
    std::vector<CompletionRecord> complete_all(std::span<const RenderedPrompt> prompts);

    GatewayStats stats() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace aes
