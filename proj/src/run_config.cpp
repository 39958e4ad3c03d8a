#include "aes/run_config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "aes/prompt_engine.hpp"
#include "aes/response_parser.hpp"
#include "aes/rng.hpp"

namespace aes {

namespace {

using json = nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

BackendConfig backend_from_json(const json& doc, std::uint64_t default_seed,
                                const std::string& name) {
    BackendConfig cfg;
    std::string kind = doc.value("kind", "mock");
    if (kind == "mock") cfg.kind = BackendKind::Mock;
    else if (kind == "http_chat") cfg.kind = BackendKind::HttpChat;
    else throw ConfigError("config: model '" + name + "': unknown backend kind '" + kind + "'");

    cfg.endpoint = doc.value("endpoint", "");
    cfg.model_name = doc.value("model_name", name);
    cfg.api_key_env = doc.value("api_key_env", "LLM_API_KEY");
    cfg.temperature = doc.value("temperature", 0.0);
    cfg.max_output_tokens = doc.value("max_output_tokens", 1024);
    cfg.timeout_ms = doc.value("timeout_ms", 30000);
    cfg.max_retries = doc.value("max_retries", 2);
    cfg.max_concurrency = doc.value("max_concurrency", 4);
    cfg.seed = doc.value("seed", default_seed);
    cfg.backoff_base_ms = doc.value("backoff_base_ms", 1000);
    cfg.mock_latency_ms = doc.value("mock_latency_ms", 0);
    return cfg;
}

json backend_to_json(const BackendConfig& cfg) {
    return json{{"kind", cfg.kind == BackendKind::Mock ? "mock" : "http_chat"},
                {"endpoint", cfg.endpoint},
                {"model_name", cfg.model_name},
                {"api_key_env", cfg.api_key_env},
                {"temperature", cfg.temperature},
                {"max_output_tokens", cfg.max_output_tokens},
                {"timeout_ms", cfg.timeout_ms},
                {"max_retries", cfg.max_retries},
                {"max_concurrency", cfg.max_concurrency},
                {"seed", cfg.seed},
                {"backoff_base_ms", cfg.backoff_base_ms},
                {"mock_latency_ms", cfg.mock_latency_ms}};
}

RunConfig parse_config(const json& doc, const std::filesystem::path& base) {
    RunConfig cfg;

    if (!doc.contains("corpus") || !doc["corpus"].is_object()) {
        throw ConfigError("config: missing required 'corpus' block");
    }
    const auto& corpus = doc["corpus"];
    if (!corpus.contains("path")) throw ConfigError("config: corpus.path is required");
    cfg.corpus_path = resolve(base, corpus["path"].get<std::string>());
    auto format = corpus_format_from_string(corpus.value("format", "csv"));
    if (!format) {
        throw ConfigError("config: corpus.format must be 'csv' or 'jsonl'");
    }
    cfg.corpus_format = *format;

    if (!doc.contains("seed") || !doc["seed"].is_number()) {
        throw ConfigError("config: top-level integer 'seed' is required");
    }
    cfg.seed = doc["seed"].get<std::uint64_t>();

    if (doc.contains("templates")) {
        for (const auto& [key, value] : doc["templates"].items()) {
            int level = 0;
            if (key == "level1") level = 1;
            else if (key == "level2") level = 2;
            else if (key == "level3") level = 3;
            else throw ConfigError("config: templates keys must be level1/level2/level3");
            cfg.template_paths[level] = resolve(base, value.get<std::string>());
        }
    }
    if (doc.contains("fewshot")) {
        cfg.fewshot_path = resolve(base, doc["fewshot"].get<std::string>());
    }
    if (doc.contains("rubric_mapping")) {
        cfg.mapping_path = resolve(base, doc["rubric_mapping"].get<std::string>());
    }
    if (doc.contains("synonyms")) {
        cfg.synonyms_path = resolve(base, doc["synonyms"].get<std::string>());
    }

    if (!doc.contains("models") || !doc["models"].is_array()) {
        throw ConfigError("config: 'models' array is required");
    }
    for (const auto& entry : doc["models"]) {
        ModelEntry model;
        if (!entry.contains("name")) throw ConfigError("config: every model needs a name");
        model.name = entry["name"].get<std::string>();
        model.backend = backend_from_json(entry, cfg.seed, model.name);
        model.seed_explicit = entry.contains("seed");
        for (const auto& level : entry.value("levels", std::vector<int>{})) {
            model.levels.insert(level);
        }
        cfg.models.push_back(std::move(model));
    }

    if (doc.contains("bootstrap")) {
        cfg.bootstrap_iters = doc["bootstrap"].value("iters", 1000);
        cfg.alpha = doc["bootstrap"].value("alpha", 0.05);
    }
    if (doc.contains("on_missing_rater")) {
        auto policy = missing_rater_policy_from_string(doc["on_missing_rater"].get<std::string>());
        if (!policy) throw ConfigError("config: on_missing_rater must be 'zero' or 'drop'");
        cfg.on_missing_rater = *policy;
    }
    if (doc.contains("threshold") && !doc["threshold"].is_null()) {
        cfg.threshold = doc["threshold"].get<double>();
    }
    if (doc.contains("out_dir")) cfg.out_dir = resolve(base, doc["out_dir"].get<std::string>());
    return cfg;
}

}  // namespace

std::string RunConfig::digest() const {
    // out_dir excluded: relocating output keeps the run identity (and its cache)
    json doc;
    doc["corpus_path"] = corpus_path.string();
    doc["corpus_format"] = corpus_format == CorpusFormat::Csv ? "csv" : "jsonl";
    json templates = json::object();
    for (const auto& [level, path] : template_paths) {
        templates[std::to_string(level)] = path.string();
    }
    doc["templates"] = templates;
    doc["fewshot"] = fewshot_path.string();
    doc["mapping"] = mapping_path ? mapping_path->string() : "";
    doc["synonyms"] = synonyms_path ? synonyms_path->string() : "";
    doc["models"] = json::array();
    for (const auto& model : models) {
        json m = backend_to_json(model.backend);
        m["name"] = model.name;
        m["levels"] = model.levels;
        doc["models"].push_back(std::move(m));
    }
    doc["bootstrap_iters"] = bootstrap_iters;
    doc["alpha"] = alpha;
    doc["seed"] = seed;
    doc["on_missing_rater"] = on_missing_rater == MissingRaterPolicy::Zero ? "zero" : "drop";
    doc["threshold"] = threshold ? json(*threshold) : json(nullptr);
    return to_hex(fnv1a64(doc.dump()));
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError("config: " + path.string() + ": " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: expected a JSON object");

    static const std::set<std::string> known_keys = {
        "corpus",   "templates", "fewshot", "rubric_mapping", "synonyms", "models",
        "bootstrap", "seed",     "on_missing_rater", "threshold", "out_dir"};
    for (const auto& [key, value] : doc.items()) {
        if (!known_keys.count(key)) {
            throw ConfigError("config: unknown key '" + key + "'");
        }
    }

    const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    try {
        return parse_config(doc, base);
    } catch (const json::exception& e) {
        throw ConfigError("config: " + path.string() + ": " + e.what());
    }
}

std::vector<std::string> validate_config(const RunConfig& config) {
    std::vector<std::string> violations;

    std::set<int> enabled_levels;
    std::set<std::string> names;
    for (const auto& model : config.models) {
        if (!names.insert(model.name).second) {
            violations.push_back("duplicate model name '" + model.name + "'");
        }
        for (int level : model.levels) {
            if (level < 1 || level > 3) {
                violations.push_back("model '" + model.name + "': invalid level " +
                                     std::to_string(level));
            } else {
                enabled_levels.insert(level);
            }
        }
        for (const auto& v : model.backend.validate()) {
            violations.push_back("model '" + model.name + "': " + v);
        }
    }
    bool any_enabled = false;
    for (const auto& model : config.models) any_enabled = any_enabled || !model.levels.empty();
    if (!any_enabled) violations.push_back("no (model, level) combination is enabled");

    if (config.bootstrap_iters < 1) violations.push_back("bootstrap iters must be >= 1");
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) {
        violations.push_back("bootstrap alpha must be in (0, 1)");
    }

    std::vector<Essay> essays;
    try {
        essays = load_corpus(config.corpus_path, config.corpus_format);
        bool any_gold = false;
        for (const auto& e : essays) any_gold = any_gold || e.gold.has_value();
        if (!any_gold) violations.push_back("corpus contains no gold-labeled essays");
    } catch (const CorpusError& e) {
        violations.push_back(e.what());
    }

    RubricMapping mapping = RubricMapping::builtin();
    if (config.mapping_path) {
        try {
            mapping = RubricMapping::load(*config.mapping_path);
        } catch (const std::exception& e) {
            violations.push_back(e.what());
        }
    }
    if (config.synonyms_path) {
        try {
            SynonymTable::load(*config.synonyms_path);
        } catch (const std::exception& e) {
            violations.push_back(e.what());
        }
    }

    // template slot coverage, probed with a dry render
    const Essay probe{"dry-run", "p", "sample essay text", std::nullopt};
    for (int level : enabled_levels) {
        PromptTemplate tmpl;
        try {
            auto it = config.template_paths.find(level);
            tmpl = it == config.template_paths.end() ? default_template(level)
                                                     : load_template(level, it->second);
        } catch (const std::exception& e) {
            violations.push_back(e.what());
            continue;
        }
        try {
            if (level == 1) {
                render_level1(probe, tmpl);
            } else if (level == 2) {
                render_level2(probe, rater_spec(RaterId::A), mapping, tmpl);
            } else {
                FewShotTriple probe_triple{{{Trait::Organization, Band::Low, 1, "x", "x"},
                                            {Trait::Organization, Band::Mid, 3, "x", "x"},
                                            {Trait::Organization, Band::High, 5, "x", "x"}}};
                render_level3(probe, Trait::Organization, probe_triple, tmpl);
            }
        } catch (const RenderError& e) {
            violations.push_back("level " + std::to_string(level) + " template: " + e.what());
        }
    }

    if (enabled_levels.count(3)) {
        if (config.fewshot_path.empty()) {
            violations.push_back("level 3 is enabled but no few-shot file is configured");
        } else {
            try {
                load_fewshot(config.fewshot_path);
            } catch (const std::exception& e) {
                violations.push_back(e.what());
            }
        }
    }
    return violations;
}

}  // namespace aes
