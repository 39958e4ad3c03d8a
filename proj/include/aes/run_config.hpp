#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "aes/aggregation.hpp"
#include "aes/corpus.hpp"
#include "aes/gateway.hpp"

namespace aes {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelEntry {
    std::string name;
    BackendConfig backend;
    std::set<int> levels;       // enabled prompt levels for this model
    bool seed_explicit = false; // config file pinned the backend seed
};

struct RunConfig {
    std::filesystem::path corpus_path;
    CorpusFormat corpus_format = CorpusFormat::Csv;
    std::map<int, std::filesystem::path> template_paths;  // absent level -> built-in default
    std::filesystem::path fewshot_path;                    // required when any L3 is enabled
    std::optional<std::filesystem::path> mapping_path;
    std::optional<std::filesystem::path> synonyms_path;
    std::vector<ModelEntry> models;
    int bootstrap_iters = 1000;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    MissingRaterPolicy on_missing_rater = MissingRaterPolicy::Zero;
    std::optional<double> threshold;
    std::filesystem::path out_dir = "out";

    /// Stable digest of the run identity (out_dir excluded); names the
    /// run directory so identical configs resume from the same cache.
    std::string digest() const;
};

/// Parses the JSON config file. Relative paths are resolved against the
/// config file's directory. Structural errors throw ConfigError.
RunConfig load_run_config(const std::filesystem::path& path);

/// Dry-run validation: referenced files, template slot coverage, few-shot
/// completeness, mapping invariants, backend configs. Backend
/// reachability is deliberately not probed. Returns all violations.
std::vector<std::string> validate_config(const RunConfig& config);

}  // namespace aes
