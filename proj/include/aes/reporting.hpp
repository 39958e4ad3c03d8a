#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aes/agreement.hpp"

namespace aes {

struct ReportRow {
    std::string model;
    int level = 0;  // 0 renders as "-" (reference rows)
    std::string trait;
    double qwk = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int n = 0;
    double parse_failure_rate = 0.0;

    bool operator==(const ReportRow&) const = default;
};

struct ParseFailureEntry {
    std::string essay_id;
    int level = 0;
    std::string subject;
    std::string model;
    std::string reason;
};

struct RunMetadata {
    std::string config_digest;
    std::uint64_t seed = 0;
    int bootstrap_iters = 0;
    double alpha = 0.05;
    std::string started_at;
    std::string finished_at;
    std::optional<double> threshold;            // human inter-rater reference
    std::vector<std::string> skipped_groups;    // "model:L3" entries disabled by config
    std::map<std::string, std::uint64_t> prompt_counts;  // per "model:L<n>"
};

struct RunReport {
    std::vector<ReportRow> rows;
    RunMetadata metadata;
    std::vector<ParseFailureEntry> parse_failures;
};

struct GroupResult {
    std::string model;
    int level = 0;
    AgreementResult result;
};

using GroupKey = std::pair<std::string, int>;  // (model, level)

/// Assembles the report: one row per (model, level, trait-or-total),
/// sorted by model, level, canonical trait order; when a threshold is
/// configured a human_reference row is appended. Throws listing the gaps
/// if any requested group lacks a result.
RunReport build_report(const std::vector<GroupResult>& results,
                       const std::vector<GroupKey>& requested_groups,
                       const std::map<GroupKey, double>& parse_failure_rates,
                       std::vector<ParseFailureEntry> parse_failures, RunMetadata metadata);

/// Writes summary.csv, summary.json, per-trait ci_<trait>.csv plot data
/// (one per trait plus total) and parse_failures.csv. Reals use fixed
/// 6-decimal formatting; identical reports emit byte-identical files.
void emit(const RunReport& report, const std::filesystem::path& out_dir);

/// Reads summary.csv back into rows (round-trip check and tooling).
std::vector<ReportRow> load_summary_csv(const std::filesystem::path& path);

/// Canonical row order for one group: the seven traits then "total".
const std::vector<std::string>& report_trait_order();

}  // namespace aes
