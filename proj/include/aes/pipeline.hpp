#pragma once

#include <filesystem>
#include <map>

#include "aes/gateway.hpp"
#include "aes/reporting.hpp"
#include "aes/run_config.hpp"

namespace aes {

struct RunOutcome {
    int exit_code = 0;  // 0 ok, 1 validation failure, 2 all completions failed
    RunReport report;
    std::filesystem::path run_dir;
    std::map<std::string, GatewayStats> gateway_stats;  // per model
    std::vector<std::string> violations;                // non-empty when exit_code == 1
};

/// Full pipeline: load corpus, render prompts per enabled (model, level),
/// dispatch through the gateway cache, parse, assemble score vectors,
/// compute per-trait and total QWK with bootstrap CIs against gold, emit
/// the report under out_dir/<config digest>. Per-essay failures are
/// recorded, never fatal.
RunOutcome run_pipeline(const RunConfig& config);

}  // namespace aes
