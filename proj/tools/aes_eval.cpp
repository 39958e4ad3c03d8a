// Command-line front end: validate a run config or execute the full
// scoring pipeline against it.

#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "aes/pipeline.hpp"

namespace {

struct Overrides {
    std::string level = "all";
    std::string model = "all";
    std::optional<std::uint64_t> seed;
    std::optional<int> bootstrap_iters;
    std::optional<std::string> out_dir;
    std::optional<int> max_concurrency;
};

int apply_overrides(aes::RunConfig& config, const Overrides& o) {
    if (o.model != "all") {
        std::vector<aes::ModelEntry> kept;
        for (auto& model : config.models) {
            if (model.name == o.model) kept.push_back(std::move(model));
        }
        if (kept.empty()) {
            std::fprintf(stderr, "error: model '%s' is not defined in the config\n",
                         o.model.c_str());
            return 1;
        }
        config.models = std::move(kept);
    }
    if (o.level != "all") {
        int level = std::stoi(o.level);
        for (auto& model : config.models) {
            if (model.levels.count(level)) model.levels = {level};
            else model.levels.clear();
        }
    }
    if (o.seed) {
        config.seed = *o.seed;
        for (auto& model : config.models) {
            if (!model.seed_explicit) model.backend.seed = *o.seed;
        }
    }
    if (o.bootstrap_iters) config.bootstrap_iters = *o.bootstrap_iters;
    if (o.out_dir) config.out_dir = *o.out_dir;
    if (o.max_concurrency) {
        for (auto& model : config.models) model.backend.max_concurrency = *o.max_concurrency;
    }
    return 0;
}

void print_violations(const std::vector<std::string>& violations) {
    std::fprintf(stderr, "config validation failed:\n");
    for (const auto& v : violations) std::fprintf(stderr, "  - %s\n", v.c_str());
}

int run_validate(const std::string& config_path, const Overrides& overrides) {
    aes::RunConfig config;
    try {
        config = aes::load_run_config(config_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "config validation failed:\n  - %s\n", e.what());
        return 1;
    }
    if (int rc = apply_overrides(config, overrides); rc != 0) return rc;
    auto violations = aes::validate_config(config);
    if (!violations.empty()) {
        print_violations(violations);
        return 1;
    }
    std::printf("ok: config is valid (digest %s)\n", config.digest().c_str());
    return 0;
}

int run_run(const std::string& config_path, const Overrides& overrides, bool dry_run) {
    if (dry_run) return run_validate(config_path, overrides);

    aes::RunConfig config;
    try {
        config = aes::load_run_config(config_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "config validation failed:\n  - %s\n", e.what());
        return 1;
    }
    if (int rc = apply_overrides(config, overrides); rc != 0) return rc;

    aes::RunOutcome outcome;
    try {
        outcome = aes::run_pipeline(config);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "run failed: %s\n", e.what());
        return 2;
    }
    if (outcome.exit_code == 1) {
        print_violations(outcome.violations);
        return 1;
    }

    std::printf("%-16s %-5s %-14s %10s %10s %10s %5s\n", "model", "level", "trait", "qwk",
                "ci_low", "ci_high", "n");
    for (const auto& row : outcome.report.rows) {
        std::printf("%-16s %-5s %-14s %10.4f %10.4f %10.4f %5d\n", row.model.c_str(),
                    row.level == 0 ? "-" : std::to_string(row.level).c_str(), row.trait.c_str(),
                    row.qwk, row.ci_low, row.ci_high, row.n);
    }
    for (const auto& [model, stats] : outcome.gateway_stats) {
        std::printf("# %s: %llu dispatched, %llu backend calls, %llu cache hits\n", model.c_str(),
                    static_cast<unsigned long long>(stats.dispatched),
                    static_cast<unsigned long long>(stats.backend_calls),
                    static_cast<unsigned long long>(stats.cache_hits));
    }
    std::printf("report written to %s\n", outcome.run_dir.string().c_str());
    if (outcome.exit_code == 2) {
        std::fprintf(stderr, "error: every completion failed; see parse_failures.csv\n");
    }
    return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trait-based Arabic essay scoring harness"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides overrides;
    bool dry_run = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "Run config JSON file")->required();
        cmd->add_option("--level", overrides.level, "Restrict to one prompt level (1|2|3|all)")
            ->check(CLI::IsMember({"1", "2", "3", "all"}));
        cmd->add_option("--model", overrides.model, "Restrict to one model name (or 'all')");
        cmd->add_option("--seed", overrides.seed, "Override the run seed");
        cmd->add_option("--bootstrap-iters", overrides.bootstrap_iters,
                        "Override bootstrap iteration count");
        cmd->add_option("--out-dir", overrides.out_dir, "Override the output directory");
        cmd->add_option("--max-concurrency", overrides.max_concurrency,
                        "Override per-backend concurrency");
    };

    CLI::App* run_cmd = app.add_subcommand("run", "Execute the full scoring pipeline");
    add_common(run_cmd);
    run_cmd->add_flag("--dry-run", dry_run, "Validate only, dispatch nothing");

    CLI::App* validate_cmd = app.add_subcommand("validate", "Validate a config without running");
    add_common(validate_cmd);

    CLI11_PARSE(app, argc, argv);

    if (app.got_subcommand(validate_cmd)) return run_validate(config_path, overrides);
    return run_run(config_path, overrides, dry_run);
}
