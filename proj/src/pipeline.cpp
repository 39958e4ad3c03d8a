#include "aes/pipeline.hpp"

#include <cctype>
#include <chrono>
#include <ctime>
#include <fstream>
#include <span>

#include <json.hpp>

#include "aes/agreement.hpp"
#include "aes/prompt_engine.hpp"
#include "aes/response_parser.hpp"
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

std::string sanitize_filename(const std::string& name) {
    std::string out;
    for (char c : name) {
        out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.'
                          ? c
                          : '_');
    }
    return out;
}

std::string group_key(const std::string& model, int level) {
    return model + ":L" + std::to_string(level);
}

ParsedScores failed_parse(const CompletionRecord& record) {
    ParsedScores p;
    p.status = ParseStatus::Failed;
    p.failure_reason =
        "completion status: " + std::string(completion_status_name(record.status));
    return p;
}

struct EssayOutcome {
    std::string essay_id;
    AssembledScores scores;
};

void write_prediction(std::ofstream& out, const std::string& model, int level,
                      const EssayOutcome& outcome) {
    nlohmann::ordered_json row;
    row["essay_id"] = outcome.essay_id;
    row["model"] = model;
    row["level"] = level;
    nlohmann::ordered_json traits = nlohmann::ordered_json::object();
    for (Trait t : kTraits) {
        const AggregatedScore& agg = outcome.scores.per_trait.at(t);
        traits[std::string(trait_name(t))] = {{"raw_mean", agg.raw_mean},
                                              {"final", agg.final_score},
                                              {"substituted_zeros", agg.substituted_zero_count}};
    }
    row["traits"] = std::move(traits);
    row["total"] = outcome.scores.vector.total;
    if (outcome.scores.model_reported_total) {
        row["model_reported_total"] = *outcome.scores.model_reported_total;
    }
    row["had_parse_failure"] = outcome.scores.had_parse_failure;
    out << row.dump() << '\n';
}

}  // namespace

RunOutcome run_pipeline(const RunConfig& config) {
    RunOutcome outcome;
    outcome.violations = validate_config(config);
    if (!outcome.violations.empty()) {
        outcome.exit_code = 1;
        return outcome;
    }

    const auto essays = load_corpus(config.corpus_path, config.corpus_format);
    const RubricMapping mapping = config.mapping_path ? RubricMapping::load(*config.mapping_path)
                                                      : RubricMapping::builtin();
    const SynonymTable table = config.synonyms_path ? SynonymTable::load(*config.synonyms_path)
                                                    : SynonymTable::builtin();

    std::map<int, PromptTemplate> templates;
    for (int level : {1, 2, 3}) {
        auto it = config.template_paths.find(level);
        templates[level] = it == config.template_paths.end() ? default_template(level)
                                                             : load_template(level, it->second);
    }
    FewShotSet fewshot;
    bool any_l3 = false;
    for (const auto& model : config.models) any_l3 = any_l3 || model.levels.count(3);
    if (any_l3) fewshot = load_fewshot(config.fewshot_path);

    outcome.run_dir = config.out_dir / config.digest();
    std::filesystem::create_directories(outcome.run_dir);

    RunMetadata metadata;
    metadata.config_digest = config.digest();
    metadata.seed = config.seed;
    metadata.bootstrap_iters = config.bootstrap_iters;
    metadata.alpha = config.alpha;
    metadata.threshold = config.threshold;
    metadata.started_at = iso8601_now();

    std::ofstream predictions(outcome.run_dir / "predictions.jsonl",
                              std::ios::binary | std::ios::trunc);

    std::vector<GroupResult> results;
    std::vector<GroupKey> requested;
    std::map<GroupKey, double> failure_rates;
    std::vector<ParseFailureEntry> failures;
    std::uint64_t total_dispatched = 0;
    std::uint64_t total_ok = 0;

    for (const auto& model : config.models) {
        for (int level : {1, 2, 3}) {
            if (!model.levels.count(level)) {
                metadata.skipped_groups.push_back(group_key(model.name, level));
            }
        }

        Gateway gateway(model.backend,
                        outcome.run_dir / ("cache_" + sanitize_filename(model.name) + ".jsonl"));

        for (int level : model.levels) {
            requested.emplace_back(model.name, level);

            // render
            std::vector<RenderedPrompt> prompts;
            for (const auto& essay : essays) {
                if (level == 1) {
                    prompts.push_back(render_level1(essay, templates.at(1)));
                } else if (level == 2) {
                    for (RaterId r : kRaters) {
                        prompts.push_back(
                            render_level2(essay, rater_spec(r), mapping, templates.at(2)));
                    }
                } else {
                    for (Trait t : kTraits) {
                        prompts.push_back(render_level3(essay, t, fewshot.at(t), templates.at(3)));
                    }
                }
            }
            metadata.prompt_counts[group_key(model.name, level)] = prompts.size();

            // dispatch
            auto records = gateway.complete_all(prompts);
            for (const auto& r : records) {
                ++total_dispatched;
                if (r.status == CompletionStatus::Ok) ++total_ok;
            }

            // parse + assemble, one essay at a time in corpus order
            const std::size_t per_essay = level == 1 ? 1 : level == 2 ? kRaters.size()
                                                                      : kTraits.size();
            std::uint64_t parse_attempts = 0;
            std::uint64_t parse_failures_count = 0;
            std::vector<EssayOutcome> outcomes;

            auto note_parse = [&](const CompletionRecord& record, const ParsedScores& parsed) {
                ++parse_attempts;
                if (parsed.status == ParseStatus::Failed) ++parse_failures_count;
                if (parsed.status != ParseStatus::Parsed && parsed.failure_reason) {
                    failures.push_back({record.essay_id, level, record.subject, model.name,
                                        std::string(parse_status_name(parsed.status)) + ": " +
                                            *parsed.failure_reason});
                } else if (!parsed.ignored.empty()) {
                    std::string names;
                    for (Trait t : parsed.ignored) {
                        names += (names.empty() ? "" : ", ") + std::string(trait_name(t));
                    }
                    failures.push_back({record.essay_id, level, record.subject, model.name,
                                        "ignored extra traits: " + names});
                }
            };

            for (std::size_t e = 0; e < essays.size(); ++e) {
                std::span<const CompletionRecord> group(records.data() + e * per_essay, per_essay);
                EssayOutcome essay_outcome;
                essay_outcome.essay_id = essays[e].id;

                if (level == 1) {
                    const auto& record = group[0];
                    ParsedScores parsed = record.status == CompletionStatus::Ok
                                              ? parse_level1(record.raw_text, table)
                                              : failed_parse(record);
                    note_parse(record, parsed);
                    essay_outcome.scores = assemble_level1(parsed);
                } else if (level == 2) {
                    std::vector<RaterAssessment> assessments;
                    for (std::size_t i = 0; i < kRaters.size(); ++i) {
                        const auto& record = group[i];
                        ParsedScores parsed =
                            record.status == CompletionStatus::Ok
                                ? parse_level2(record.raw_text, kRaters[i], mapping, table)
                                : failed_parse(record);
                        note_parse(record, parsed);
                        assessments.push_back({kRaters[i], parsed.scores, parsed.status});
                    }
                    essay_outcome.scores =
                        assemble_level2(assessments, mapping, config.on_missing_rater);
                } else {
                    std::map<Trait, ParsedScores> per_trait;
                    for (std::size_t i = 0; i < kTraits.size(); ++i) {
                        const auto& record = group[i];
                        ParsedScores parsed = record.status == CompletionStatus::Ok
                                                  ? parse_level3(record.raw_text, kTraits[i], table)
                                                  : failed_parse(record);
                        note_parse(record, parsed);
                        per_trait[kTraits[i]] = std::move(parsed);
                    }
                    essay_outcome.scores = assemble_level3(per_trait);
                }
                write_prediction(predictions, model.name, level, essay_outcome);
                outcomes.push_back(std::move(essay_outcome));
            }

            failure_rates[{model.name, level}] =
                parse_attempts == 0 ? 0.0
                                    : static_cast<double>(parse_failures_count) /
                                          static_cast<double>(parse_attempts);

            // agreement against gold, labeled essays only
            std::vector<std::size_t> labeled;
            for (std::size_t e = 0; e < essays.size(); ++e) {
                if (essays[e].gold) labeled.push_back(e);
            }

            auto group_seed = [&](const std::string& label) {
                return config.seed ^ fnv1a64(group_key(model.name, level) + "|" + label);
            };

            for (Trait t : kTraits) {
                RatingPair pair;
                pair.n_levels = trait_levels(t);
                for (std::size_t e : labeled) {
                    pair.predicted.push_back(outcomes[e].scores.vector.score(t));
                    pair.gold.push_back(essays[e].gold->score(t));
                }
                AgreementResult r;
                r.label = std::string(trait_name(t));
                r.seed = group_seed(r.label);
                r.n_essays = static_cast<int>(labeled.size());
                r.bootstrap_iters = config.bootstrap_iters;
                r.qwk_value = qwk(pair);
                auto ci = bootstrap_ci(pair, config.bootstrap_iters, r.seed, config.alpha);
                r.ci_low = ci.low;
                r.ci_high = ci.high;
                r.degenerate_resamples = ci.degenerate_resamples;
                results.push_back({model.name, level, std::move(r)});
            }
            {
                RatingPair pair;
                pair.n_levels = kTotalLevels;
                for (std::size_t e : labeled) {
                    pair.predicted.push_back(outcomes[e].scores.vector.total);
                    pair.gold.push_back(essays[e].gold->total);
                }
                AgreementResult r;
                r.label = "total";
                r.seed = group_seed(r.label);
                r.n_essays = static_cast<int>(labeled.size());
                r.bootstrap_iters = config.bootstrap_iters;
                r.qwk_value = qwk(pair);
                auto ci = bootstrap_ci(pair, config.bootstrap_iters, r.seed, config.alpha);
                r.ci_low = ci.low;
                r.ci_high = ci.high;
                r.degenerate_resamples = ci.degenerate_resamples;
                results.push_back({model.name, level, std::move(r)});
            }
        }
        outcome.gateway_stats[model.name] = gateway.stats();
    }

    metadata.finished_at = iso8601_now();
    outcome.report =
        build_report(results, requested, failure_rates, std::move(failures), std::move(metadata));
    emit(outcome.report, outcome.run_dir);

    if (total_dispatched > 0 && total_ok == 0) outcome.exit_code = 2;
    return outcome;
}

}  // namespace aes
