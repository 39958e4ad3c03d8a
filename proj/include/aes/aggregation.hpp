#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "aes/corpus.hpp"
#include "aes/response_parser.hpp"
#include "aes/rubric.hpp"

namespace aes {

/// One specialist rater's scores for its assigned traits.
struct RaterAssessment {
    RaterId rater = RaterId::A;
    std::map<Trait, int> scores;  // keys restricted to rubrics_for(rater)
    ParseStatus source_status = ParseStatus::Failed;
};

/// A trait's combined score: the exact mean over the assigned raters and
/// its rounded ordinal value.
struct AggregatedScore {
    Trait trait = Trait::Organization;
    double raw_mean = 0.0;
    int final_score = 0;  // round half away from zero, clamped to trait range
    std::vector<RaterId> contributing;
    int substituted_zero_count = 0;
};

/// What to do when an assigned rater produced no usable score:
/// Zero substitutes 0 into the mean (default); Drop shrinks the rater set.
enum class MissingRaterPolicy { Zero, Drop };

std::optional<MissingRaterPolicy> missing_rater_policy_from_string(std::string_view s);

/// Mean of the assigned raters' scores for one trait. `assessments` must
/// hold exactly one entry per rater assigned to the trait; an assessment
/// from an unassigned rater is rejected.
AggregatedScore aggregate_rubric(Trait trait, std::span<const RaterAssessment> assessments,
                                 const RubricMapping& mapping,
                                 MissingRaterPolicy policy = MissingRaterPolicy::Zero);

/// Sums the seven finals into a TraitScoreVector; all traits must be present.
TraitScoreVector finalize_vector(const std::map<Trait, AggregatedScore>& per_trait);

/// Per-essay assembly result for one (model, level).
struct AssembledScores {
    TraitScoreVector vector;
    std::map<Trait, AggregatedScore> per_trait;
    std::optional<int> model_reported_total;  // recorded, never overrides the recomputed total
    int substituted_zero_count = 0;
    bool had_parse_failure = false;
};

/// L1: scores pass through, missing traits substitute 0.
AssembledScores assemble_level1(const ParsedScores& parsed);

/// L2: exactly one assessment per rater A-E; Eq.-style per-trait averaging.
AssembledScores assemble_level2(std::span<const RaterAssessment> assessments,
                                const RubricMapping& mapping,
                                MissingRaterPolicy policy = MissingRaterPolicy::Zero);

/// L3: exactly seven single-trait parses keyed by trait.
AssembledScores assemble_level3(const std::map<Trait, ParsedScores>& per_trait);

}  // namespace aes
