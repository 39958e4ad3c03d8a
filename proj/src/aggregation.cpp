#include "aes/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aes {

namespace {

int round_half_away_from_zero(double x) {
    return static_cast<int>(std::lround(x));
}

AggregatedScore passthrough_score(Trait t, const ParsedScores& parsed, int* substitutions,
                                  bool* failed) {
    AggregatedScore agg;
    agg.trait = t;
    auto it = parsed.scores.find(t);
    if (it != parsed.scores.end()) {
        agg.raw_mean = it->second;
        agg.final_score = it->second;
    } else {
        // Missing or unparseable trait contributes the minimum score.
        agg.raw_mean = 0.0;
        agg.final_score = 0;
        agg.substituted_zero_count = 1;
        ++*substitutions;
        *failed = true;
    }
    return agg;
}

}  // namespace

std::optional<MissingRaterPolicy> missing_rater_policy_from_string(std::string_view s) {
    if (s == "zero") return MissingRaterPolicy::Zero;
    if (s == "drop") return MissingRaterPolicy::Drop;
    return std::nullopt;
}

AggregatedScore aggregate_rubric(Trait trait, std::span<const RaterAssessment> assessments,
                                 const RubricMapping& mapping, MissingRaterPolicy policy) {
    const auto& assigned = mapping.raters_for(trait);

    std::map<RaterId, const RaterAssessment*> by_rater;
    for (const auto& a : assessments) {
        if (std::find(assigned.begin(), assigned.end(), a.rater) == assigned.end()) {
            throw std::invalid_argument(std::string("aggregate: rater ") +
                                        static_cast<char>(a.rater) + " is not assigned to " +
                                        std::string(trait_name(trait)));
        }
        if (!by_rater.emplace(a.rater, &a).second) {
            throw std::invalid_argument(std::string("aggregate: duplicate assessment from rater ") +
                                        static_cast<char>(a.rater));
        }
    }
    if (by_rater.size() != assigned.size()) {
        throw std::invalid_argument("aggregate: expected one assessment per assigned rater for " +
                                    std::string(trait_name(trait)));
    }

    auto [lo, hi] = trait_range(trait);
    AggregatedScore agg;
    agg.trait = trait;

    double sum = 0.0;
    int contributing = 0;
    for (RaterId r : assigned) {
        const RaterAssessment& a = *by_rater.at(r);
        auto it = a.scores.find(trait);
        if (it != a.scores.end()) {
            int s = it->second;
            if (s < lo || s > hi) {
                throw std::invalid_argument("aggregate: score " + std::to_string(s) +
                                            " out of range for " + std::string(trait_name(trait)));
            }
            sum += s;
            ++contributing;
            agg.contributing.push_back(r);
        } else {
            ++agg.substituted_zero_count;
            if (policy == MissingRaterPolicy::Zero) {
                // Substituted zero enters the mean and counts as a contributor.
                ++contributing;
                agg.contributing.push_back(r);
            }
        }
    }

    agg.raw_mean = contributing > 0 ? sum / contributing : 0.0;
    agg.final_score = std::clamp(round_half_away_from_zero(agg.raw_mean), lo, hi);
    return agg;
}

TraitScoreVector finalize_vector(const std::map<Trait, AggregatedScore>& per_trait) {
    TraitScoreVector v;
    for (Trait t : kTraits) {
        auto it = per_trait.find(t);
        if (it == per_trait.end()) {
            throw std::invalid_argument("finalize: missing trait " + std::string(trait_name(t)));
        }
        v.set_score(t, it->second.final_score);
    }
    v.total = v.sum();
    return v;
}

AssembledScores assemble_level1(const ParsedScores& parsed) {
    AssembledScores out;
    for (Trait t : kTraits) {
        out.per_trait[t] =
            passthrough_score(t, parsed, &out.substituted_zero_count, &out.had_parse_failure);
    }
    out.model_reported_total = parsed.model_reported_total;
    out.vector = finalize_vector(out.per_trait);
    return out;
}

AssembledScores assemble_level2(std::span<const RaterAssessment> assessments,
                                const RubricMapping& mapping, MissingRaterPolicy policy) {
    if (assessments.size() != kRaters.size()) {
        throw std::invalid_argument("assemble level 2: expected " +
                                    std::to_string(kRaters.size()) + " rater assessments, got " +
                                    std::to_string(assessments.size()));
    }
    std::map<RaterId, const RaterAssessment*> by_rater;
    for (const auto& a : assessments) {
        if (!by_rater.emplace(a.rater, &a).second) {
            throw std::invalid_argument(std::string("assemble level 2: duplicate rater ") +
                                        static_cast<char>(a.rater));
        }
    }

    AssembledScores out;
    for (Trait t : kTraits) {
        std::vector<RaterAssessment> relevant;
        for (RaterId r : mapping.raters_for(t)) relevant.push_back(*by_rater.at(r));
        auto agg = aggregate_rubric(t, relevant, mapping, policy);
        out.substituted_zero_count += agg.substituted_zero_count;
        if (agg.substituted_zero_count > 0) out.had_parse_failure = true;
        out.per_trait[t] = std::move(agg);
    }
    out.vector = finalize_vector(out.per_trait);
    return out;
}

AssembledScores assemble_level3(const std::map<Trait, ParsedScores>& per_trait) {
    if (per_trait.size() != kTraits.size()) {
        throw std::invalid_argument("assemble level 3: expected " + std::to_string(kTraits.size()) +
                                    " single-trait parses, got " +
                                    std::to_string(per_trait.size()));
    }
    AssembledScores out;
    for (Trait t : kTraits) {
        auto it = per_trait.find(t);
        if (it == per_trait.end()) {
            throw std::invalid_argument("assemble level 3: missing trait " +
                                        std::string(trait_name(t)));
        }
        out.per_trait[t] = passthrough_score(t, it->second, &out.substituted_zero_count,
                                             &out.had_parse_failure);
    }
    out.vector = finalize_vector(out.per_trait);
    return out;
}

}  // namespace aes
