#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace aes {

/// The seven scored rubric dimensions, in canonical report order.
enum class Trait {
    Organization,
    Vocabulary,
    Style,
    Development,
    Mechanics,
    Structure,
    Relevance,
};

inline constexpr int kTraitCount = 7;

inline constexpr std::array<Trait, kTraitCount> kTraits = {
    Trait::Organization, Trait::Vocabulary, Trait::Style,   Trait::Development,
    Trait::Mechanics,    Trait::Structure,  Trait::Relevance,
};

/// Maximum achievable total (sum of all trait maxima).
inline constexpr int kMaxTotal = 32;

/// Number of ordinal levels for the recomputed total score (0..32).
inline constexpr int kTotalLevels = 33;

std::string_view trait_name(Trait t);
std::optional<Trait> trait_from_name(std::string_view name);

/// Inclusive score range: (0,5) for six traits, (0,2) for Relevance.
std::pair<int, int> trait_range(Trait t);

/// Number of possible score levels N for a trait (6, or 3 for Relevance).
int trait_levels(Trait t);

/// Short scoring guide injected into level-3 prompts.
std::string_view trait_guide(Trait t);

enum class RaterId : char { A = 'A', B = 'B', C = 'C', D = 'D', E = 'E' };

inline constexpr std::array<RaterId, 5> kRaters = {RaterId::A, RaterId::B, RaterId::C,
                                                   RaterId::D, RaterId::E};

/// One simulated specialist rater.
struct RaterSpec {
    RaterId id;
    std::string specialization;
    std::string focus;
};

const std::array<RaterSpec, 5>& rater_specs();
const RaterSpec& rater_spec(RaterId id);
std::optional<RaterId> rater_from_string(std::string_view s);

/// Trait -> ordered rater set. The built-in assignment is the framework
/// default; an operator override file must satisfy the same invariants:
/// every trait has a non-empty set, Mechanics has exactly one rater, and
/// every rater appears in at least one set. Rater order is preserved only
/// for prompt display; aggregation is order-invariant.
class RubricMapping {
public:
    static const RubricMapping& builtin();

    /// Validating constructor; throws std::invalid_argument on violations.
    static RubricMapping from_assignment(std::map<Trait, std::vector<RaterId>> assignment);

    /// Override file: JSON object, one entry per trait listing rater ids.
    static RubricMapping load(const std::filesystem::path& path);

    const std::vector<RaterId>& raters_for(Trait t) const;

    /// Exact inverse of raters_for, in canonical trait order.
    const std::vector<Trait>& rubrics_for(RaterId r) const;

private:
    RubricMapping() = default;
    std::map<Trait, std::vector<RaterId>> assignment_;
    std::map<RaterId, std::vector<Trait>> inverse_;
};

}  // namespace aes
