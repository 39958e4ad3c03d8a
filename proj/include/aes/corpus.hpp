#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aes/rubric.hpp"

namespace aes {

/// Integer scores for the seven traits plus the derived total.
struct TraitScoreVector {
    int organization = 0;
    int vocabulary = 0;
    int style = 0;
    int development = 0;
    int mechanics = 0;
    int structure = 0;
    int relevance = 0;
    int total = 0;

    int score(Trait t) const;
    void set_score(Trait t, int value);
    int sum() const;

    /// Builds a vector with total recomputed from the scores.
    static TraitScoreVector from_scores(const std::array<int, kTraitCount>& scores);

    bool operator==(const TraitScoreVector&) const = default;
};

/// Returns every violated invariant (per-trait range and total-sum),
/// empty when the vector is valid.
std::vector<std::string> validate_gold(const TraitScoreVector& v);

struct Essay {
    std::string id;
    std::string prompt_id;
    std::string text;
    std::optional<TraitScoreVector> gold;

    bool operator==(const Essay&) const = default;
};

enum class CorpusFormat { Csv, Jsonl };

std::optional<CorpusFormat> corpus_format_from_string(std::string_view s);

struct CorpusError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Loads all essays, preserving row order. Gold vectors are validated;
/// a row with all score fields absent is an unlabeled essay. Errors name
/// the offending row and field.
std::vector<Essay> load_corpus(const std::filesystem::path& path, CorpusFormat format);

void save_corpus(const std::vector<Essay>& essays, const std::filesystem::path& path,
                 CorpusFormat format);

}  // namespace aes
