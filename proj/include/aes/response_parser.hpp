#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aes/rubric.hpp"

namespace aes {

enum class ParseStatus { Parsed, Partial, Failed };

std::string_view parse_status_name(ParseStatus s);

/// Trait scores extracted from one raw model output. status Parsed means
/// every requested trait was found in range; Failed means no score was
/// recovered (scores empty). Out-of-range values are rejected per trait,
/// never clamped.
struct ParsedScores {
    std::map<Trait, int> scores;
    std::optional<int> model_reported_total;
    std::map<Trait, std::string> justifications;
    ParseStatus status = ParseStatus::Failed;
    std::optional<std::string> failure_reason;
    std::vector<Trait> ignored;  // extra traits dropped by level-2 parsing
};

/// Label variants (English and Arabic) per trait, plus labels for the
/// total and the level-3 "score" key. Extensible from a data file.
class SynonymTable {
public:
    static const SynonymTable& builtin();

    /// Additional variants from a JSON object {"organization": ["..."], ...};
    /// keys "total" and "score" extend those label sets.
    static SynonymTable load(const std::filesystem::path& path);

    const std::vector<std::string>& variants(Trait t) const;
    const std::vector<std::string>& total_variants() const;
    const std::vector<std::string>& score_variants() const;

private:
    std::map<Trait, std::vector<std::string>> variants_;
    std::vector<std::string> total_variants_;
    std::vector<std::string> score_variants_;
};

/// Arabic-Indic digits (U+0660-0669 and U+06F0-06F9) rewritten as ASCII.
std::string normalize_digits(const std::string& text);

/// Extraction order: strict JSON parse of the whole text, then the first
/// fenced/braced block, then a labeled-number scan per trait name.
ParsedScores parse_level1(const std::string& raw,
                          const SynonymTable& table = SynonymTable::builtin());

/// Same strategy restricted to rubrics_for(rater); extra traits are
/// recorded in `ignored`.
ParsedScores parse_level2(const std::string& raw, RaterId rater, const RubricMapping& mapping,
                          const SynonymTable& table = SynonymTable::builtin());

/// One score plus justification for the given trait.
ParsedScores parse_level3(const std::string& raw, Trait trait,
                          const SynonymTable& table = SynonymTable::builtin());

/// Canonical JSON form; parse_level1 of the output round-trips the scores.
std::string serialize_scores(const ParsedScores& parsed);

}  // namespace aes
