#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "aes/corpus.hpp"
#include "aes/rubric.hpp"

namespace aes {

struct RenderError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Template body with {slot} markers. Valid slots per level:
///   L1: {essay}
///   L2: {essay} {rater_focus} {assigned_traits}
///   L3: {essay} {trait_rubric} {examples}
/// output_schema_hint is the response-format instruction appended after
/// the body; the JSON answer skeleton itself is generated per subject.
struct PromptTemplate {
    int level = 1;
    std::string body;
    std::string output_schema_hint;
};

/// Built-in default for a level (English instructions; operators ship
/// their own wording, e.g. the Arabic fixture templates).
PromptTemplate default_template(int level);

/// Body read verbatim from a plain-text file; hint stays the built-in one.
PromptTemplate load_template(int level, const std::filesystem::path& path);

enum class Band { Low, Mid, High };

std::string_view band_name(Band b);

struct FewShotExample {
    Trait trait;
    Band band;
    int score = 0;
    std::string excerpt;
    std::string justification;
};

/// One low/mid/high example per trait, indexed by Band.
using FewShotTriple = std::array<FewShotExample, 3>;
using FewShotSet = std::map<Trait, FewShotTriple>;

/// JSONL file, one example per line with fields
/// trait, band, score, excerpt, justification. All seven traits must be
/// present with exactly one example per band, scores within trait ranges.
FewShotSet load_fewshot(const std::filesystem::path& path);

/// What a rendered prompt asks about: the whole rubric, one rater, or one trait.
struct PromptSubject {
    enum class Kind { All, Rater, TraitSubject };
    Kind kind = Kind::All;
    RaterId rater = RaterId::A;
    Trait trait = Trait::Organization;

    static PromptSubject all() { return {}; }
    static PromptSubject for_rater(RaterId r) { return {Kind::Rater, r, Trait::Organization}; }
    static PromptSubject for_trait(Trait t) { return {Kind::TraitSubject, RaterId::A, t}; }

    std::string to_string() const;
};

struct RenderedPrompt {
    std::string text;
    int level = 1;
    std::string essay_id;
    PromptSubject subject;
    std::string content_hash;  // stable digest of text
    std::string schema_hint;   // JSON answer skeleton for this subject
};

/// Machine-readable answer skeletons; the mock backend fills the
/// `"key": <int a-b>` placeholders.
std::string schema_skeleton_level1();
std::string schema_skeleton_level2(const std::vector<Trait>& assigned);
std::string schema_skeleton_level3(Trait trait);

RenderedPrompt render_level1(const Essay& essay, const PromptTemplate& tmpl);

RenderedPrompt render_level2(const Essay& essay, const RaterSpec& rater,
                             const RubricMapping& mapping, const PromptTemplate& tmpl);

RenderedPrompt render_level3(const Essay& essay, Trait trait, const FewShotTriple& examples,
                             const PromptTemplate& tmpl);

}  // namespace aes
