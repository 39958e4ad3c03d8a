#include "aes/rubric.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace aes {

namespace {

using json = nlohmann::json;

constexpr std::array<std::string_view, kTraitCount> kTraitNames = {
    "organization", "vocabulary", "style", "development", "mechanics", "structure", "relevance",
};

}  // namespace

std::string_view trait_name(Trait t) {
    return kTraitNames[static_cast<std::size_t>(t)];
}

std::optional<Trait> trait_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kTraitNames.size(); ++i) {
        if (kTraitNames[i] == name) return kTraits[i];
    }
    return std::nullopt;
}

std::pair<int, int> trait_range(Trait t) {
    return t == Trait::Relevance ? std::pair{0, 2} : std::pair{0, 5};
}

int trait_levels(Trait t) {
    auto [lo, hi] = trait_range(t);
    return hi - lo + 1;
}

std::string_view trait_guide(Trait t) {
    switch (t) {
        case Trait::Organization:
            return "Organization: logical sequencing of ideas, clear paragraphing, "
                   "effective transitions between sections.";
        case Trait::Vocabulary:
            return "Vocabulary: breadth and precision of word choice, lexical variety, "
                   "avoidance of unnecessary repetition.";
        case Trait::Style:
            return "Style: appropriateness of tone and register, stylistic consistency, "
                   "sentence variety.";
        case Trait::Development:
            return "Development: depth of argument, elaboration of ideas, use of evidence "
                   "and examples to support claims.";
        case Trait::Mechanics:
            return "Mechanics: spelling, punctuation and orthographic conventions; "
                   "grammatical correctness at the surface level.";
        case Trait::Structure:
            return "Structure: syntactic well-formedness, sentence construction, overall "
                   "textual architecture.";
        case Trait::Relevance:
            return "Relevance: how directly the essay addresses the assigned writing "
                   "prompt and stays on topic.";
    }
    return {};
}

const std::array<RaterSpec, 5>& rater_specs() {
    static const std::array<RaterSpec, 5> specs = {{
        {RaterId::A, "Organization & Coherence",
         "Logical flow, paragraph transitions, structural clarity"},
        {RaterId::B, "Vocabulary & Lexical Variety",
         "Word choice, lexical diversity, sophistication, repetition"},
        {RaterId::C, "Grammar, Spelling & Mechanics",
         "Punctuation, syntax, spelling, readability"},
        {RaterId::D, "Content Development & Reasoning",
         "Argument quality, elaboration, evidence use"},
        {RaterId::E, "Style, Tone & Contextual Appropriateness",
         "Voice, stylistic consistency, audience alignment"},
    }};
    return specs;
}

const RaterSpec& rater_spec(RaterId id) {
    return rater_specs()[static_cast<std::size_t>(static_cast<char>(id) - 'A')];
}

std::optional<RaterId> rater_from_string(std::string_view s) {
    if (s.size() != 1 || s[0] < 'A' || s[0] > 'E') return std::nullopt;
    return static_cast<RaterId>(s[0]);
}

RubricMapping RubricMapping::from_assignment(std::map<Trait, std::vector<RaterId>> assignment) {
    std::set<RaterId> seen;
    for (Trait t : kTraits) {
        auto it = assignment.find(t);
        if (it == assignment.end() || it->second.empty()) {
            throw std::invalid_argument("rubric mapping: trait '" + std::string(trait_name(t)) +
                                        "' has no raters");
        }
        std::set<RaterId> unique(it->second.begin(), it->second.end());
        if (unique.size() != it->second.size()) {
            throw std::invalid_argument("rubric mapping: duplicate rater for trait '" +
                                        std::string(trait_name(t)) + "'");
        }
        seen.insert(unique.begin(), unique.end());
    }
    if (assignment.size() != kTraits.size()) {
        throw std::invalid_argument("rubric mapping: unknown trait entry present");
    }
    if (assignment.at(Trait::Mechanics).size() != 1) {
        throw std::invalid_argument("rubric mapping: Mechanics must map to exactly one rater");
    }
    for (RaterId r : kRaters) {
        if (!seen.count(r)) {
            throw std::invalid_argument(std::string("rubric mapping: rater ") +
                                        static_cast<char>(r) + " assigned to no trait");
        }
    }

    RubricMapping m;
    m.assignment_ = std::move(assignment);
    for (RaterId r : kRaters) m.inverse_[r] = {};
    for (Trait t : kTraits) {
        for (RaterId r : m.assignment_.at(t)) m.inverse_[r].push_back(t);
    }
    return m;
}

const RubricMapping& RubricMapping::builtin() {
    static const RubricMapping mapping = from_assignment({
        {Trait::Organization, {RaterId::A, RaterId::D, RaterId::C}},
        {Trait::Vocabulary, {RaterId::B, RaterId::E, RaterId::C}},
        {Trait::Style, {RaterId::B, RaterId::E, RaterId::C}},
        {Trait::Development, {RaterId::D, RaterId::A, RaterId::B}},
        {Trait::Mechanics, {RaterId::C}},
        {Trait::Structure, {RaterId::A, RaterId::B, RaterId::C}},
        {Trait::Relevance, {RaterId::D, RaterId::B, RaterId::E}},
    });
    return mapping;
}

RubricMapping RubricMapping::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("rubric mapping: cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw std::invalid_argument("rubric mapping: " + path.string() + ": " + e.what());
    }
    if (!doc.is_object()) {
        throw std::invalid_argument("rubric mapping: " + path.string() + ": expected an object");
    }
    std::map<Trait, std::vector<RaterId>> assignment;
    for (auto& [key, value] : doc.items()) {
        auto trait = trait_from_name(key);
        if (!trait) {
            throw std::invalid_argument("rubric mapping: unknown trait '" + key + "'");
        }
        std::vector<RaterId> raters;
        for (const auto& entry : value) {
            auto r = rater_from_string(entry.get<std::string>());
            if (!r) {
                throw std::invalid_argument("rubric mapping: bad rater id in '" + key + "'");
            }
            raters.push_back(*r);
        }
        assignment[*trait] = std::move(raters);
    }
    return from_assignment(std::move(assignment));
}

const std::vector<RaterId>& RubricMapping::raters_for(Trait t) const {
    return assignment_.at(t);
}

const std::vector<Trait>& RubricMapping::rubrics_for(RaterId r) const {
    return inverse_.at(r);
}

}  // namespace aes
