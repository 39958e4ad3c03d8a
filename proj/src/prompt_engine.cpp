#include "aes/prompt_engine.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "aes/rng.hpp"

namespace aes {

namespace {

using json = nlohmann::json;

const std::set<std::string>& slots_for_level(int level) {
    static const std::map<int, std::set<std::string>> slots = {
        {1, {"essay"}},
        {2, {"essay", "rater_focus", "assigned_traits"}},
        {3, {"essay", "trait_rubric", "examples"}},
    };
    return slots.at(level);
}

// Single pass over the body; replacement values are never rescanned, so
// essays containing braces are safe. Tokens are {lower_snake} only.
std::string substitute(const std::string& body, int level,
                       const std::map<std::string, std::string>& values) {
    const auto& allowed = slots_for_level(level);
    std::set<std::string> used;
    std::string out;
    out.reserve(body.size());

    std::size_t i = 0;
    while (i < body.size()) {
        char c = body[i];
        if (c != '{') {
            out.push_back(c);
            ++i;
            continue;
        }
        std::size_t close = body.find('}', i + 1);
        std::string name =
            close == std::string::npos ? "" : body.substr(i + 1, close - i - 1);
        bool slot_like = !name.empty() &&
                         name.find_first_not_of("abcdefghijklmnopqrstuvwxyz_") == std::string::npos;
        if (!slot_like) {
            out.push_back(c);
            ++i;
            continue;
        }
        if (!allowed.count(name)) {
            throw RenderError("render: slot {" + name + "} is not valid for level " +
                              std::to_string(level));
        }
        out += values.at(name);
        used.insert(name);
        i = close + 1;
    }

    for (const auto& slot : allowed) {
        if (!used.count(slot)) {
            throw RenderError("render: template is missing required slot {" + slot + "}");
        }
    }
    return out;
}

std::string int_placeholder(Trait t) {
    auto [lo, hi] = trait_range(t);
    return "<int " + std::to_string(lo) + "-" + std::to_string(hi) + ">";
}

RenderedPrompt finish(std::string text, int level, const Essay& essay, PromptSubject subject,
                      std::string skeleton, const PromptTemplate& tmpl) {
    text += "\n\n" + tmpl.output_schema_hint + "\n" + skeleton + "\n";
    RenderedPrompt p;
    p.level = level;
    p.essay_id = essay.id;
    p.subject = subject;
    p.schema_hint = std::move(skeleton);
    p.content_hash = to_hex(fnv1a64(text));
    p.text = std::move(text);
    return p;
}

Band band_from_string_or_throw(const std::string& s, const std::string& context) {
    if (s == "low") return Band::Low;
    if (s == "mid") return Band::Mid;
    if (s == "high") return Band::High;
    throw RenderError("few-shot: unknown band '" + s + "' " + context);
}

}  // namespace

std::string_view band_name(Band b) {
    switch (b) {
        case Band::Low: return "low";
        case Band::Mid: return "mid";
        case Band::High: return "high";
    }
    return {};
}

std::string PromptSubject::to_string() const {
    switch (kind) {
        case Kind::All: return "all";
        case Kind::Rater: return std::string("rater:") + static_cast<char>(rater);
        case Kind::TraitSubject: return "trait:" + std::string(trait_name(trait));
    }
    return {};
}

PromptTemplate default_template(int level) {
    static const std::string hint =
        "Respond with exactly one JSON object and nothing else, in this format:";
    switch (level) {
        case 1:
            return {1,
                    "You are an experienced evaluator of Arabic student essays.\n"
                    "Read the essay below carefully, then assign an integer score to each of\n"
                    "the seven traits: Organization (0-5), Vocabulary (0-5), Style (0-5),\n"
                    "Development (0-5), Mechanics (0-5), Structure (0-5) and Relevance (0-2).\n"
                    "Also report the total score (0-32), the sum of the seven trait scores.\n"
                    "\n"
                    "Essay:\n"
                    "{essay}\n",
                    hint};
        case 2:
            return {2,
                    "You are a specialist essay rater. Your area of expertise:\n"
                    "{rater_focus}\n"
                    "\n"
                    "Score only the traits assigned to you, each as an integer:\n"
                    "{assigned_traits}\n"
                    "\n"
                    "Evaluate the following Arabic essay strictly within your specialization\n"
                    "and ignore every other dimension of the writing.\n"
                    "\n"
                    "Essay:\n"
                    "{essay}\n",
                    hint};
        case 3:
            return {3,
                    "You are grading one linguistic trait of an Arabic student essay.\n"
                    "\n"
                    "Scoring guide:\n"
                    "{trait_rubric}\n"
                    "\n"
                    "Scored examples:\n"
                    "{examples}\n"
                    "Compare the essay below to the guide and the examples, then give the\n"
                    "trait score together with a short justification.\n"
                    "\n"
                    "Essay:\n"
                    "{essay}\n",
                    hint};
        default:
            throw RenderError("template: level must be 1, 2 or 3");
    }
}

PromptTemplate load_template(int level, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RenderError("template: cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    PromptTemplate tmpl = default_template(level);
    tmpl.body = buf.str();
    return tmpl;
}

std::string schema_skeleton_level1() {
    std::string out = "{";
    for (Trait t : kTraits) {
        out += "\"" + std::string(trait_name(t)) + "\": " + int_placeholder(t) + ", ";
    }
    out += "\"total\": <int 0-" + std::to_string(kMaxTotal) + ">}";
    return out;
}

std::string schema_skeleton_level2(const std::vector<Trait>& assigned) {
    std::string out = "{";
    bool first = true;
    for (Trait t : kTraits) {
        if (std::find(assigned.begin(), assigned.end(), t) == assigned.end()) continue;
        if (!first) out += ", ";
        out += "\"" + std::string(trait_name(t)) + "\": " + int_placeholder(t);
        first = false;
    }
    out += "}";
    return out;
}

std::string schema_skeleton_level3(Trait trait) {
    return "{\"score\": " + int_placeholder(trait) + ", \"justification\": \"<string>\"}";
}

RenderedPrompt render_level1(const Essay& essay, const PromptTemplate& tmpl) {
    if (tmpl.level != 1) throw RenderError("render: expected a level-1 template");
    std::string text = substitute(tmpl.body, 1, {{"essay", essay.text}});
    return finish(std::move(text), 1, essay, PromptSubject::all(), schema_skeleton_level1(), tmpl);
}

RenderedPrompt render_level2(const Essay& essay, const RaterSpec& rater,
                             const RubricMapping& mapping, const PromptTemplate& tmpl) {
    if (tmpl.level != 2) throw RenderError("render: expected a level-2 template");
    const auto& assigned = mapping.rubrics_for(rater.id);

    std::string traits_block;
    for (Trait t : assigned) {
        auto [lo, hi] = trait_range(t);
        traits_block += "- " + std::string(trait_name(t)) + ": integer " + std::to_string(lo) +
                        "-" + std::to_string(hi) + "\n";
    }

    std::string focus = rater.specialization + " — " + rater.focus;
    std::string text = substitute(tmpl.body, 2,
                                  {{"essay", essay.text},
                                   {"rater_focus", focus},
                                   {"assigned_traits", traits_block}});
    return finish(std::move(text), 2, essay, PromptSubject::for_rater(rater.id),
                  schema_skeleton_level2(assigned), tmpl);
}

RenderedPrompt render_level3(const Essay& essay, Trait trait, const FewShotTriple& examples,
                             const PromptTemplate& tmpl) {
    if (tmpl.level != 3) throw RenderError("render: expected a level-3 template");

    std::set<Band> bands;
    for (const auto& ex : examples) {
        if (ex.trait != trait) {
            throw RenderError("render: few-shot example trait mismatch: expected " +
                              std::string(trait_name(trait)) + ", got " +
                              std::string(trait_name(ex.trait)));
        }
        bands.insert(ex.band);
    }
    for (Band b : {Band::Low, Band::Mid, Band::High}) {
        if (!bands.count(b)) {
            throw RenderError("render: missing band: " + std::string(band_name(b)));
        }
    }

    auto [lo, hi] = trait_range(trait);
    std::string rubric = std::string(trait_guide(trait)) + " Score range: " + std::to_string(lo) +
                         "-" + std::to_string(hi) + ".";

    std::string examples_block;
    for (const auto& ex : examples) {
        examples_block += "Example (" + std::string(band_name(ex.band)) +
                          ", score " + std::to_string(ex.score) + "):\n" + ex.excerpt +
                          "\nJustification: " + ex.justification + "\n\n";
    }

    std::string text = substitute(tmpl.body, 3,
                                  {{"essay", essay.text},
                                   {"trait_rubric", rubric},
                                   {"examples", examples_block}});
    return finish(std::move(text), 3, essay, PromptSubject::for_trait(trait),
                  schema_skeleton_level3(trait), tmpl);
}

FewShotSet load_fewshot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RenderError("few-shot: cannot open " + path.string());

    std::map<Trait, std::map<Band, FewShotExample>> staged;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::exception& e) {
            throw RenderError("few-shot row " + std::to_string(row) + ": bad JSON: " + e.what());
        }
        FewShotExample ex;
        auto trait = trait_from_name(doc.value("trait", ""));
        if (!trait) {
            throw RenderError("few-shot row " + std::to_string(row) + ": unknown trait '" +
                              doc.value("trait", "") + "'");
        }
        ex.trait = *trait;
        ex.band = band_from_string_or_throw(doc.value("band", ""),
                                            "(row " + std::to_string(row) + ")");
        if (!doc.contains("score") || !doc["score"].is_number_integer()) {
            throw RenderError("few-shot row " + std::to_string(row) + ": missing integer score");
        }
        ex.score = doc["score"].get<int>();
        auto [lo, hi] = trait_range(ex.trait);
        if (ex.score < lo || ex.score > hi) {
            throw RenderError("few-shot row " + std::to_string(row) + ": score " +
                              std::to_string(ex.score) + " out of range for " +
                              std::string(trait_name(ex.trait)) + " (" + std::to_string(lo) +
                              ".." + std::to_string(hi) + ")");
        }
        ex.excerpt = doc.value("excerpt", "");
        ex.justification = doc.value("justification", "");
        if (!staged[ex.trait].emplace(ex.band, ex).second) {
            throw RenderError("few-shot row " + std::to_string(row) + ": duplicate band '" +
                              std::string(band_name(ex.band)) + "' for trait '" +
                              std::string(trait_name(ex.trait)) + "'");
        }
    }

    FewShotSet set;
    for (Trait t : kTraits) {
        auto it = staged.find(t);
        if (it == staged.end()) {
            throw RenderError("few-shot: missing trait: " + std::string(trait_name(t)));
        }
        for (Band b : {Band::Low, Band::Mid, Band::High}) {
            if (!it->second.count(b)) {
                throw RenderError("few-shot: missing band: " + std::string(band_name(b)) +
                                  " for trait " + std::string(trait_name(t)));
            }
        }
        set[t] = {it->second.at(Band::Low), it->second.at(Band::Mid), it->second.at(Band::High)};
    }
    return set;
}

}  // namespace aes
