#include "aes/response_parser.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

namespace aes {

namespace {

using json = nlohmann::json;

std::string ascii_lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

// JSON keys are matched after lowercasing ASCII and dropping trailing
// periods ("Org." -> "org").
std::string normalize_key(std::string_view key) {
    std::string k = trim(key);
    while (!k.empty() && k.back() == '.') k.pop_back();
    return ascii_lower(std::move(k));
}

std::optional<int> parse_int_strict(std::string_view text) {
    std::string t = trim(text);
    if (t.empty()) return std::nullopt;
    std::size_t pos = t[0] == '-' ? 1 : 0;
    if (pos == t.size()) return std::nullopt;
    if (t.find_first_not_of("0123456789", pos) != std::string::npos) return std::nullopt;
    if (t.size() - pos > 9) return std::nullopt;
    return std::stoi(t);
}

// Integer score from a JSON value: integers, integral floats, and digit
// strings (after Arabic-Indic normalization) are accepted. Values outside
// a sane magnitude are dropped rather than wrapped.
std::optional<int> coerce_score(const json& value) {
    constexpr std::int64_t kMagnitudeCap = 1000000;
    if (value.is_number_integer()) {
        std::int64_t v = value.get<std::int64_t>();
        if (v < -kMagnitudeCap || v > kMagnitudeCap) return std::nullopt;
        return static_cast<int>(v);
    }
    if (value.is_number_float()) {
        double d = value.get<double>();
        if (std::abs(d) > static_cast<double>(kMagnitudeCap)) return std::nullopt;
        if (d == static_cast<double>(static_cast<int>(d))) return static_cast<int>(d);
        return std::nullopt;
    }
    if (value.is_string()) return parse_int_strict(normalize_digits(value.get<std::string>()));
    return std::nullopt;
}

std::string extract_fenced_block(const std::string& text) {
    std::size_t open = text.find("```");
    if (open == std::string::npos) return {};
    std::size_t content = text.find('\n', open + 3);
    if (content == std::string::npos) content = open + 3; else ++content;
    std::size_t close = text.find("```", content);
    if (close == std::string::npos) return text.substr(content);
    return text.substr(content, close - content);
}

// First balanced {...} block, tracking strings and escapes. A truncated
// block is completed with the missing closers.
std::string extract_braced_block(const std::string& text) {
    std::size_t start = text.find('{');
    if (start == std::string::npos) return {};
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        char c = text[i];
        if (in_string) {
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}' && --depth == 0) return text.substr(start, i - start + 1);
    }
    std::string out = text.substr(start);
    if (in_string) out.push_back('"');
    out.append(static_cast<std::size_t>(std::max(depth, 0)), '}');
    return out;
}

void strip_trailing_commas(std::string& s) {
    for (std::size_t p = 0; (p = s.find(",}", p)) != std::string::npos;) s.erase(p, 1);
    for (std::size_t p = 0; (p = s.find(",]", p)) != std::string::npos;) s.erase(p, 1);
}

std::optional<json> try_parse_object(std::string candidate) {
    candidate = trim(candidate);
    if (candidate.empty()) return std::nullopt;
    strip_trailing_commas(candidate);
    json doc = json::parse(candidate, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
    return doc;
}

bool matches_variant(const std::string& normalized_key, const std::vector<std::string>& variants) {
    return std::find(variants.begin(), variants.end(), normalized_key) != variants.end();
}

struct Extracted {
    std::map<Trait, int> raw_scores;  // range not yet checked
    std::map<Trait, std::string> justifications;
    std::optional<int> total;
    std::vector<Trait> extra;  // trait keys outside the requested set
};

void extract_from_json(const json& doc, const std::vector<Trait>& requested, bool want_total,
                       const SynonymTable& table, Extracted& out) {
    auto requested_has = [&](Trait t) {
        return std::find(requested.begin(), requested.end(), t) != requested.end();
    };
    for (const auto& [key, value] : doc.items()) {
        std::string k = normalize_key(key);
        std::optional<Trait> trait;
        for (Trait t : kTraits) {
            if (matches_variant(k, table.variants(t))) {
                trait = t;
                break;
            }
        }
        if (!trait && requested.size() == 1 && matches_variant(k, table.score_variants())) {
            trait = requested.front();  // single-trait outputs use a plain "score" key
        }
        if (trait) {
            std::optional<int> score;
            std::string justification;
            if (value.is_object()) {
                if (value.contains("score")) score = coerce_score(value["score"]);
                if (value.contains("justification") && value["justification"].is_string()) {
                    justification = value["justification"].get<std::string>();
                }
            } else {
                score = coerce_score(value);
            }
            if (!score) continue;
            if (!requested_has(*trait)) {
                out.extra.push_back(*trait);
                continue;
            }
            out.raw_scores.emplace(*trait, *score);
            if (!justification.empty()) out.justifications.emplace(*trait, justification);
        } else if (want_total && matches_variant(k, table.total_variants())) {
            out.total = coerce_score(value);
        } else if (requested.size() == 1 && k == "justification" && value.is_string()) {
            out.justifications.emplace(requested.front(), value.get<std::string>());
        }
    }
}

bool is_ascii_alnum(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

// Earliest occurrence of any label variant at a word boundary, followed
// within a short window by an integer.
std::optional<int> scan_labeled_number(const std::string& text, const std::string& lower_text,
                                       const std::vector<std::string>& variants) {
    constexpr std::size_t kWindow = 48;
    std::optional<std::size_t> best_pos;
    std::optional<int> best_value;
    for (const auto& variant : variants) {
        const std::string needle = ascii_lower(variant);
        std::size_t from = 0;
        while (true) {
            std::size_t pos = lower_text.find(needle, from);
            if (pos == std::string::npos) break;
            from = pos + 1;
            if (pos > 0 && is_ascii_alnum(lower_text[pos - 1])) continue;
            std::size_t end = pos + needle.size();
            if (end < lower_text.size() && is_ascii_alnum(lower_text[end])) continue;
            // first integer within the window after the label
            std::optional<int> value;
            std::size_t limit = std::min(text.size(), end + kWindow);
            for (std::size_t i = end; i < limit; ++i) {
                if (std::isdigit(static_cast<unsigned char>(text[i]))) {
                    std::size_t digits_start = i;
                    if (i > end && text[i - 1] == '-') digits_start = i - 1;
                    std::size_t j = i;
                    while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
                    value = parse_int_strict(text.substr(digits_start, j - digits_start));
                    break;
                }
            }
            if (!value) continue;  // label mentioned without a nearby number
            if (!best_pos || pos < *best_pos) {
                best_pos = pos;
                best_value = value;
            }
            break;
        }
    }
    return best_value;
}

ParsedScores parse_core(const std::string& raw, const std::vector<Trait>& requested,
                        bool want_total, const SynonymTable& table) {
    ParsedScores out;
    std::vector<std::string> notes;

    Extracted extracted;
    bool found_any = false;
    if (trim(raw).empty()) {
        notes.push_back("empty output");
    } else {
        // (a) the whole text, (b) the first fenced or braced block
        for (const std::string& candidate :
             {raw, extract_fenced_block(raw), extract_braced_block(raw)}) {
            auto doc = try_parse_object(candidate);
            if (!doc) continue;
            Extracted attempt;
            extract_from_json(*doc, requested, want_total, table, attempt);
            if (!attempt.raw_scores.empty() || attempt.total) {
                extracted = std::move(attempt);
                found_any = true;
                break;
            }
        }
        // (c) labeled-number scan on digit-normalized text
        if (!found_any) {
            const std::string normalized = normalize_digits(raw);
            const std::string lower = ascii_lower(normalized);
            for (Trait t : requested) {
                auto value = scan_labeled_number(normalized, lower, table.variants(t));
                if (!value && requested.size() == 1) {
                    value = scan_labeled_number(normalized, lower, table.score_variants());
                }
                if (value) extracted.raw_scores.emplace(t, *value);
            }
            if (want_total) {
                extracted.total = scan_labeled_number(normalized, lower, table.total_variants());
            }
        }
    }

    for (const auto& [t, score] : extracted.raw_scores) {
        auto [lo, hi] = trait_range(t);
        if (score < lo || score > hi) {
            notes.push_back(std::string(trait_name(t)) + " out of range: " + std::to_string(score) +
                            " (expected " + std::to_string(lo) + ".." + std::to_string(hi) + ")");
            continue;
        }
        out.scores.emplace(t, score);
        auto jt = extracted.justifications.find(t);
        if (jt != extracted.justifications.end()) out.justifications.emplace(t, jt->second);
    }
    out.model_reported_total = extracted.total;
    out.ignored = std::move(extracted.extra);
    std::sort(out.ignored.begin(), out.ignored.end());
    out.ignored.erase(std::unique(out.ignored.begin(), out.ignored.end()), out.ignored.end());

    std::vector<std::string> missing;
    for (Trait t : requested) {
        if (!out.scores.count(t)) missing.push_back(std::string(trait_name(t)));
    }
    if (out.scores.size() == requested.size()) {
        out.status = ParseStatus::Parsed;
    } else if (!out.scores.empty()) {
        out.status = ParseStatus::Partial;
        std::string m = "missing: ";
        for (std::size_t i = 0; i < missing.size(); ++i) m += (i ? ", " : "") + missing[i];
        notes.push_back(m);
    } else {
        out.status = ParseStatus::Failed;
        if (notes.empty()) notes.push_back("no scores found");
    }

    if (!notes.empty()) {
        std::string reason;
        for (std::size_t i = 0; i < notes.size(); ++i) reason += (i ? "; " : "") + notes[i];
        out.failure_reason = reason;
    }
    return out;
}

}  // namespace

std::string_view parse_status_name(ParseStatus s) {
    switch (s) {
        case ParseStatus::Parsed: return "parsed";
        case ParseStatus::Partial: return "partial";
        case ParseStatus::Failed: return "failed";
    }
    return {};
}

std::string normalize_digits(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size();) {
        auto b0 = static_cast<unsigned char>(text[i]);
        // U+0660-0669: D9 A0..A9, U+06F0-06F9: DB B0..B9
        if (i + 1 < text.size()) {
            auto b1 = static_cast<unsigned char>(text[i + 1]);
            if (b0 == 0xD9 && b1 >= 0xA0 && b1 <= 0xA9) {
                out.push_back(static_cast<char>('0' + (b1 - 0xA0)));
                i += 2;
                continue;
            }
            if (b0 == 0xDB && b1 >= 0xB0 && b1 <= 0xB9) {
                out.push_back(static_cast<char>('0' + (b1 - 0xB0)));
                i += 2;
                continue;
            }
        }
        out.push_back(text[i]);
        ++i;
    }
    return out;
}

const SynonymTable& SynonymTable::builtin() {
    static const SynonymTable table = [] {
        SynonymTable t;
        t.variants_[Trait::Organization] = {"organization", "organisation", "org",
                                            "التنظيم", "تنظيم"};
        t.variants_[Trait::Vocabulary] = {"vocabulary", "vocab", "المفردات", "مفردات"};
        t.variants_[Trait::Style] = {"style", "الأسلوب", "أسلوب", "اسلوب"};
        t.variants_[Trait::Development] = {"development", "dev", "التطوير", "تطوير",
                                           "تطوير الأفكار"};
        t.variants_[Trait::Mechanics] = {"mechanics", "mech", "الآليات", "آليات الكتابة",
                                         "الإملاء والقواعد"};
        t.variants_[Trait::Structure] = {"structure", "struct", "البنية", "بنية", "التركيب"};
        t.variants_[Trait::Relevance] = {"relevance", "rel", "الصلة", "الملاءمة",
                                         "صلة بالموضوع"};
        t.total_variants_ = {"total", "total_score", "overall", "overall_score",
                             "المجموع", "الدرجة الكلية"};
        t.score_variants_ = {"score", "trait_score", "الدرجة", "درجة", "التقييم"};
        return t;
    }();
    return table;
}

SynonymTable SynonymTable::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("synonyms: cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw std::runtime_error("synonyms: " + path.string() + ": " + e.what());
    }
    SynonymTable table = builtin();
    for (const auto& [key, value] : doc.items()) {
        std::vector<std::string>* target = nullptr;
        if (key == "total") target = &table.total_variants_;
        else if (key == "score") target = &table.score_variants_;
        else if (auto t = trait_from_name(key)) target = &table.variants_[*t];
        else throw std::runtime_error("synonyms: unknown key '" + key + "'");
        for (const auto& entry : value) {
            std::string v = normalize_key(entry.get<std::string>());
            if (std::find(target->begin(), target->end(), v) == target->end()) {
                target->push_back(std::move(v));
            }
        }
    }
    return table;
}

const std::vector<std::string>& SynonymTable::variants(Trait t) const {
    return variants_.at(t);
}

const std::vector<std::string>& SynonymTable::total_variants() const {
    return total_variants_;
}

const std::vector<std::string>& SynonymTable::score_variants() const {
    return score_variants_;
}

ParsedScores parse_level1(const std::string& raw, const SynonymTable& table) {
    return parse_core(raw, {kTraits.begin(), kTraits.end()}, /*want_total=*/true, table);
}

ParsedScores parse_level2(const std::string& raw, RaterId rater, const RubricMapping& mapping,
                          const SynonymTable& table) {
    return parse_core(raw, mapping.rubrics_for(rater), /*want_total=*/false, table);
}

ParsedScores parse_level3(const std::string& raw, Trait trait, const SynonymTable& table) {
    return parse_core(raw, {trait}, /*want_total=*/false, table);
}

std::string serialize_scores(const ParsedScores& parsed) {
    nlohmann::ordered_json doc;
    for (Trait t : kTraits) {
        auto it = parsed.scores.find(t);
        if (it == parsed.scores.end()) continue;
        auto jt = parsed.justifications.find(t);
        if (jt == parsed.justifications.end()) {
            doc[std::string(trait_name(t))] = it->second;
        } else {
            doc[std::string(trait_name(t))] = {{"score", it->second},
                                               {"justification", jt->second}};
        }
    }
    if (parsed.model_reported_total) doc["total"] = *parsed.model_reported_total;
    return doc.dump();
}

}  // namespace aes
