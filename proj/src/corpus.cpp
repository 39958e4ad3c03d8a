#include "aes/corpus.hpp"

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "aes/csv.hpp"

namespace aes {

namespace {

using json = nlohmann::json;

const std::vector<std::string> kCsvHeader = {
    "essay_id", "prompt_id",   "text",      "organization", "vocabulary", "style",
    "development", "mechanics", "structure", "relevance",    "total",
};

std::string trim(std::string_view s) {
    auto is_space = [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string read_file_no_bom(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorpusError("corpus: cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
        static_cast<unsigned char>(text[1]) == 0xBB && static_cast<unsigned char>(text[2]) == 0xBF) {
        text.erase(0, 3);
    }
    return text;
}

int parse_score_field(const std::string& raw, const std::string& field, std::size_t row) {
    std::string t = trim(raw);
    std::size_t digits_from = !t.empty() && t[0] == '-' ? 1 : 0;
    bool well_formed = t.size() > digits_from && t.size() - digits_from <= 9 &&
                       t.find_first_not_of("0123456789", digits_from) == std::string::npos;
    if (!well_formed) {
        throw CorpusError("corpus row " + std::to_string(row) + ": field '" + field +
                          "' is not an integer: '" + raw + "'");
    }
    return std::stoi(t);
}

void check_gold(const TraitScoreVector& v, std::size_t row) {
    auto violations = validate_gold(v);
    if (!violations.empty()) {
        std::string msg = "corpus row " + std::to_string(row) + ": invalid gold scores:";
        for (const auto& violation : violations) msg += " [" + violation + "]";
        throw CorpusError(msg);
    }
}

bool is_valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        auto b = static_cast<unsigned char>(s[i]);
        int continuation;
        if (b < 0x80) continuation = 0;
        else if ((b & 0xE0) == 0xC0 && b >= 0xC2) continuation = 1;
        else if ((b & 0xF0) == 0xE0) continuation = 2;
        else if ((b & 0xF8) == 0xF0 && b <= 0xF4) continuation = 3;
        else return false;
        if (i + continuation >= s.size()) return false;
        for (int k = 1; k <= continuation; ++k) {
            if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return false;
        }
        i += 1 + continuation;
    }
    return true;
}

void check_essay(Essay& essay, std::size_t row, std::set<std::string>& ids) {
    essay.text = trim(essay.text);
    if (essay.id.empty()) {
        throw CorpusError("corpus row " + std::to_string(row) + ": field 'essay_id' is empty");
    }
    if (essay.text.empty()) {
        throw CorpusError("corpus row " + std::to_string(row) +
                          ": field 'text' is empty after trimming");
    }
    if (!is_valid_utf8(essay.text)) {
        throw CorpusError("corpus row " + std::to_string(row) +
                          ": field 'text' is not valid UTF-8");
    }
    if (!ids.insert(essay.id).second) {
        throw CorpusError("corpus row " + std::to_string(row) + ": duplicate essay_id '" +
                          essay.id + "'");
    }
}

std::vector<Essay> load_csv(const std::filesystem::path& path) {
    auto rows = csv::parse(read_file_no_bom(path));
    if (rows.empty()) throw CorpusError("corpus: " + path.string() + " is empty");
    if (rows[0] != kCsvHeader) {
        throw CorpusError("corpus: " + path.string() + ": bad header row");
    }

    std::vector<Essay> essays;
    std::set<std::string> ids;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& fields = rows[r];
        if (fields.size() != kCsvHeader.size()) {
            throw CorpusError("corpus row " + std::to_string(r) + ": expected " +
                              std::to_string(kCsvHeader.size()) + " fields, got " +
                              std::to_string(fields.size()));
        }
        Essay essay{fields[0], fields[1], fields[2], std::nullopt};

        int empty_scores = 0;
        for (std::size_t i = 3; i < fields.size(); ++i) {
            if (trim(fields[i]).empty()) ++empty_scores;
        }
        if (empty_scores == 0) {
            TraitScoreVector v;
            for (int i = 0; i < kTraitCount; ++i) {
                v.set_score(kTraits[static_cast<std::size_t>(i)],
                            parse_score_field(fields[static_cast<std::size_t>(3 + i)],
                                              kCsvHeader[static_cast<std::size_t>(3 + i)], r));
            }
            v.total = parse_score_field(fields[10], "total", r);
            check_gold(v, r);
            essay.gold = v;
        } else if (empty_scores != kTraitCount + 1) {
            throw CorpusError("corpus row " + std::to_string(r) +
                              ": gold scores must be all present or all empty");
        }
        check_essay(essay, r, ids);
        essays.push_back(std::move(essay));
    }
    return essays;
}

std::vector<Essay> load_jsonl(const std::filesystem::path& path) {
    std::istringstream in(read_file_no_bom(path));
    std::vector<Essay> essays;
    std::set<std::string> ids;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::exception& e) {
            throw CorpusError("corpus row " + std::to_string(row) + ": bad JSON: " + e.what());
        }
        if (!doc.is_object()) {
            throw CorpusError("corpus row " + std::to_string(row) + ": expected an object");
        }
        Essay essay;
        for (const auto& field : {"essay_id", "prompt_id", "text"}) {
            if (!doc.contains(field) || !doc[field].is_string()) {
                throw CorpusError("corpus row " + std::to_string(row) + ": field '" +
                                  std::string(field) + "' missing or not a string");
            }
        }
        essay.id = doc["essay_id"].get<std::string>();
        essay.prompt_id = doc["prompt_id"].get<std::string>();
        essay.text = doc["text"].get<std::string>();

        auto get_score = [&](const char* field) {
            const auto& value = doc[field];
            std::int64_t v;
            if (!value.is_number_integer() ||
                (v = value.get<std::int64_t>()) < -1000000 || v > 1000000) {
                throw CorpusError("corpus row " + std::to_string(row) + ": field '" +
                                  std::string(field) + "' is not a small integer");
            }
            return static_cast<int>(v);
        };

        int present = 0;
        for (Trait t : kTraits) present += doc.contains(trait_name(t)) ? 1 : 0;
        present += doc.contains("total") ? 1 : 0;
        if (present == kTraitCount + 1) {
            TraitScoreVector v;
            for (Trait t : kTraits) v.set_score(t, get_score(trait_name(t).data()));
            v.total = get_score("total");
            check_gold(v, row);
            essay.gold = v;
        } else if (present != 0) {
            throw CorpusError("corpus row " + std::to_string(row) +
                              ": gold scores must be all present or all absent");
        }
        check_essay(essay, row, ids);
        essays.push_back(std::move(essay));
    }
    return essays;
}

}  // namespace

int TraitScoreVector::score(Trait t) const {
    switch (t) {
        case Trait::Organization: return organization;
        case Trait::Vocabulary: return vocabulary;
        case Trait::Style: return style;
        case Trait::Development: return development;
        case Trait::Mechanics: return mechanics;
        case Trait::Structure: return structure;
        case Trait::Relevance: return relevance;
    }
    return 0;
}

void TraitScoreVector::set_score(Trait t, int value) {
    switch (t) {
        case Trait::Organization: organization = value; return;
        case Trait::Vocabulary: vocabulary = value; return;
        case Trait::Style: style = value; return;
        case Trait::Development: development = value; return;
        case Trait::Mechanics: mechanics = value; return;
        case Trait::Structure: structure = value; return;
        case Trait::Relevance: relevance = value; return;
    }
}

int TraitScoreVector::sum() const {
    int s = 0;
    for (Trait t : kTraits) s += score(t);
    return s;
}

TraitScoreVector TraitScoreVector::from_scores(const std::array<int, kTraitCount>& scores) {
    TraitScoreVector v;
    for (std::size_t i = 0; i < scores.size(); ++i) v.set_score(kTraits[i], scores[i]);
    v.total = v.sum();
    return v;
}

std::vector<std::string> validate_gold(const TraitScoreVector& v) {
    std::vector<std::string> violations;
    for (Trait t : kTraits) {
        auto [lo, hi] = trait_range(t);
        int s = v.score(t);
        if (s < lo || s > hi) {
            violations.push_back(std::string(trait_name(t)) + " out of range: " +
                                 std::to_string(s) + " (expected " + std::to_string(lo) + ".." +
                                 std::to_string(hi) + ")");
        }
    }
    if (v.total != v.sum()) {
        violations.push_back("total mismatch: stored " + std::to_string(v.total) +
                             ", sum of traits " + std::to_string(v.sum()));
    }
    return violations;
}

std::optional<CorpusFormat> corpus_format_from_string(std::string_view s) {
    if (s == "csv") return CorpusFormat::Csv;
    if (s == "jsonl") return CorpusFormat::Jsonl;
    return std::nullopt;
}

std::vector<Essay> load_corpus(const std::filesystem::path& path, CorpusFormat format) {
    if (!std::filesystem::exists(path)) {
        throw CorpusError("corpus: no such file: " + path.string());
    }
    return format == CorpusFormat::Csv ? load_csv(path) : load_jsonl(path);
}

void save_corpus(const std::vector<Essay>& essays, const std::filesystem::path& path,
                 CorpusFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CorpusError("corpus: cannot write " + path.string());

    if (format == CorpusFormat::Csv) {
        out << csv::join_row(kCsvHeader);
        for (const auto& essay : essays) {
            std::vector<std::string> fields = {essay.id, essay.prompt_id, essay.text};
            if (essay.gold) {
                for (Trait t : kTraits) fields.push_back(std::to_string(essay.gold->score(t)));
                fields.push_back(std::to_string(essay.gold->total));
            } else {
                fields.insert(fields.end(), kTraitCount + 1, "");
            }
            out << csv::join_row(fields);
        }
    } else {
        for (const auto& essay : essays) {
            json doc;
            doc["essay_id"] = essay.id;
            doc["prompt_id"] = essay.prompt_id;
            doc["text"] = essay.text;
            if (essay.gold) {
                for (Trait t : kTraits) doc[std::string(trait_name(t))] = essay.gold->score(t);
                doc["total"] = essay.gold->total;
            }
            out << doc.dump() << '\n';
        }
    }
}

}  // namespace aes
