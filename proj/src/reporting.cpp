#include "aes/reporting.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "aes/csv.hpp"
#include "aes/rubric.hpp"

namespace aes {

namespace {

std::string fixed6(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    return buf;
}

std::string level_label(int level) {
    return level == 0 ? "-" : std::to_string(level);
}

int trait_order_index(const std::string& trait) {
    const auto& order = report_trait_order();
    auto it = std::find(order.begin(), order.end(), trait);
    if (it != order.end()) return static_cast<int>(it - order.begin());
    return static_cast<int>(order.size());  // reference rows sort last
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("report: cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("report: write failed for " + path.string());
}

}  // namespace

const std::vector<std::string>& report_trait_order() {
    static const std::vector<std::string> order = [] {
        std::vector<std::string> o;
        for (Trait t : kTraits) o.emplace_back(trait_name(t));
        o.emplace_back("total");
        return o;
    }();
    return order;
}

RunReport build_report(const std::vector<GroupResult>& results,
                       const std::vector<GroupKey>& requested_groups,
                       const std::map<GroupKey, double>& parse_failure_rates,
                       std::vector<ParseFailureEntry> parse_failures, RunMetadata metadata) {
    std::map<GroupKey, std::map<std::string, const AgreementResult*>> by_group;
    for (const auto& gr : results) {
        by_group[{gr.model, gr.level}][gr.result.label] = &gr.result;
    }

    std::vector<std::string> gaps;
    for (const auto& group : requested_groups) {
        auto it = by_group.find(group);
        for (const auto& label : report_trait_order()) {
            if (it == by_group.end() || !it->second.count(label)) {
                gaps.push_back(group.first + ":L" + std::to_string(group.second) + ":" + label);
            }
        }
    }
    if (!gaps.empty()) {
        std::string msg = "report: missing result groups:";
        for (const auto& gap : gaps) msg += " " + gap;
        throw std::runtime_error(msg);
    }

    RunReport report;
    report.metadata = std::move(metadata);
    report.parse_failures = std::move(parse_failures);

    for (const auto& group : requested_groups) {
        double rate = 0.0;
        if (auto it = parse_failure_rates.find(group); it != parse_failure_rates.end()) {
            rate = it->second;
        }
        for (const auto& label : report_trait_order()) {
            const AgreementResult& r = *by_group.at(group).at(label);
            report.rows.push_back({group.first, group.second, label, r.qwk_value, r.ci_low,
                                   r.ci_high, r.n_essays, rate});
        }
    }

    std::sort(report.rows.begin(), report.rows.end(), [](const ReportRow& a, const ReportRow& b) {
        if (a.model != b.model) return a.model < b.model;
        if (a.level != b.level) return a.level < b.level;
        return trait_order_index(a.trait) < trait_order_index(b.trait);
    });

    if (report.metadata.threshold) {
        double t = *report.metadata.threshold;
        report.rows.push_back({"human_reference", 0, "threshold", t, t, t, 0, 0.0});
    }
    return report;
}

void emit(const RunReport& report, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw std::runtime_error("report: cannot create " + out_dir.string() + ": " +
                                 ec.message());
    }

    static const std::vector<std::string> header = {
        "model", "level", "trait", "qwk", "ci_low", "ci_high", "n", "parse_failure_rate"};

    std::string summary = csv::join_row(header);
    for (const auto& row : report.rows) {
        summary += csv::join_row({row.model, level_label(row.level), row.trait, fixed6(row.qwk),
                                  fixed6(row.ci_low), fixed6(row.ci_high), std::to_string(row.n),
                                  fixed6(row.parse_failure_rate)});
    }
    write_file(out_dir / "summary.csv", summary);

    nlohmann::ordered_json doc;
    nlohmann::ordered_json meta;
    meta["config_digest"] = report.metadata.config_digest;
    meta["seed"] = report.metadata.seed;
    meta["bootstrap_iters"] = report.metadata.bootstrap_iters;
    meta["alpha"] = report.metadata.alpha;
    meta["started_at"] = report.metadata.started_at;
    meta["finished_at"] = report.metadata.finished_at;
    if (report.metadata.threshold) meta["threshold"] = *report.metadata.threshold;
    meta["skipped_groups"] = report.metadata.skipped_groups;
    meta["prompt_counts"] = report.metadata.prompt_counts;
    doc["metadata"] = std::move(meta);
    doc["rows"] = nlohmann::ordered_json::array();
    for (const auto& row : report.rows) {
        doc["rows"].push_back({{"model", row.model},
                               {"level", row.level},
                               {"trait", row.trait},
                               {"qwk", fixed6(row.qwk)},
                               {"ci_low", fixed6(row.ci_low)},
                               {"ci_high", fixed6(row.ci_high)},
                               {"n", row.n},
                               {"parse_failure_rate", fixed6(row.parse_failure_rate)}});
    }
    write_file(out_dir / "summary.json", doc.dump(2) + "\n");

    // one plot-data file per trait plus total
    for (const auto& label : report_trait_order()) {
        std::string content = csv::join_row({"model", "level", "qwk", "ci_low", "ci_high"});
        for (const auto& row : report.rows) {
            if (row.trait != label) continue;
            content += csv::join_row({row.model, level_label(row.level), fixed6(row.qwk),
                                      fixed6(row.ci_low), fixed6(row.ci_high)});
        }
        write_file(out_dir / ("ci_" + label + ".csv"), content);
    }

    std::string failures =
        csv::join_row({"essay_id", "level", "subject", "model", "failure_reason"});
    for (const auto& entry : report.parse_failures) {
        failures += csv::join_row({entry.essay_id, level_label(entry.level), entry.subject,
                                   entry.model, entry.reason});
    }
    write_file(out_dir / "parse_failures.csv", failures);
}

std::vector<ReportRow> load_summary_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("report: cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto rows = csv::parse(text);
    std::vector<ReportRow> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& f = rows[i];
        if (f.size() != 8) {
            throw std::runtime_error("report: bad summary row " + std::to_string(i));
        }
        ReportRow row;
        row.model = f[0];
        row.level = f[1] == "-" ? 0 : std::stoi(f[1]);
        row.trait = f[2];
        row.qwk = std::stod(f[3]);
        row.ci_low = std::stod(f[4]);
        row.ci_high = std::stod(f[5]);
        row.n = std::stoi(f[6]);
        row.parse_failure_rate = std::stod(f[7]);
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace aes
