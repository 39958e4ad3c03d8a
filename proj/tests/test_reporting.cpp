#include <doctest.h>

#include <set>

#include "aes/reporting.hpp"
#include "aes/rubric.hpp"
#include "test_util.hpp"

using namespace aes;

namespace {

std::vector<GroupResult> synthetic_results(const std::string& model, int level) {
    std::vector<GroupResult> out;
    double q = 0.1;
    for (const auto& label : report_trait_order()) {
        AgreementResult r;
        r.label = label;
        r.qwk_value = q;
        r.ci_low = q - 0.05;
        r.ci_high = q + 0.05;
        r.n_essays = 20;
        r.bootstrap_iters = 1000;
        r.seed = 7;
        q += 0.01;
        out.push_back({model, level, std::move(r)});
    }
    return out;
}

RunMetadata metadata() {
    RunMetadata m;
    m.config_digest = "cafebabe00000000";
    m.seed = 7;
    m.bootstrap_iters = 1000;
    m.alpha = 0.05;
    m.started_at = "2026-01-01T00:00:00Z";
    m.finished_at = "2026-01-01T00:00:30Z";
    m.threshold = 0.72;
    return m;
}

}  // namespace

TEST_CASE("one model, three levels -> 24 rows plus the reference row") {
    std::vector<GroupResult> results;
    std::vector<GroupKey> requested;
    for (int level : {1, 2, 3}) {
        auto group = synthetic_results("fanar", level);
        results.insert(results.end(), group.begin(), group.end());
        requested.emplace_back("fanar", level);
    }
    auto report = build_report(results, requested, {}, {}, metadata());
    REQUIRE(report.rows.size() == 25);  // 3 x 8 + threshold reference

    // canonical ordering inside each group
    CHECK(report.rows[0].trait == "organization");
    CHECK(report.rows[6].trait == "relevance");
    CHECK(report.rows[7].trait == "total");
    CHECK(report.rows[0].level == 1);
    CHECK(report.rows[8].level == 2);

    const auto& reference = report.rows.back();
    CHECK(reference.model == "human_reference");
    CHECK(reference.trait == "threshold");
    CHECK(reference.qwk == 0.72);
}

TEST_CASE("skipped groups are absent, noted in metadata") {
    auto results = synthetic_results("gpt", 1);
    auto meta = metadata();
    meta.threshold.reset();
    meta.skipped_groups = {"gpt:L3"};  // cost flag
    auto report = build_report(results, {{"gpt", 1}}, {}, {}, meta);
    CHECK(report.rows.size() == 8);
    REQUIRE(report.metadata.skipped_groups.size() == 1);
    CHECK(report.metadata.skipped_groups[0] == "gpt:L3");
}

TEST_CASE("missing groups are an error listing the gaps") {
    auto results = synthetic_results("m1", 1);
    results.pop_back();  // lose the total row
    CHECK_THROWS_WITH_AS(build_report(results, {{"m1", 1}}, {}, {}, metadata()),
                         doctest::Contains("m1:L1:total"), std::runtime_error);

    CHECK_THROWS_WITH_AS(build_report({}, {{"m2", 2}}, {}, {}, metadata()),
                         doctest::Contains("m2:L2"), std::runtime_error);
}

TEST_CASE("emit writes the full artifact set deterministically") {
    testutil::TempDir tmp;
    auto results = synthetic_results("fanar", 3);
    auto report = build_report(results, {{"fanar", 3}}, {{{"fanar", 3}, 0.25}},
                               {{"essay_001", 3, "trait:style", "fanar", "failed: no scores found"}},
                               metadata());

    emit(report, tmp.path / "a");
    emit(report, tmp.path / "b");

    std::set<std::string> expected = {"summary.csv", "summary.json", "parse_failures.csv"};
    for (const auto& label : report_trait_order()) expected.insert("ci_" + label + ".csv");
    for (const auto& name : expected) {
        CAPTURE(name);
        REQUIRE(std::filesystem::exists(tmp.path / "a" / name));
        CHECK(testutil::read_file(tmp.path / "a" / name) ==
              testutil::read_file(tmp.path / "b" / name));
    }
    CHECK(expected.size() == 3 + 8);  // eight ci_*.csv files, traits plus total

    auto summary = testutil::read_file(tmp.path / "a" / "summary.csv");
    CHECK(summary.find("0.100000") != std::string::npos);  // fixed 6-decimal reals
    CHECK(summary.find("0.250000") != std::string::npos);  // parse failure rate column

    auto failures = testutil::read_file(tmp.path / "a" / "parse_failures.csv");
    CHECK(failures.find("essay_001") != std::string::npos);
    CHECK(failures.find("no scores found") != std::string::npos);
}

TEST_CASE("summary.csv round-trips into an equal row set") {
    testutil::TempDir tmp;
    auto results = synthetic_results("jais", 2);
    auto report = build_report(results, {{"jais", 2}}, {}, {}, metadata());
    emit(report, tmp.path);

    auto loaded = load_summary_csv(tmp.path / "summary.csv");
    REQUIRE(loaded.size() == report.rows.size());
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded[i].model == report.rows[i].model);
        CHECK(loaded[i].level == report.rows[i].level);
        CHECK(loaded[i].trait == report.rows[i].trait);
        CHECK(loaded[i].qwk == doctest::Approx(report.rows[i].qwk).epsilon(1e-9));
        CHECK(loaded[i].n == report.rows[i].n);
    }
}
