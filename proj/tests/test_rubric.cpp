#include <doctest.h>

#include <algorithm>
#include <set>

#include "aes/rubric.hpp"
#include "test_util.hpp"

using namespace aes;

TEST_CASE("trait ranges and levels") {
    CHECK(trait_range(Trait::Organization) == std::pair{0, 5});
    CHECK(trait_range(Trait::Relevance) == std::pair{0, 2});
    CHECK(trait_levels(Trait::Style) == 6);
    CHECK(trait_levels(Trait::Relevance) == 3);

    int sum_of_maxima = 0;
    for (Trait t : kTraits) sum_of_maxima += trait_range(t).second;
    CHECK(sum_of_maxima == kMaxTotal);
}

TEST_CASE("trait names round-trip") {
    for (Trait t : kTraits) {
        auto back = trait_from_name(trait_name(t));
        REQUIRE(back.has_value());
        CHECK(*back == t);
    }
    CHECK_FALSE(trait_from_name("grammar").has_value());
}

TEST_CASE("five rater specs with fixed labels") {
    const auto& specs = rater_specs();
    REQUIRE(specs.size() == 5);
    CHECK(rater_spec(RaterId::A).specialization == "Organization & Coherence");
    CHECK(rater_spec(RaterId::B).specialization == "Vocabulary & Lexical Variety");
    CHECK(rater_spec(RaterId::C).specialization == "Grammar, Spelling & Mechanics");
    CHECK(rater_spec(RaterId::D).specialization == "Content Development & Reasoning");
    CHECK(rater_spec(RaterId::E).specialization == "Style, Tone & Contextual Appropriateness");
    CHECK(rater_spec(RaterId::C).focus == "Punctuation, syntax, spelling, readability");
}

TEST_CASE("builtin assignment matches the framework tables") {
    const auto& m = RubricMapping::builtin();
    CHECK(m.raters_for(Trait::Organization) ==
          std::vector<RaterId>{RaterId::A, RaterId::D, RaterId::C});
    CHECK(m.raters_for(Trait::Vocabulary) ==
          std::vector<RaterId>{RaterId::B, RaterId::E, RaterId::C});
    CHECK(m.raters_for(Trait::Style) == std::vector<RaterId>{RaterId::B, RaterId::E, RaterId::C});
    CHECK(m.raters_for(Trait::Development) ==
          std::vector<RaterId>{RaterId::D, RaterId::A, RaterId::B});
    CHECK(m.raters_for(Trait::Mechanics) == std::vector<RaterId>{RaterId::C});
    CHECK(m.raters_for(Trait::Structure) ==
          std::vector<RaterId>{RaterId::A, RaterId::B, RaterId::C});
    CHECK(m.raters_for(Trait::Relevance) ==
          std::vector<RaterId>{RaterId::D, RaterId::B, RaterId::E});
}

TEST_CASE("rubrics_for inverts raters_for") {
    const auto& m = RubricMapping::builtin();

    CHECK(m.rubrics_for(RaterId::C) ==
          std::vector<Trait>{Trait::Organization, Trait::Vocabulary, Trait::Style,
                             Trait::Mechanics, Trait::Structure});
    CHECK(m.rubrics_for(RaterId::D) ==
          std::vector<Trait>{Trait::Organization, Trait::Development, Trait::Relevance});

    // exact inverse, quantified over all trait x rater combinations
    for (Trait t : kTraits) {
        for (RaterId r : kRaters) {
            const auto& raters = m.raters_for(t);
            const auto& traits = m.rubrics_for(r);
            bool in_forward = std::find(raters.begin(), raters.end(), r) != raters.end();
            bool in_inverse = std::find(traits.begin(), traits.end(), t) != traits.end();
            CHECK(in_forward == in_inverse);
        }
    }
}

TEST_CASE("mapping invariants enforced on overrides") {
    std::map<Trait, std::vector<RaterId>> base;
    for (Trait t : kTraits) base[t] = {RaterId::A};
    base[Trait::Mechanics] = {RaterId::C};
    base[Trait::Relevance] = {RaterId::B, RaterId::D, RaterId::E};

    CHECK_NOTHROW(RubricMapping::from_assignment(base));

    SUBCASE("empty rater set") {
        base[Trait::Style] = {};
        CHECK_THROWS_AS(RubricMapping::from_assignment(base), std::invalid_argument);
    }
    SUBCASE("mechanics must stay a singleton") {
        base[Trait::Mechanics] = {RaterId::C, RaterId::A};
        CHECK_THROWS_AS(RubricMapping::from_assignment(base), std::invalid_argument);
    }
    SUBCASE("every rater must appear somewhere") {
        base[Trait::Relevance] = {RaterId::B, RaterId::D};  // E vanishes
        CHECK_THROWS_AS(RubricMapping::from_assignment(base), std::invalid_argument);
    }
    SUBCASE("missing trait") {
        base.erase(Trait::Development);
        CHECK_THROWS_AS(RubricMapping::from_assignment(base), std::invalid_argument);
    }
    SUBCASE("duplicate rater within a trait") {
        base[Trait::Style] = {RaterId::A, RaterId::A};
        CHECK_THROWS_AS(RubricMapping::from_assignment(base), std::invalid_argument);
    }
}

TEST_CASE("mapping override file loads and validates") {
    testutil::TempDir tmp;
    auto good = testutil::write_file(tmp.path, "mapping.json", R"({
        "organization": ["A", "D", "C"],
        "vocabulary": ["B", "E", "C"],
        "style": ["B", "E", "C"],
        "development": ["D", "A", "B"],
        "mechanics": ["C"],
        "structure": ["A", "B", "C"],
        "relevance": ["D", "B", "E"]
    })");
    auto m = RubricMapping::load(good);
    CHECK(m.raters_for(Trait::Mechanics) == std::vector<RaterId>{RaterId::C});

    auto bad = testutil::write_file(tmp.path, "bad.json", R"({"organization": ["Z"]})");
    CHECK_THROWS(RubricMapping::load(bad));
}
