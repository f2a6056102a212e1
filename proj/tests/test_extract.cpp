#include <doctest.h>

#include <cmath>

#include "cqasum/error.hpp"
#include "cqasum/extract.hpp"
#include "cqasum/metrics.hpp"
#include "cqasum/rng.hpp"

using namespace cqasum;

namespace {

QAPair pair(const std::string& id, const std::string& q, const std::string& a, std::optional<bool> seed) {
    return {id, "E", id + "-q", q, a, seed};
}

} // namespace

TEST_CASE("seedqas summary") {
    CHECK(seedqas_summary({pair("a", "Does it fit?", "Yes.", true)}) == "Does it fit? Yes.");
    CHECK_THROWS_AS(seedqas_summary({pair("a", "q ?", "a .", false), pair("b", "r ?", "b .", std::nullopt)}),
                    NoSeedLabels);
    const std::vector<QAPair> qas = {pair("a", "Is it loud?", "Quiet enough.", true),
                                     pair("b", "Other?", "No.", false),
                                     pair("c", "Does it float?", "It floats, yes.", true)};
    const Tokens out = tokenize(seedqas_summary(qas));
    CHECK(out.size() == qas[0].tokens().size() + qas[2].tokens().size());
}

TEST_CASE("idf cosine") {
    const IdfTable ones = {{"a", 1.0}, {"b", 1.0}, {"c", 1.0}};
    CHECK(idf_cosine({"a", "b"}, {"a", "c"}, ones) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(idf_cosine({"a", "b"}, {"a", "b"}, ones) == doctest::Approx(1.0));
    CHECK(idf_cosine({"a"}, {"c"}, ones) == 0.0);
    CHECK(idf_cosine({}, {"c"}, ones) == 0.0);
}

TEST_CASE("power iteration") {
    SUBCASE("uniform matrix") {
        const Eigen::MatrixXd m = Eigen::MatrixXd::Constant(4, 4, 0.25);
        const auto p = power_iteration(m);
        for (int i = 0; i < 4; ++i) CHECK(p(i) == doctest::Approx(0.25).epsilon(1e-10));
    }
    SUBCASE("two-state swap") {
        Eigen::MatrixXd m(2, 2);
        m << 0, 1, 1, 0;
        for (double d : {0.0, 0.15, 0.5, 0.9}) {
            PowerIterationOptions o;
            o.teleport = d;
            const auto p = power_iteration(m, o);
            CHECK(std::abs(p(0) - 0.5) < 1e-9);
            CHECK(std::abs(p(1) - 0.5) < 1e-9);
        }
    }
    SUBCASE("single state") {
        const auto p = power_iteration(Eigen::MatrixXd::Ones(1, 1));
        CHECK(p(0) == doctest::Approx(1.0));
    }
    SUBCASE("non-stochastic rows are rejected") {
        CHECK_THROWS_AS(power_iteration(Eigen::MatrixXd::Constant(2, 2, 0.7)), UsageError);
    }
    SUBCASE("nonconvergence carries the last iterate") {
        Eigen::MatrixXd m(2, 2);
        m << 0, 1, 1, 0;
        PowerIterationOptions o;
        o.teleport = 0.0;
        o.max_iter = 3;
        try {
            power_iteration(m, o, Eigen::Vector2d(1.0, 0.0));
            FAIL("expected NonConvergence");
        } catch (const NonConvergence& e) {
            CHECK(e.last_iterate().size() == 2);
        }
    }
}

TEST_CASE("lexrank") {
    LexRankConfig cfg;
    cfg.budget_words = 100;
    SUBCASE("single unit") {
        const auto r = lexrank({{"a", "b"}}, cfg);
        CHECK(r.selected == std::vector<std::size_t>{0});
        CHECK(r.scores(0) == doctest::Approx(1.0));
    }
    SUBCASE("identical units score uniformly") {
        const auto r = lexrank({{"x", "y"}, {"x", "y"}, {"x", "y"}}, cfg);
        for (int i = 0; i < 3; ++i) CHECK(r.scores(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    }
    SUBCASE("small budget still takes the top unit") {
        cfg.budget_words = 1;
        const auto r = lexrank({{"a", "b", "c"}, {"a", "b", "d"}, {"e", "f", "g"}}, cfg);
        REQUIRE(r.selected.size() == 1);
    }
    SUBCASE("central unit ranks first") {
        const auto r = lexrank({{"battery", "lasts", "long"}, {"battery", "lasts"}, {"battery", "long"}, {"red", "color"}},
                               cfg);
        CHECK(r.selected.front() == 0);
        CHECK(r.scores.sum() == doctest::Approx(1.0));
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(lexrank({}, cfg), UsageError);
        cfg.budget_words = 0;
        CHECK_THROWS_AS(lexrank({{"a"}}, cfg), UsageError);
    }
}

TEST_CASE("lexrank summary respects the budget") {
    const std::vector<QAPair> qas = {pair("a", "does the battery last ?", "the battery lasts all day .", true),
                                     pair("b", "how long is the battery life ?", "battery lasts a day .", false),
                                     pair("c", "what color ?", "it is red .", false)};
    const std::string s = lexrank_summary(qas, 12);
    CHECK(word_count(s) <= 12);
    CHECK_FALSE(s.empty());
    CHECK(extraction_units(qas, UnitGranularity::QaPair).size() == 3);
    CHECK(extraction_units(qas, UnitGranularity::Sentence).size() == 6);
}

TEST_CASE("greedy oracle") {
    SUBCASE("red and blue") {
        const auto r = greedy_oracle_labels({{"red"}, {"green"}, {"blue"}}, {"red", "blue"}, 3);
        CHECK(r.selected == std::vector<std::size_t>{0, 2});
        REQUIRE(r.gain_trace.size() == 2);
        CHECK(r.gain_trace[0].second < r.gain_trace[1].second);
    }
    SUBCASE("disjoint gold selects nothing") {
        CHECK(greedy_oracle_labels({{"a"}, {"b"}}, {"z"}, 2).selected.empty());
    }
    SUBCASE("unit equal to gold") {
        CHECK(greedy_oracle_labels({{"x", "y", "z"}}, {"x", "y", "z"}, 3).selected == std::vector<std::size_t>{0});
    }
    SUBCASE("max_select caps the selection") {
        CHECK(greedy_oracle_labels({{"red"}, {"green"}, {"blue"}}, {"red", "blue", "green"}, 1).selected.size() == 1);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(greedy_oracle_labels({}, {"a"}, 1), UsageError);
        CHECK_THROWS_AS(greedy_oracle_labels({{"a"}}, {"a"}, 0), UsageError);
    }
    SUBCASE("metric is rouge-1 f1 plus rouge-2 f1") {
        const Tokens c = {"a", "b", "c"}, g = {"a", "b", "d"};
        CHECK(rouge12_f1_sum(c, g) == doctest::Approx(rouge_n(c, g, 1).f1 + rouge_n(c, g, 2).f1));
    }
}
