#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "instill/error.hpp"
#include "instill/oracle_backend.hpp"
#include "instill/rankers.hpp"
#include "support.hpp"

using namespace instill;

namespace {

std::vector<std::size_t> ranks(const RankedList& list, const std::vector<std::string>& order) {
    std::vector<std::size_t> r;
    for (const auto& id : order) r.push_back(list.rank_of(id));
    return r;
}

GenerationResult logprobs(std::vector<double> lp) {
    GenerationResult r;
    r.text = "q";
    r.target_token_logprobs = std::move(lp);
    return r;
}

}  // namespace

TEST(ScoresToRanking, Examples) {
    const std::vector<std::string> ids{"a", "b", "c"};
    auto r = scores_to_ranking("q", std::vector<double>{0.2, 0.9, 0.5}, ids);
    EXPECT_EQ(ranks(r, ids), (std::vector<std::size_t>{3, 1, 2}));
    r = scores_to_ranking("q", std::vector<double>{1.0, 1.0, 1.0}, ids);
    EXPECT_EQ(ranks(r, ids), (std::vector<std::size_t>{1, 2, 3}));
    r = scores_to_ranking("q", std::vector<double>{1.0 / 3, 1.0, 0.5}, ids);
    EXPECT_EQ(ranks(r, ids), (std::vector<std::size_t>{3, 1, 2}));
}

TEST(ScoresToRankingProperty, StrictlyIncreasingTransformKeepsRanking) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> s(8);
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < s.size(); ++i) {
            s[i] = std::round(u(rng) * 4) / 4;  // forces ties
            ids.push_back("d" + std::to_string(i));
        }
        std::vector<double> t;
        for (double x : s) t.push_back(std::exp(3 * x) - 7.0);
        EXPECT_EQ(ranks(scores_to_ranking("q", s, ids), ids), ranks(scores_to_ranking("q", t, ids), ids));
    }
}

TEST(RelevanceGeneration, ScoreBranches) {
    EXPECT_DOUBLE_EQ(relevance_generation_score({YesNo::yes, 0.9}), 1.9);
    EXPECT_DOUBLE_EQ(relevance_generation_score({YesNo::no, 0.8}), 0.2);
    EXPECT_DOUBLE_EQ(relevance_generation_score({YesNo::yes, 1.0}), 2.0);
    EXPECT_DOUBLE_EQ(relevance_generation_score({YesNo::other, 0.0}), 1.0);
}

TEST(RelevanceGeneration, RanksByOracleAndCountsMissingProbabilities) {
    test::GradedFixture fx({0, 3, 1});
    OracleBackend oracle(fx.truth, {}, Task::passage);
    RankerContext ctx{oracle};
    auto result = rank_pointwise_rg(ctx, fx.candidates);
    EXPECT_EQ(result.ranking.entries[0].doc_id, "d2");
    EXPECT_EQ(result.ranking.entries[2].doc_id, "d1");
    EXPECT_EQ(result.stats.calls, 3u);

    test::ScriptedBackend bare([](const GenerationRequest&) { return test::text_result("Yes"); });
    RankerContext bare_ctx{bare};
    auto degraded = rank_pointwise_rg(bare_ctx, fx.candidates);
    EXPECT_EQ(degraded.stats.missing_probabilities, 3u);
    for (double s : degraded.scores) EXPECT_DOUBLE_EQ(s, 2.0);
}

TEST(QueryGeneration, MeanTokenLogprob) {
    test::GradedFixture fx({1, 2});
    test::ScriptedBackend backend([&](const GenerationRequest& r) {
        EXPECT_EQ(r.echo_target, fx.query.text);
        EXPECT_EQ(r.prompt.find(fx.query.text), std::string::npos);
        return r.prompt.find("number 1") != std::string::npos ? logprobs({-1.0, -2.0}) : logprobs({-0.1});
    });
    RankerContext ctx{backend};
    auto result = rank_pointwise_qg(ctx, fx.candidates);
    EXPECT_DOUBLE_EQ(result.scores[0], -1.5);
    EXPECT_DOUBLE_EQ(result.scores[1], -0.1);
    EXPECT_EQ(result.ranking.entries[0].doc_id, "d2");
}

TEST(QueryGeneration, MissingLogprobsIsCapabilityError) {
    test::GradedFixture fx({1, 2});
    test::ScriptedBackend backend([](const GenerationRequest&) { return test::text_result("q"); });
    RankerContext ctx{backend};
    EXPECT_THROW(rank_pointwise_qg(ctx, fx.candidates), CapabilityError);
}

TEST(Pairwise, ConsistentComparatorScores) {
    test::GradedFixture fx({3, 2, 1});
    OracleBackend oracle(fx.truth, {}, Task::passage);
    RankerContext ctx{oracle};
    auto result = rank_pairwise_allpair(ctx, fx.candidates);
    EXPECT_EQ(result.scores, (std::vector<double>{4.0, 2.0, 0.0}));
}

TEST(Pairwise, NeitherBothWays) {
    test::GradedFixture fx({1, 1});
    test::ScriptedBackend backend([](const GenerationRequest&) { return test::text_result("Neither"); });
    RankerContext ctx{backend};
    auto result = rank_pairwise_allpair(ctx, fx.candidates);
    EXPECT_EQ(result.scores, (std::vector<double>{1.0, 1.0}));
    EXPECT_EQ(backend.calls(), 2u);
}

TEST(Pairwise, ComparePairMapping) {
    test::GradedFixture fx({1, 2});
    for (auto [text, value] : std::vector<std::pair<std::string, double>>{
             {"Passage A", 1.0}, {"Passage B", 0.0}, {"???", 0.5}}) {
        test::ScriptedBackend backend([&](const GenerationRequest&) { return test::text_result(text); });
        RankerContext ctx{backend};
        EXPECT_EQ(compare_pair(ctx, fx.query, fx.candidates.docs[0], fx.candidates.docs[1]), value) << text;
    }
}

TEST(AggregationProperty, ConservationAndBounds) {
    std::mt19937_64 rng(99);
    const double values[] = {0.0, 0.5, 1.0};
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = std::uniform_int_distribution<std::size_t>(2, 20)(rng);
        ComparisonMatrix m(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) m.set(i, j, values[std::uniform_int_distribution<int>(0, 2)(rng)]);
        auto s = aggregate_allpair(m);
        double total = 0.0;
        for (double x : s) {
            EXPECT_GE(x, 0.0);
            EXPECT_LE(x, 2.0 * static_cast<double>(n - 1));
            total += x;
        }
        EXPECT_EQ(total, static_cast<double>(n * (n - 1)));
    }
}

TEST(AggregationProperty, AntisymmetricComparatorGivesTwiceWins) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<int> grades{0, 1, 2, 3, 4, 5, 6, 7};
        std::shuffle(grades.begin(), grades.end(), rng);
        test::GradedFixture fx(grades);
        OracleConfig c;
        c.max_grade = 7;
        OracleBackend oracle(fx.truth, c, Task::passage);
        RankerContext ctx{oracle};
        ComparisonMatrix m(grades.size());
        for (std::size_t i = 0; i < grades.size(); ++i)
            for (std::size_t j = 0; j < grades.size(); ++j)
                if (i != j) m.set(i, j, compare_pair(ctx, fx.query, fx.candidates.docs[i], fx.candidates.docs[j]));
        auto s = aggregate_allpair(m);
        for (std::size_t i = 0; i < grades.size(); ++i) {
            double wins = 0.0;
            for (std::size_t j = 0; j < grades.size(); ++j) {
                if (i == j) continue;
                EXPECT_EQ(m.at(i, j) + m.at(j, i), 1.0);
                wins += m.at(i, j);
            }
            EXPECT_EQ(s[i], 2.0 * wins);
        }
    }
}

TEST(CallCounts, ExactPerStrategy) {
    std::vector<int> grades{3, 0, 1, 2, 0, 1, 3, 2, 0, 1};
    test::GradedFixture fx(grades);
    OracleBackend oracle(fx.truth, {}, Task::passage);
    CallCounter counter;
    RankerContext ctx{oracle, TemplateSet::builtin(), Task::passage, &counter};
    rank_pointwise_rg(ctx, fx.candidates);
    rank_pairwise_allpair(ctx, fx.candidates);
    rank_listwise_window(ctx, fx.candidates, {4, 2, 1});
    EXPECT_EQ(counter.calls(strategy::kPointwiseRg), 10u);
    EXPECT_EQ(counter.calls(strategy::kPairwiseAllpair), 90u);
    EXPECT_EQ(counter.calls(strategy::kListwise), 4u);
}

TEST(CallCountsProperty, ListwiseMatchesClosedForm) {
    for (std::size_t n = 2; n <= 30; ++n)
        for (std::size_t w = 2; w <= 12; ++w)
            for (std::size_t s = 1; s < w; ++s)
                for (std::size_t passes = 1; passes <= 2; ++passes) {
                    const std::size_t ew = std::min(w, n), es = std::min(s, ew - 1);
                    const std::size_t expected = passes * (n > ew ? (n - ew + es - 1) / es + 1 : 1);
                    ASSERT_EQ(listwise_call_count(n, {w, s, passes}), expected) << n << " " << w << " " << s;
                }
    std::vector<int> grades(13, 1);
    test::GradedFixture fx(grades);
    for (std::size_t w = 2; w <= 6; ++w)
        for (std::size_t s = 1; s < w; ++s) {
            test::ScriptedBackend backend([](const GenerationRequest&) { return test::text_result("[1] > [2]"); });
            RankerContext ctx{backend};
            rank_listwise_window(ctx, fx.candidates, {w, s, 1});
            EXPECT_EQ(backend.calls(), listwise_call_count(13, {w, s, 1}));
        }
}

TEST(Listwise, SingleWindowUsesParsedPermutation) {
    test::GradedFixture fx({1, 1, 1});
    test::ScriptedBackend backend([](const GenerationRequest&) { return test::text_result("[3] > [1] > [2]"); });
    RankerContext ctx{backend};
    auto result = rank_listwise_window(ctx, fx.candidates, {3, 1, 1});
    EXPECT_EQ(backend.calls(), 1u);
    EXPECT_EQ(result.ranking.entries[0].doc_id, "d3");
    EXPECT_EQ(result.ranking.entries[1].doc_id, "d1");
    EXPECT_EQ(result.ranking.entries[2].doc_id, "d2");
    EXPECT_DOUBLE_EQ(result.scores[2], 1.0);
    EXPECT_DOUBLE_EQ(result.scores[1], 1.0 / 3);
}

TEST(ListwiseProperty, PerfectOracleBubblesBestToTop) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<int> grades(10);
        for (auto& g : grades) g = std::uniform_int_distribution<int>(0, 2)(rng);
        grades[std::uniform_int_distribution<std::size_t>(0, 9)(rng)] = 3;
        test::GradedFixture fx(grades);
        OracleBackend oracle(fx.truth, {}, Task::passage);
        RankerContext ctx{oracle};
        auto result = rank_listwise_window(ctx, fx.candidates, {4, 2, 1});
        EXPECT_EQ(fx.qrels.grade("q1", result.ranking.entries[0].doc_id), 3);
    }
}

TEST(Rankers, ParallelismDoesNotChangeResults) {
    std::vector<int> grades{3, 0, 1, 2, 0, 1, 3, 2};
    test::GradedFixture fx(grades);
    OracleConfig c;
    c.comparator_accuracy = 0.7;
    c.position_bias = 0.2;
    c.pointwise_noise = 0.3;
    OracleBackend oracle(fx.truth, c, Task::passage);
    RankerContext serial{oracle};
    RankerContext parallel{oracle, TemplateSet::builtin(), Task::passage, nullptr, 4};
    EXPECT_EQ(rank_pairwise_allpair(serial, fx.candidates).scores, rank_pairwise_allpair(parallel, fx.candidates).scores);
    EXPECT_EQ(rank_pointwise_rg(serial, fx.candidates).scores, rank_pointwise_rg(parallel, fx.candidates).scores);
}

TEST(Rankers, DegenerateCandidateSetsNeedNoCalls) {
    test::GradedFixture fx({2});
    test::ScriptedBackend backend([](const GenerationRequest&) { return test::text_result("Yes"); });
    RankerContext ctx{backend};
    EXPECT_EQ(rank_pairwise_allpair(ctx, fx.candidates).ranking.size(), 1u);
    EXPECT_EQ(rank_listwise_window(ctx, fx.candidates).ranking.size(), 1u);
    EXPECT_EQ(backend.calls(), 0u);
}

TEST(Rankers, MovieTaskUsesMovieTemplates) {
    test::GradedFixture fx({0, 1});
    OracleBackend oracle(fx.truth, {}, Task::movie);
    RankerContext ctx{oracle, TemplateSet::builtin(), Task::movie};
    EXPECT_EQ(rank_pairwise_allpair(ctx, fx.candidates).ranking.entries[0].doc_id, "d2");
    EXPECT_EQ(rank_pointwise_rg(ctx, fx.candidates).ranking.entries[0].doc_id, "d2");
    EXPECT_EQ(rank_listwise_window(ctx, fx.candidates).ranking.entries[0].doc_id, "d2");
}
