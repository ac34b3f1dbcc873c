#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "instill/adamw.hpp"
#include "instill/corpus.hpp"
#include "instill/distill.hpp"
#include "instill/prompts.hpp"
#include "instill/rankers.hpp"
#include "instill/ranknet.hpp"

using namespace instill;

namespace {

Corpus random_corpus(std::size_t docs, std::size_t words, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, 999);
    Corpus corpus;
    for (std::size_t d = 0; d < docs; ++d) {
        std::string text;
        for (std::size_t w = 0; w < words; ++w) text += "w" + std::to_string(pick(rng)) + " ";
        corpus.add({"d" + std::to_string(d), std::nullopt, text});
    }
    return corpus;
}

void BM_Bm25Retrieve(benchmark::State& state) {
    const auto corpus = random_corpus(static_cast<std::size_t>(state.range(0)), 50, 1);
    const auto index = PostingsIndex::build(corpus);
    const Query query{"q", "w1 w17 w256 w999"};
    for (auto _ : state) benchmark::DoNotOptimize(retrieve_topk(corpus, index, query, 100));
}
BENCHMARK(BM_Bm25Retrieve)->Arg(1000)->Arg(10000);

void BM_AggregateAllpair(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(2);
    ComparisonMatrix m(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) m.set(i, j, static_cast<double>(rng() % 3) / 2.0);
    for (auto _ : state) benchmark::DoNotOptimize(aggregate_allpair(m));
}
BENCHMARK(BM_AggregateAllpair)->Arg(10)->Arg(100);

void BM_RankNetLossAndGrad(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::vector<std::size_t> ranks(n);
    std::vector<double> scores(n), grad(n);
    for (std::size_t i = 0; i < n; ++i) {
        ranks[i] = i + 1;
        scores[i] = static_cast<double>((i * 7) % n);
    }
    for (auto _ : state) benchmark::DoNotOptimize(ranknet_loss_and_grad(ranks, scores, grad));
}
BENCHMARK(BM_RankNetLossAndGrad)->Arg(10)->Arg(100);

void BM_AdamWStep(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    OptimizerState opt(dim, AdamWParams{});
    std::vector<double> theta(dim, 0.1), grad(dim, 0.01);
    for (auto _ : state) {
        adamw_step(opt, theta, grad);
        benchmark::ClobberMemory();
    }
}
BENCHMARK(BM_AdamWStep)->Arg(7)->Arg(1024);

void BM_StudentRank(benchmark::State& state) {
    const auto corpus = random_corpus(200, 50, 3);
    const auto index = PostingsIndex::build(corpus);
    const Query query{"q", "w1 w2 w3 w4"};
    std::vector<Document> docs(corpus.documents().begin(), corpus.documents().begin() + 10);
    std::vector<std::size_t> ranks{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<TrainingExample> examples{{query, docs, ranks}};
    const auto model = train(examples, index, TrainConfig{}).model;
    const auto candidates = retrieve_topk(corpus, index, query, 100);
    for (auto _ : state) benchmark::DoNotOptimize(student_rank(model, index, candidates));
}
BENCHMARK(BM_StudentRank);

void BM_ParsePermutation(benchmark::State& state) {
    std::string text;
    for (int i = 20; i >= 1; --i) text += "[" + std::to_string(i) + "]" + (i > 1 ? " > " : "");
    for (auto _ : state) benchmark::DoNotOptimize(parse_permutation(text, 20));
}
BENCHMARK(BM_ParsePermutation);

}  // namespace

BENCHMARK_MAIN();
