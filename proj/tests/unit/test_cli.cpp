#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <sys/wait.h>

#include "instill/error.hpp"
#include "instill/io.hpp"
#include "instill_cli/commands.hpp"
#include "instill_cli/config.hpp"
#include "support.hpp"

using namespace instill;
using namespace instill::cli;

namespace {

struct Exec {
    int code;
    std::string out;
};

/// Runs the instill binary with stderr merged into the captured output.
Exec run_cli(const std::string& args) {
    const std::string cmd = std::string(INSTILL_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    std::string out;
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), buf.size(), pipe)) out += buf.data();
    const int status = ::pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

/// A small synthetic suite on disk and a config pointing at it.
class Suite : public ::testing::Test {
protected:
    void SetUp() override {
        RunConfig synth;
        synth.paths.out_dir = dir / "data";
        synth.synth.train_queries = 12;
        synth.synth.test_queries = 4;
        synth.propagate();
        cmd_synth(synth);
        write_file_atomic(dir / "config.json", R"({
  "seed": 7,
  "paths": {"corpus": "data/corpus.jsonl", "queries": "data/queries_test.tsv",
            "train_queries": "data/queries_train.tsv", "qrels": "data/qrels.txt", "out_dir": "out"},
  "retrieval": {"n": 10},
  "strategy": {"window": 4, "stride": 2},
  "train": {"lr": 0.01, "batch_size": 4},
  "bench": {"queries": 2}
})");
        config = load_config(dir / "config.json");
    }

    test::TempDir dir;
    RunConfig config;
};

}  // namespace

TEST(Config, DefaultsAndOverrides) {
    test::TempDir dir;
    write_file_atomic(dir / "c.json", R"({"seed": 5, "backend": {"oracle": {"pointwise_noise": 0.3}}, "paths": {"out_dir": "o"}})");
    auto c = load_config(dir / "c.json");
    EXPECT_EQ(c.seed, 5u);
    EXPECT_EQ(c.backend.oracle.seed, 5u);
    EXPECT_EQ(c.train.seed, 5u);
    EXPECT_DOUBLE_EQ(c.backend.oracle.pointwise_noise, 0.3);
    EXPECT_EQ(c.paths.out_dir, dir / "o");
    EXPECT_EQ(c.strategy.listwise.window, 20u);
    EXPECT_EQ(c.retrieval.n, 100u);
}

TEST(Config, RejectsUnknownKeysBadTypesMissingPathsAndStrategies) {
    test::TempDir dir;
    EXPECT_THROW(parse_config(R"({"sed": 1})", dir.path()), ConfigError);
    EXPECT_THROW(parse_config(R"({"train": {"lr": "fast"}})", dir.path()), ConfigError);
    EXPECT_THROW(parse_config(R"({"paths": {"corpus": "nope.jsonl"}})", dir.path()), ConfigError);
    EXPECT_THROW(parse_config(R"({"strategy": {"name": "magic"}})", dir.path()), UsageError);
    EXPECT_THROW(parse_config(R"({"backend": {"kind": "grpc"}})", dir.path()), ConfigError);
    EXPECT_THROW(parse_config("{not json", dir.path()), ConfigError);
    EXPECT_THROW(parse_config(R"({"backend": {"oracle": {"comparator_accuracy": 0.2}}})", dir.path()), ConfigError);
}

TEST_F(Suite, PairwiseOnOneQueryRecordsNinetyCalls) {
    write_file_atomic(dir / "one.tsv", "test-001\t" + load_queries(config.paths.queries).front().text + "\n");
    config.paths.queries = dir / "one.tsv";
    config.backend.cache_mode = CacheMode::record;
    auto outcome = cmd_rank(config, strategy::kPairwiseAllpair);
    EXPECT_EQ(outcome.calls, 90u);
    ResponseCache cache(config.paths.out_dir / "cache.jsonl");
    EXPECT_EQ(cache.size(), 90u);
}

TEST_F(Suite, EvalOfIdealRunIsOne) {
    auto qrels = load_qrels(config.paths.qrels);
    instill::Run run;
    for (const auto& [qid, docs] : qrels.judgments()) {
        std::vector<std::string> ids;
        std::vector<double> grades;
        for (const auto& [doc, g] : docs) {
            ids.push_back(doc);
            grades.push_back(g);
        }
        run[qid] = scores_to_ranking(qid, grades, ids);
    }
    write_run(dir / "ideal.txt", run, "ideal");
    auto report = cmd_eval(config, dir / "ideal.txt", config.paths.qrels);
    EXPECT_DOUBLE_EQ(report.ndcg10, 1.0);
    EXPECT_TRUE(std::filesystem::exists(config.paths.out_dir / "metrics.json"));
}

TEST_F(Suite, PipelineIsDeterministicAndReplayable) {
    config.backend.cache_mode = CacheMode::record;
    auto teach = cmd_teach(config);
    EXPECT_EQ(teach.examples.size(), 12u);
    cmd_distill(config);
    const auto first = read_file(config.paths.model_or_default());
    cmd_distill(config);
    EXPECT_EQ(read_file(config.paths.model_or_default()), first);
    const auto training_set = read_file(config.paths.training_set_or_default());

    // Same inputs with a warm cache and no base backend: identical output.
    config.backend.cache_mode = CacheMode::replay;
    cmd_teach(config);
    EXPECT_EQ(read_file(config.paths.training_set_or_default()), training_set);

    auto student = cmd_rank(config, strategy::kStudent);
    EXPECT_EQ(student.calls, 0u);
    EXPECT_EQ(student.run.size(), 4u);
}

TEST_F(Suite, ReplayMissFailsThePartAndStillWritesOutput) {
    config.backend.cache_mode = CacheMode::replay;
    write_file_atomic(config.paths.out_dir / "cache.jsonl", "");
    EXPECT_THROW(cmd_rank(config, strategy::kPointwiseRg), PartialFailure);
    EXPECT_TRUE(std::filesystem::exists(run_path(config, strategy::kPointwiseRg)));
}

TEST_F(Suite, BenchWritesReport) {
    config.bench.strategies = {strategy::kBm25, strategy::kPointwiseRg, strategy::kPairwiseAllpair};
    auto rows = cmd_bench(config);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[1].calls_per_q, 10.0);
    EXPECT_EQ(rows[2].calls_per_q, 90.0);
    EXPECT_DOUBLE_EQ(rows[2].speedup_vs_ref, 1.0);
    EXPECT_TRUE(std::filesystem::exists(config.paths.out_dir / "report.csv"));
}

TEST_F(Suite, BinaryRunsPipelineAndReportsErrorsOnOneLine) {
    const auto cfg = (dir / "config.json").string();
    auto r = run_cli("retrieve --config " + cfg);
    EXPECT_EQ(r.code, 0) << r.out;
    r = run_cli("rank --config " + cfg + " --strategy listwise --quiet");
    EXPECT_EQ(r.code, 0) << r.out;
    r = run_cli("eval --config " + cfg + " --run " + (dir / "out/run.listwise.txt").string());
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("\"ndcg@10\""), std::string::npos);

    r = run_cli("rank --config " + cfg + " --strategy magic");
    EXPECT_NE(r.code, 0);
    EXPECT_EQ(r.out, "error: kind=usage message=\"unknown strategy 'magic'\"\n");

    write_file_atomic(dir / "bad.json", R"({"paths": {"corpus": "missing.jsonl"}})");
    r = run_cli("retrieve --config " + (dir / "bad.json").string());
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(r.out.rfind("error: kind=config message=", 0), 0u) << r.out;
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1);

    r = run_cli("retrieve");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("missing config key paths.corpus"), std::string::npos);

    r = run_cli("frobnicate");
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(r.out.rfind("error: kind=usage", 0), 0u) << r.out;
}

TEST(Synth, PassageSuiteShape) {
    SynthConfig c;
    c.train_queries = 5;
    c.test_queries = 3;
    auto data = synthesize(c);
    EXPECT_EQ(data.corpus.size(), 80u);
    EXPECT_EQ(data.train.size(), 5u);
    EXPECT_EQ(data.test.size(), 3u);
    auto index = PostingsIndex::build(data.corpus);
    for (const auto& q : data.test) {
        auto top = retrieve_topk(data.corpus, index, q, 10);
        EXPECT_EQ(top.size(), 10u);
        for (const auto& d : top.docs) EXPECT_EQ(d.doc_id[0], 'd');
        auto grades = data.qrels.grades_for(q.query_id);
        EXPECT_EQ(grades.size(), 10u);
    }
    auto again = synthesize(c);
    EXPECT_EQ(format_corpus(again.corpus), format_corpus(data.corpus));
}

TEST(Synth, MovieSuiteShape) {
    SynthConfig c;
    c.task = Task::movie;
    auto data = synthesize(c);
    EXPECT_EQ(data.corpus.size(), 50u);
    ASSERT_TRUE(data.popularity);
    EXPECT_EQ(data.popularity->popular().size(), 15u);
    EXPECT_EQ(data.test.size(), 50u);
    for (const auto& q : data.test) EXPECT_EQ(data.qrels.grades_for(q.query_id), (std::vector<int>{1}));
}
