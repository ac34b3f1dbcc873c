#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "instill/error.hpp"
#include "instill_cli/commands.hpp"
#include "instill_cli/config.hpp"

namespace {

using namespace instill;
using namespace instill::cli;

std::string quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    return out + "\"";
}

int fail(std::string_view kind, std::string_view message, int code = 1) {
    std::cerr << "error: kind=" << kind << " message=" << quote(message) << "\n";
    return code;
}

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> strategy;
    std::optional<std::size_t> n;
    std::optional<std::string> backend;
    std::optional<std::string> out;
    std::optional<std::string> task;
    std::optional<std::string> gain;
    std::optional<std::size_t> popularity_threshold;
    std::optional<std::string> cache_mode;
    std::optional<double> mock_delay_ms;
    std::optional<std::string> model;
    std::optional<std::string> queries;
    std::string run;
    std::string qrels;
    bool quiet = false;
};

RunConfig resolve(const Overrides& o) {
    RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (o.strategy) cfg.strategy.name = *o.strategy;
    if (o.n) cfg.retrieval.n = *o.n;
    if (o.backend) cfg.backend.kind = parse_backend_kind(*o.backend);
    if (o.out) cfg.paths.out_dir = *o.out;
    if (o.task) cfg.task = parse_task(*o.task);
    if (o.gain) cfg.eval.gain = parse_gain(*o.gain);
    if (o.popularity_threshold) cfg.eval.popularity_threshold = *o.popularity_threshold;
    if (o.cache_mode) cfg.backend.cache_mode = parse_cache_mode(*o.cache_mode);
    if (o.mock_delay_ms) cfg.backend.mock_delay_ms = *o.mock_delay_ms;
    if (o.model) cfg.paths.model = *o.model;
    if (o.queries) cfg.paths.queries = *o.queries;
    cfg.propagate();
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    auto logger = spdlog::stderr_color_mt("instill");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");

    CLI::App app{"Zero-shot LLM ranking and instruction distillation", "instill"};
    app.require_subcommand(1);
    app.fallthrough();
    Overrides o;
    app.add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--seed", o.seed, "Root seed");
    app.add_option("--strategy", o.strategy,
                   "pointwise-rg, pointwise-qg, pairwise-allpair, listwise, student or bm25");
    app.add_option("--n", o.n, "Candidates per query");
    app.add_option("--backend", o.backend, "oracle or http");
    app.add_option("--out", o.out, "Output directory");
    app.add_option("--task", o.task, "passage or movie");
    app.add_option("--gain", o.gain, "nDCG gain: linear or exp");
    app.add_option("--popularity-threshold", o.popularity_threshold, "Mentions needed to count as popular");
    app.add_option("--cache-mode", o.cache_mode, "off, record or replay");
    app.add_option("--mock-delay-ms", o.mock_delay_ms, "Fixed latency added to each model call");
    app.add_option("--model", o.model, "Student checkpoint");
    app.add_option("--queries", o.queries, "Queries file");
    app.add_flag("--quiet", o.quiet, "Only log warnings and errors");

    auto* retrieve = app.add_subcommand("retrieve", "BM25 candidates per query as a run file");
    auto* rank = app.add_subcommand("rank", "Re-rank candidates with a strategy");
    auto* teach = app.add_subcommand("teach", "Pairwise teacher rankings for the training queries");
    auto* distill = app.add_subcommand("distill", "Train the pointwise student with RankNet");
    auto* eval = app.add_subcommand("eval", "nDCG@1/5/10 and Acc@1 of a run");
    eval->add_option("--run", o.run, "Run file")->required();
    eval->add_option("--qrels", o.qrels, "Qrels file (defaults to paths.qrels)");
    auto* bench = app.add_subcommand("bench", "Latency, call counts and effectiveness per strategy");
    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus, queries and qrels");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), 2);
    }
    if (o.quiet) spdlog::set_level(spdlog::level::warn);

    try {
        const auto cfg = resolve(o);
        if (*retrieve) {
            cmd_retrieve(cfg);
        } else if (*rank) {
            cmd_rank(cfg, cfg.strategy.name);
        } else if (*teach) {
            cmd_teach(cfg);
        } else if (*distill) {
            const auto result = cmd_distill(cfg);
            for (std::size_t e = 0; e < result.epoch_loss.size(); ++e)
                std::printf("epoch %zu mean_loss %.6f\n", e + 1, result.epoch_loss[e]);
        } else if (*eval) {
            std::filesystem::path qrels = o.qrels.empty() ? cfg.paths.qrels : std::filesystem::path(o.qrels);
            if (qrels.empty()) throw ConfigError("eval needs --qrels or paths.qrels");
            std::cout << format_metrics_json(cmd_eval(cfg, o.run, qrels));
        } else if (*bench) {
            std::vector<ReportRow> rows = cmd_bench(cfg);
            std::cout << report_markdown(rows);
        } else if (*synth) {
            cmd_synth(cfg);
        }
    } catch (const Error& e) {
        return fail(e.kind(), e.what(), e.kind() == std::string_view("usage") ? 2 : 1);
    } catch (const std::filesystem::filesystem_error& e) {
        return fail("io", e.what());
    } catch (const std::exception& e) {
        return fail("internal", e.what());
    }
    return 0;
}
