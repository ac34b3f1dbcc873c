#include "instill_cli/commands.hpp"

#include <spdlog/spdlog.h>

#include "instill/error.hpp"
#include "instill/http_backend.hpp"
#include "instill/io.hpp"
#include "instill/oracle_backend.hpp"

namespace instill::cli {

namespace {

const std::filesystem::path& require(const std::filesystem::path& p, const char* key) {
    if (p.empty()) throw ConfigError(std::string("missing config key paths.") + key);
    return p;
}

std::filesystem::path cache_path(const RunConfig& config) {
    return config.paths.cache.empty() ? config.paths.out_dir / "cache.jsonl" : config.paths.cache;
}

RankerContext make_context(const RunConfig& config, Backend& backend, const Workspace& ws, CallCounter* counter) {
    return RankerContext{backend, ws.templates, config.task, counter, config.strategy.parallelism,
                         config.strategy.max_new_tokens};
}

std::optional<StudentModel> maybe_load_model(const RunConfig& config, const std::vector<std::string>& strategies) {
    if (std::find(strategies.begin(), strategies.end(), strategy::kStudent) == strategies.end()) return std::nullopt;
    const auto path = config.paths.model_or_default();
    if (!std::filesystem::exists(path))
        throw ConfigError("student strategy needs a model checkpoint at " + path.string());
    return load_checkpoint(path).model;
}

std::string first_error(const std::vector<std::pair<std::string, std::string>>& failed) {
    return failed.front().first + ": " + failed.front().second;
}

}  // namespace

Workspace Workspace::load(const RunConfig& config) {
    const auto& p = config.paths;
    Workspace ws;
    auto stopwords = p.stopwords.empty() ? default_stopwords() : load_stopwords(p.stopwords);
    ws.corpus = load_corpus(require(p.corpus, "corpus"), std::move(stopwords));
    if (ws.corpus.empty()) throw ConfigError("corpus is empty: " + p.corpus.string());
    ws.index = PostingsIndex::build(ws.corpus, config.retrieval.bm25);
    ws.queries = load_queries(require(p.queries, "queries"));
    if (!p.train_queries.empty()) ws.train_queries = load_queries(p.train_queries);
    if (!p.qrels.empty()) ws.qrels = load_qrels(p.qrels);
    if (!p.popularity.empty()) ws.popularity = load_popularity(p.popularity, config.eval.popularity_threshold);
    ws.templates = p.templates.empty() ? TemplateSet::builtin() : TemplateSet::load(p.templates);
    return ws;
}

BackendStack::BackendStack(const RunConfig& config, const Workspace& ws) {
    const auto& b = config.backend;
    if (b.cache_mode != CacheMode::replay) {
        if (b.kind == BackendKind::oracle) {
            if (!ws.qrels) throw ConfigError("the oracle backend needs paths.qrels");
            std::vector<Query> all = ws.queries;
            all.insert(all.end(), ws.train_queries.begin(), ws.train_queries.end());
            base_ = std::make_unique<OracleBackend>(RelevanceTruth::from_qrels(ws.corpus, all, *ws.qrels), b.oracle,
                                                    config.task, ws.templates);
        } else {
            auto http = HttpBackendConfig::from_env();
            if (!b.endpoint.empty()) http.endpoint = b.endpoint;
            if (http.endpoint.empty())
                throw ConfigError(std::string("the http backend needs backend.endpoint or ") + kEndpointEnv);
            http.timeout = b.timeout;
            http.max_attempts = b.max_attempts;
            http.initial_backoff = b.initial_backoff;
            base_ = std::make_unique<HttpBackend>(std::move(http));
        }
        top_ = base_.get();
        if (b.mock_delay_ms > 0.0) {
            delayed_ = std::make_unique<DelayedBackend>(
                *top_, std::chrono::microseconds(static_cast<long long>(b.mock_delay_ms * 1000.0)));
            top_ = delayed_.get();
        }
    }
    if (b.cache_mode != CacheMode::off) {
        const auto path = cache_path(config);
        if (b.cache_mode == CacheMode::replay && !std::filesystem::exists(path))
            throw ConfigError("replay cache not found: " + path.string());
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        cache_ = std::make_unique<ResponseCache>(path);
        caching_ = std::make_unique<CachingBackend>(*cache_, top_, b.cache_mode);
        top_ = caching_.get();
    }
}

CandidateSet candidates_for(const RunConfig& config, const Workspace& ws, const Query& query) {
    if (config.task == Task::movie) {
        if (!ws.popularity) throw ConfigError("the movie task needs paths.popularity");
        return build_rec_pool(query, ws.corpus, ws.index, *ws.popularity, config.seed);
    }
    return retrieve_topk(ws.corpus, ws.index, query, config.retrieval.n);
}

RankResult rank_with(const std::string& name, const RankerContext& ctx, const CandidateSet& candidates,
                     const RunConfig& config, const PostingsIndex& index, const StudentModel* model) {
    if (name == strategy::kBm25) return rank_by_retrieval(candidates);
    if (name == strategy::kPointwiseRg) return rank_pointwise_rg(ctx, candidates);
    if (name == strategy::kPointwiseQg) return rank_pointwise_qg(ctx, candidates);
    if (name == strategy::kPairwiseAllpair) return rank_pairwise_allpair(ctx, candidates);
    if (name == strategy::kListwise) return rank_listwise_window(ctx, candidates, config.strategy.listwise);
    if (name == strategy::kStudent) {
        if (!model) throw UsageError("the student strategy needs a model");
        return student_rank(*model, index, candidates);
    }
    throw UsageError("unknown strategy '" + name + "'");
}

std::filesystem::path run_path(const RunConfig& config, const std::string& strategy) {
    return config.paths.out_dir / ("run." + strategy + ".txt");
}

Run cmd_retrieve(const RunConfig& config) {
    const auto ws = Workspace::load(config);
    Run run;
    for (const auto& q : ws.queries) run[q.query_id] = rank_by_retrieval(candidates_for(config, ws, q)).ranking;
    const auto out = run_path(config, strategy::kBm25);
    write_run(out, run, strategy::kBm25);
    spdlog::info("retrieve: {} queries -> {}", run.size(), out.string());
    return run;
}

RankOutcome cmd_rank(const RunConfig& config, const std::string& name) {
    if (!is_known_strategy(name)) throw UsageError("unknown strategy '" + name + "'");
    const auto ws = Workspace::load(config);
    const auto model = maybe_load_model(config, {name});
    std::optional<BackendStack> stack;
    if (name != strategy::kBm25 && name != strategy::kStudent) stack.emplace(config, ws);

    CallCounter counter;
    RankOutcome outcome;
    for (const auto& q : ws.queries) {
        try {
            const auto candidates = candidates_for(config, ws, q);
            RankResult result;
            if (stack) {
                result = rank_with(name, make_context(config, stack->backend(), ws, &counter), candidates, config,
                                   ws.index, model ? &*model : nullptr);
            } else {
                result = name == strategy::kStudent ? student_rank(*model, ws.index, candidates)
                                                     : rank_by_retrieval(candidates);
            }
            outcome.stats += result.stats;
            outcome.run[q.query_id] = std::move(result.ranking);
        } catch (const Error& e) {
            if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const CapabilityError*>(&e)) throw;
            outcome.failed.emplace_back(q.query_id, e.what());
        }
    }
    outcome.calls = counter.calls(name);
    outcome.output = run_path(config, name);
    write_run(outcome.output, outcome.run, name);
    spdlog::info("rank {}: {} queries, {} calls, {} failed calls, {} unparsed -> {}", name, outcome.run.size(),
                 outcome.calls, outcome.stats.failures, outcome.stats.unparsed, outcome.output.string());
    if (outcome.stats.missing_probabilities > 0)
        spdlog::warn("rank {}: {} answers lacked option probabilities; scored with probability 1.0", name,
                     outcome.stats.missing_probabilities);
    if (!outcome.failed.empty())
        throw PartialFailure(std::to_string(outcome.failed.size()) + " of " + std::to_string(ws.queries.size()) +
                             " queries failed; first: " + first_error(outcome.failed));
    return outcome;
}

TrainingSetResult cmd_teach(const RunConfig& config) {
    const auto ws = Workspace::load(config);
    const auto& queries = ws.train_queries.empty() ? ws.queries : ws.train_queries;
    BackendStack stack(config, ws);
    CallCounter counter;
    auto result = build_training_set(queries, ws.corpus, ws.index, make_context(config, stack.backend(), ws, &counter),
                                     config.retrieval.n);
    const auto out = config.paths.training_set_or_default();
    write_file_atomic(out, format_training_set(result.examples));
    spdlog::info("teach: {} examples, {} skipped, {} failed, {} calls -> {}", result.examples.size(),
                 result.skipped.size(), result.failed.size(), counter.calls(strategy::kPairwiseAllpair), out.string());
    if (!result.failed.empty())
        throw PartialFailure(std::to_string(result.failed.size()) + " of " + std::to_string(queries.size()) +
                             " queries failed; first: " + first_error(result.failed));
    return result;
}

TrainResult cmd_distill(const RunConfig& config) {
    const auto ws = Workspace::load(config);
    const auto& queries = ws.train_queries.empty() ? ws.queries : ws.train_queries;
    const auto examples = load_training_set(config.paths.training_set_or_default(), ws.corpus, queries);
    auto result = train(examples, ws.index, config.train);
    const auto model_out = config.paths.model_or_default();
    write_file_atomic(model_out, format_checkpoint(result.model, config.train));
    write_file_atomic(config.paths.out_dir / "loss.csv", format_loss_trace(result.epoch_loss));
    spdlog::info("distill: {} examples, {} epochs -> {}", examples.size(), result.epoch_loss.size(),
                 model_out.string());
    return result;
}

MetricReport cmd_eval(const RunConfig& config, const std::filesystem::path& run_file,
                      const std::filesystem::path& qrels_file) {
    const auto report = evaluate(read_run(run_file), load_qrels(qrels_file), config.eval.gain);
    write_file_atomic(config.paths.out_dir / "metrics.json", format_metrics_json(report));
    return report;
}

std::vector<ReportRow> cmd_bench(const RunConfig& config) {
    const auto ws = Workspace::load(config);
    const auto model = maybe_load_model(config, config.bench.strategies);
    BackendStack stack(config, ws);
    CallCounter counter;
    const auto ctx = make_context(config, stack.backend(), ws, &counter);

    std::vector<CandidateSet> candidate_sets;
    const std::size_t limit = config.bench.queries == 0 ? ws.queries.size()
                                                        : std::min(config.bench.queries, ws.queries.size());
    for (std::size_t i = 0; i < limit; ++i) candidate_sets.push_back(candidates_for(config, ws, ws.queries[i]));

    std::vector<LatencyReport> latency;
    std::vector<MetricReport> metrics;
    for (const auto& name : config.bench.strategies) {
        auto measured = measure_latency(
            name,
            [&](const CandidateSet& c) { return rank_with(name, ctx, c, config, ws.index, model ? &*model : nullptr).ranking; },
            candidate_sets, counter);
        metrics.push_back(ws.qrels ? evaluate(measured.run, *ws.qrels, config.eval.gain) : MetricReport{});
        latency.push_back(measured.report);
        spdlog::info("bench {}: {:.6f} s/q, {:.2f} calls/q", name, measured.report.sec_per_query,
                     measured.report.calls_per_query);
    }
    const auto& names = config.bench.strategies;
    const bool has_reference = std::find(names.begin(), names.end(), config.bench.reference) != names.end();
    if (!latency.empty()) apply_speedup(latency, has_reference ? config.bench.reference : names.front());

    std::vector<ReportRow> rows;
    for (std::size_t i = 0; i < latency.size(); ++i) {
        const auto& m = metrics[i];
        rows.push_back({latency[i].strategy, config.bench.model_tag, config.task == Task::movie ? kRecTopK + kRecPopularExtra : config.retrieval.n,
                        m.ndcg1, m.ndcg5, m.ndcg10, m.acc1, latency[i].sec_per_query, latency[i].calls_per_query,
                        latency[i].speedup});
    }
    std::filesystem::create_directories(config.paths.out_dir);
    emit_report(config.paths.out_dir, rows);
    return rows;
}

SynthData cmd_synth(const RunConfig& config) {
    auto data = synthesize(config.synth);
    write_synth(config.paths.out_dir, data);
    spdlog::info("synth: {} documents, {} train and {} test queries -> {}", data.corpus.size(), data.train.size(),
                 data.test.size(), config.paths.out_dir.string());
    return data;
}

}  // namespace instill::cli
