#include "instill/rankers.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "instill/parallel.hpp"

namespace instill {

namespace {

// Score given to a query-generation candidate whose call failed; below any
// mean log-likelihood a backend can report in practice.
constexpr double kQgFailureScore = -1000.0;

GenerationResult call_backend(const RankerContext& ctx, const char* strategy,
                              const GenerationRequest& request) {
    const auto start = std::chrono::steady_clock::now();
    try {
        auto result = ctx.backend.generate(request);
        if (ctx.counter)
            ctx.counter->count(strategy, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        return result;
    } catch (...) {
        if (ctx.counter)
            ctx.counter->count(strategy, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        throw;
    }
}

std::vector<std::string> yes_no_options(Task task) {
    if (task == Task::movie) return {"Y", "N"};
    return {"Yes", "No"};
}

// Per-item outcome flags, summed once all calls are back.
struct CallOutcome {
    bool failed = false;
    bool unparsed = false;
    bool missing_probabilities = false;
};

RankStats summarize(const std::vector<CallOutcome>& outcomes) {
    RankStats stats;
    stats.calls = outcomes.size();
    for (const auto& o : outcomes) {
        stats.failures += o.failed;
        stats.unparsed += o.unparsed;
        stats.missing_probabilities += o.missing_probabilities;
    }
    return stats;
}

RankResult finish(const CandidateSet& candidates, std::vector<double> scores, RankStats stats) {
    auto ids = candidates.doc_ids();
    RankResult out;
    out.ranking = scores_to_ranking(candidates.query.query_id, scores, ids);
    out.scores = std::move(scores);
    out.stats = stats;
    return out;
}

RankResult trivial(const CandidateSet& candidates) {
    return finish(candidates, std::vector<double>(candidates.size(), 0.0), {});
}

}  // namespace

RankStats& RankStats::operator+=(const RankStats& other) {
    calls += other.calls;
    failures += other.failures;
    unparsed += other.unparsed;
    missing_probabilities += other.missing_probabilities;
    return *this;
}

RankResult rank_by_retrieval(const CandidateSet& candidates) {
    return finish(candidates, candidates.retrieval_scores, {});
}

double relevance_generation_score(const PointwiseVerdict& verdict) {
    switch (verdict.label) {
        case YesNo::yes: return 1.0 + verdict.label_probability;
        case YesNo::no: return 1.0 - verdict.label_probability;
        case YesNo::other: return 1.0;
    }
    return 1.0;
}

RankResult rank_pointwise_rg(const RankerContext& ctx, const CandidateSet& candidates) {
    const auto n = candidates.size();
    const auto& tmpl = ctx.templates.get(PromptKind::pointwise_rg, ctx.task);
    std::vector<double> scores(n, 1.0);
    std::vector<CallOutcome> outcomes(n);
    parallel_for(n, ctx.parallelism, [&](std::size_t i) {
        GenerationRequest request;
        request.prompt = render(tmpl, candidates.query, std::span(&candidates.docs[i], 1));
        request.max_new_tokens = ctx.max_new_tokens;
        request.options = yes_no_options(ctx.task);
        try {
            auto result = call_backend(ctx, strategy::kPointwiseRg, request);
            if (!result.option_probs) outcomes[i].missing_probabilities = true;
            auto verdict = parse_yes_no(result.text, result.option_probs.value_or(std::map<std::string, double>{}));
            outcomes[i].unparsed = verdict.label == YesNo::other;
            scores[i] = relevance_generation_score(verdict);
        } catch (const std::exception& e) {
            if (!is_call_failure(e)) throw;
            outcomes[i].failed = true;
            scores[i] = 1.0;
        }
    });
    auto stats = summarize(outcomes);
    if (stats.missing_probabilities > 0)
        spdlog::warn("{} of {} relevance-generation answers had no option probabilities; scored as 0 or 2",
                     stats.missing_probabilities, n);
    return finish(candidates, std::move(scores), stats);
}

RankResult rank_pointwise_qg(const RankerContext& ctx, const CandidateSet& candidates) {
    const auto n = candidates.size();
    const auto& tmpl = ctx.templates.get(PromptKind::pointwise_qg, ctx.task);
    const auto& query = candidates.query.text;
    std::vector<double> scores(n, kQgFailureScore);
    std::vector<CallOutcome> outcomes(n);
    parallel_for(n, ctx.parallelism, [&](std::size_t i) {
        auto full = render(tmpl, candidates.query, std::span(&candidates.docs[i], 1));
        GenerationRequest request;
        request.prompt = full.substr(0, full.size() - query.size());
        request.max_new_tokens = ctx.max_new_tokens;
        request.echo_target = query;
        GenerationResult result;
        try {
            result = call_backend(ctx, strategy::kPointwiseQg, request);
        } catch (const std::exception& e) {
            if (!is_call_failure(e)) throw;
            outcomes[i].failed = true;
            return;
        }
        if (!result.target_token_logprobs)
            throw CapabilityError("backend returned no target_token_logprobs; query generation needs them");
        const auto& lp = *result.target_token_logprobs;
        scores[i] = lp.empty() ? 0.0 : std::accumulate(lp.begin(), lp.end(), 0.0) / static_cast<double>(lp.size());
    });
    return finish(candidates, std::move(scores), summarize(outcomes));
}

ComparisonMatrix::ComparisonMatrix(std::size_t n) : n_(n), values_(n * n, 0.5) {}

void ComparisonMatrix::set(std::size_t i, std::size_t j, double value) {
    if (i == j || i >= n_ || j >= n_) throw UsageError("comparison index out of range");
    if (value != 0.0 && value != 0.5 && value != 1.0) throw UsageError("comparison value must be 0, 0.5 or 1");
    values_[i * n_ + j] = value;
}

std::vector<double> aggregate_allpair(const ComparisonMatrix& c) {
    const auto n = c.size();
    std::vector<double> s(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) s[i] += c.at(i, j) + (1.0 - c.at(j, i));
    return s;
}

double compare_pair(const RankerContext& ctx, const Query& query, const Document& first,
                    const Document& second, RankStats* stats) {
    const auto& tmpl = ctx.templates.get(PromptKind::pairwise, ctx.task);
    const Document pair[2] = {first, second};
    GenerationRequest request;
    request.prompt = render(tmpl, query, pair);
    request.max_new_tokens = ctx.max_new_tokens;
    if (stats) ++stats->calls;
    try {
        auto result = call_backend(ctx, strategy::kPairwiseAllpair, request);
        switch (parse_pair_choice(result.text)) {
            case PairwiseChoice::first: return 1.0;
            case PairwiseChoice::second: return 0.0;
            case PairwiseChoice::neither:
                if (stats) ++stats->unparsed;
                return 0.5;
        }
    } catch (const std::exception& e) {
        if (!is_call_failure(e)) throw;
        if (stats) ++stats->failures;
    }
    return 0.5;
}

RankResult rank_pairwise_allpair(const RankerContext& ctx, const CandidateSet& candidates) {
    const auto n = candidates.size();
    if (n < 2) return trivial(candidates);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(n * (n - 1));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) pairs.emplace_back(i, j);

    std::vector<double> values(pairs.size(), 0.5);
    std::vector<RankStats> per_call(pairs.size());
    parallel_for(pairs.size(), ctx.parallelism, [&](std::size_t k) {
        auto [i, j] = pairs[k];
        values[k] = compare_pair(ctx, candidates.query, candidates.docs[i], candidates.docs[j], &per_call[k]);
    });

    ComparisonMatrix matrix(n);
    RankStats stats;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        matrix.set(pairs[k].first, pairs[k].second, values[k]);
        stats += per_call[k];
    }
    return finish(candidates, aggregate_allpair(matrix), stats);
}

ListwiseOptions effective_listwise_options(std::size_t n, ListwiseOptions options) {
    if (options.stride == 0) throw UsageError("listwise stride must be at least 1");
    if (options.passes == 0) throw UsageError("listwise passes must be at least 1");
    if (options.window < 2) throw UsageError("listwise window must be at least 2");
    options.window = std::min(options.window, n);
    if (options.window >= 2) options.stride = std::min(options.stride, options.window - 1);
    return options;
}

std::size_t listwise_call_count(std::size_t n, ListwiseOptions options) {
    if (n < 2) return 0;
    auto eff = effective_listwise_options(n, options);
    const auto w = eff.window, s = eff.stride;
    const std::size_t per_pass = n == w ? 1 : (n - w + s - 1) / s + 1;
    return per_pass * eff.passes;
}

RankResult rank_listwise_window(const RankerContext& ctx, const CandidateSet& candidates,
                                ListwiseOptions options) {
    const auto n = candidates.size();
    if (n < 2) return trivial(candidates);
    const auto eff = effective_listwise_options(n, options);
    const auto w = eff.window, s = eff.stride;
    const auto& tmpl = ctx.templates.get(PromptKind::listwise, ctx.task);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    RankStats stats;
    for (std::size_t pass = 0; pass < eff.passes; ++pass) {
        std::size_t start = n - w;
        while (true) {
            std::vector<Document> window;
            window.reserve(w);
            for (std::size_t k = 0; k < w; ++k) window.push_back(candidates.docs[order[start + k]]);
            GenerationRequest request;
            request.prompt = render(tmpl, candidates.query, window);
            request.max_new_tokens = std::max<int>(ctx.max_new_tokens, static_cast<int>(6 * w));
            ++stats.calls;
            try {
                auto result = call_backend(ctx, strategy::kListwise, request);
                auto perm = parse_permutation(result.text, w);
                if (perm.repaired) ++stats.unparsed;
                std::vector<std::size_t> reordered;
                reordered.reserve(w);
                for (auto id : perm.order) reordered.push_back(order[start + id - 1]);
                std::copy(reordered.begin(), reordered.end(), order.begin() + static_cast<std::ptrdiff_t>(start));
            } catch (const std::exception& e) {
                if (!is_call_failure(e)) throw;
                ++stats.failures;
            }
            if (start == 0) break;
            start = start > s ? start - s : 0;
        }
    }

    std::vector<double> scores(n);
    for (std::size_t r = 0; r < n; ++r) scores[order[r]] = 1.0 / static_cast<double>(r + 1);
    return finish(candidates, std::move(scores), stats);
}

}  // namespace instill
