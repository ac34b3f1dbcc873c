#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "instill/backend.hpp"
#include "instill/corpus.hpp"
#include "instill/prompts.hpp"
#include "instill/ranked_list.hpp"

namespace instill {

namespace strategy {
inline constexpr const char* kPointwiseRg = "pointwise-rg";
inline constexpr const char* kPointwiseQg = "pointwise-qg";
inline constexpr const char* kPairwiseAllpair = "pairwise-allpair";
inline constexpr const char* kListwise = "listwise";
inline constexpr const char* kStudent = "student";
inline constexpr const char* kBm25 = "bm25";
}  // namespace strategy

/// Everything a zero-shot strategy needs to talk to a model.
struct RankerContext {
    Backend& backend;
    const TemplateSet& templates = TemplateSet::builtin();
    Task task = Task::passage;
    CallCounter* counter = nullptr;
    /// Upper bound on concurrent in-flight backend calls.
    std::size_t parallelism = 1;
    int max_new_tokens = 16;
};

struct RankStats {
    std::size_t calls = 0;
    /// Calls that failed in transport or at the server and were scored
    /// neutrally.
    std::size_t failures = 0;
    /// Outputs that parsed to neither label/choice, or listwise outputs that
    /// needed repair.
    std::size_t unparsed = 0;
    /// Pointwise answers that arrived without option probabilities.
    std::size_t missing_probabilities = 0;

    RankStats& operator+=(const RankStats& other);
};

struct RankResult {
    RankedList ranking;
    /// Scores aligned with the candidate order.
    std::vector<double> scores;
    RankStats stats;
};

/// BM25 order as a ranking; no backend calls.
RankResult rank_by_retrieval(const CandidateSet& candidates);

/// 1 + P(Yes) on yes, 1 - P(No) on no, 1.0 otherwise.
double relevance_generation_score(const PointwiseVerdict& verdict);

/// One call per candidate, scored by relevance_generation_score().
RankResult rank_pointwise_rg(const RankerContext& ctx, const CandidateSet& candidates);

/// One call per candidate; the score is the mean token log-likelihood of the
/// query given the document. Throws CapabilityError if the backend returns
/// no token logprobs.
RankResult rank_pointwise_qg(const RankerContext& ctx, const CandidateSet& candidates);

/// Pairwise choice values c(i,j) for every ordered pair i != j.
class ComparisonMatrix {
public:
    explicit ComparisonMatrix(std::size_t n);

    std::size_t size() const { return n_; }
    double at(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
    /// `value` must be 0, 0.5 or 1 and i != j.
    void set(std::size_t i, std::size_t j, double value);

private:
    std::size_t n_;
    std::vector<double> values_;
};

/// s_i = sum over j != i of c(i,j) + (1 - c(j,i)). The scores always sum to
/// n(n-1) and each lies in [0, 2(n-1)].
std::vector<double> aggregate_allpair(const ComparisonMatrix& matrix);

/// Asks the model which of (first, second) is more relevant, in that order.
/// Returns 1 for first, 0 for second, 0.5 for neither or a failed call.
double compare_pair(const RankerContext& ctx, const Query& query, const Document& first,
                    const Document& second, RankStats* stats = nullptr);

/// Both orders of every pair: exactly n(n-1) calls.
RankResult rank_pairwise_allpair(const RankerContext& ctx, const CandidateSet& candidates);

struct ListwiseOptions {
    std::size_t window = 20;
    std::size_t stride = 10;
    /// Number of back-to-front passes.
    std::size_t passes = 1;
};

/// Window and stride actually used for `n` candidates: the window shrinks to
/// n, and the stride to window - 1.
ListwiseOptions effective_listwise_options(std::size_t n, ListwiseOptions options);

/// passes * (ceil((n - w) / s) + 1) for n > w, passes for n == w, 0 for n < 2.
std::size_t listwise_call_count(std::size_t n, ListwiseOptions options);

/// Sliding windows from the back of the list to the front, each window
/// reordered by the model's permutation. Scores are reciprocal ranks.
RankResult rank_listwise_window(const RankerContext& ctx, const CandidateSet& candidates,
                                ListwiseOptions options = {});

}  // namespace instill
