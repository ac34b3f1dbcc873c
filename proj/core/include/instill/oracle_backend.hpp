#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "instill/backend.hpp"
#include "instill/corpus.hpp"
#include "instill/prompts.hpp"

namespace instill {

/// Behaviour of the synthetic judge.
struct OracleConfig {
    std::uint64_t seed = 0;
    /// Probability a pairwise or adjacent listwise decision is correct.
    double comparator_accuracy = 1.0;
    /// Probability of answering "first item" regardless of content.
    double position_bias = 0.0;
    /// Probability of answering neither item.
    double tie_rate = 0.0;
    /// Std-dev of Gaussian noise added to pointwise probabilities.
    double pointwise_noise = 0.0;
    int max_grade = 3;

    void validate() const;
};

/// Ground-truth grades keyed by the exact query and item text that appear
/// in prompts.
class RelevanceTruth {
public:
    void set(const std::string& query_text, const std::string& item_text, int grade);
    int grade(const std::string& query_text, const std::string& item_text) const;

    /// Judged pairs from qrels, keyed through item_text() of each document.
    static RelevanceTruth from_qrels(const Corpus& corpus, std::span<const Query> queries,
                                     const Qrels& qrels);

private:
    std::map<std::string, std::map<std::string, int>> grades_;
};

/// Answers a prompt as a judge with known relevance grades would, with
/// configurable noise. A pure function of (config.seed, request bytes).
///
/// - pairwise: "neither" with probability tie_rate, else the first item with
///   probability position_bias, else the better item with probability
///   comparator_accuracy (equal grades answer "neither" when correct).
/// - pointwise RG: "Yes" iff grade > 0; option probabilities come from a
///   grade-dependent base value plus clamped Gaussian noise.
/// - pointwise QG: one logprob per whitespace token of echo_target.
/// - listwise: the grade-sorted window with each adjacent pair swapped with
///   probability 1 - comparator_accuracy.
///
/// Throws BackendError(422) for prompts that match no template.
GenerationResult oracle_answer(const GenerationRequest& request, const RelevanceTruth& truth,
                               const OracleConfig& config, Task task,
                               const TemplateSet& templates);

class OracleBackend : public Backend {
public:
    OracleBackend(RelevanceTruth truth, OracleConfig config, Task task,
                  const TemplateSet& templates = TemplateSet::builtin());
    GenerationResult generate(const GenerationRequest& request) override;

    const OracleConfig& config() const { return config_; }

private:
    RelevanceTruth truth_;
    OracleConfig config_;
    Task task_;
    TemplateSet templates_;
};

}  // namespace instill
