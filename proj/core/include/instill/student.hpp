#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "instill/corpus.hpp"

namespace instill {

/// Lexical features of a (query, document) pair. The document is truncated
/// to `max_input_tokens` tokens before anything is computed.
///
/// Features, in order: BM25 score, distinct query tokens present, IDF-weighted
/// overlap, fraction of query tokens covered, document length over the
/// corpus average, and a constant bias of 1.
class FeatureExtractor {
public:
    static constexpr std::size_t kDimension = 6;
    static const std::vector<std::string>& names();

    FeatureExtractor(const PostingsIndex& index, std::size_t max_input_tokens);

    std::vector<double> extract(const Query& query, const Document& doc) const;
    std::size_t max_input_tokens() const { return max_input_tokens_; }

private:
    const PostingsIndex& index_;
    std::size_t max_input_tokens_;
};

/// Per-feature standardisation fitted on the training set. Features with
/// zero spread (the bias) pass through unchanged.
struct FeatureSpec {
    std::vector<std::string> names;
    std::vector<double> mean;
    std::vector<double> scale;
    std::size_t max_input_tokens = 512;

    static FeatureSpec fit(std::span<const std::vector<double>> rows, std::size_t max_input_tokens);
    std::vector<double> normalize(std::span<const double> raw) const;
};

enum class Architecture { linear, mlp1 };

std::string_view to_string(Architecture arch);
Architecture parse_architecture(std::string_view name);

/// Compact differentiable pointwise scorer: linear (w . x) or one tanh
/// hidden layer (w2 . tanh(W1 x) + b2).
class StudentScorer {
public:
    /// Linear weights start at zero; mlp1 weights are uniform(-0.1, 0.1)
    /// from `seed`.
    static StudentScorer create(Architecture arch, std::size_t input_dim,
                                std::size_t hidden, std::uint64_t seed);
    /// Rebuilds a scorer from stored parameters; throws ConfigError when the
    /// count does not match the shape.
    static StudentScorer from_parameters(Architecture arch, std::size_t input_dim,
                                         std::size_t hidden, std::vector<double> params);

    Architecture architecture() const { return arch_; }
    std::size_t input_dim() const { return input_dim_; }
    std::size_t hidden() const { return hidden_; }
    std::size_t num_parameters() const { return params_.size(); }

    std::span<const double> parameters() const { return params_; }
    std::span<double> parameters() { return params_; }

    double score(std::span<const double> x) const;

    /// grad += dscore * d score(x) / d params.
    void accumulate_gradient(std::span<const double> x, double dscore,
                             std::span<double> grad) const;

private:
    StudentScorer(Architecture arch, std::size_t input_dim, std::size_t hidden,
                  std::vector<double> params);

    Architecture arch_;
    std::size_t input_dim_;
    std::size_t hidden_;
    std::vector<double> params_;
};

/// A trained student: feature normalisation plus scorer.
struct StudentModel {
    FeatureSpec features;
    StudentScorer scorer;
};

}  // namespace instill
