#include "instill/student.hpp"

#include <cmath>
#include <random>
#include <set>

#include "instill/error.hpp"

namespace instill {

const std::vector<std::string>& FeatureExtractor::names() {
    static const std::vector<std::string> kNames = {
        "bm25", "overlap", "idf_overlap", "coverage", "length_ratio", "bias"};
    return kNames;
}

FeatureExtractor::FeatureExtractor(const PostingsIndex& index, std::size_t max_input_tokens)
    : index_(index), max_input_tokens_(max_input_tokens) {
    if (max_input_tokens_ == 0) throw ConfigError("max_input_tokens must be positive");
}

std::vector<double> FeatureExtractor::extract(const Query& query, const Document& doc) const {
    const auto q = tokenize(query.text, index_.stopwords());
    auto d = tokenize(doc.full_text(), index_.stopwords());
    if (d.size() > max_input_tokens_) d.resize(max_input_tokens_);

    std::unordered_map<std::string, std::uint32_t> tf;
    for (const auto& t : d) ++tf[t];
    const auto dl = static_cast<std::uint32_t>(d.size());

    const std::set<std::string> distinct(q.begin(), q.end());
    double overlap = 0.0, idf_overlap = 0.0;
    for (const auto& t : distinct) {
        if (!tf.contains(t)) continue;
        overlap += 1.0;
        idf_overlap += index_.idf(t);
    }
    const double coverage = distinct.empty() ? 0.0 : overlap / static_cast<double>(distinct.size());
    return {index_.score_counts(q, tf, dl), overlap, idf_overlap, coverage,
            dl / index_.avg_doc_length(), 1.0};
}

FeatureSpec FeatureSpec::fit(std::span<const std::vector<double>> rows, std::size_t max_input_tokens) {
    FeatureSpec spec;
    spec.names = FeatureExtractor::names();
    spec.max_input_tokens = max_input_tokens;
    const auto d = spec.names.size();
    spec.mean.assign(d, 0.0);
    spec.scale.assign(d, 1.0);
    if (rows.empty()) return spec;
    std::vector<double> sum(d, 0.0), sum_sq(d, 0.0);
    for (const auto& row : rows) {
        if (row.size() != d) throw UsageError("feature row has the wrong dimension");
        for (std::size_t k = 0; k < d; ++k) {
            sum[k] += row[k];
            sum_sq[k] += row[k] * row[k];
        }
    }
    const double count = static_cast<double>(rows.size());
    for (std::size_t k = 0; k < d; ++k) {
        const double mean = sum[k] / count;
        const double var = std::max(0.0, sum_sq[k] / count - mean * mean);
        const double sd = std::sqrt(var);
        if (sd > 1e-12) {
            spec.mean[k] = mean;
            spec.scale[k] = sd;
        }
    }
    return spec;
}

std::vector<double> FeatureSpec::normalize(std::span<const double> raw) const {
    if (raw.size() != mean.size()) throw UsageError("feature vector has the wrong dimension");
    std::vector<double> out(raw.size());
    for (std::size_t k = 0; k < raw.size(); ++k) out[k] = (raw[k] - mean[k]) / scale[k];
    return out;
}

std::string_view to_string(Architecture arch) { return arch == Architecture::linear ? "linear" : "mlp1"; }

Architecture parse_architecture(std::string_view name) {
    if (name == "linear") return Architecture::linear;
    if (name == "mlp1") return Architecture::mlp1;
    throw ConfigError("unknown architecture '" + std::string(name) + "' (expected linear or mlp1)");
}

namespace {

std::size_t parameter_count(Architecture arch, std::size_t input_dim, std::size_t hidden) {
    return arch == Architecture::linear ? input_dim : hidden * input_dim + hidden + 1;
}

}  // namespace

StudentScorer::StudentScorer(Architecture arch, std::size_t input_dim, std::size_t hidden,
                             std::vector<double> params)
    : arch_(arch), input_dim_(input_dim), hidden_(arch == Architecture::linear ? 0 : hidden),
      params_(std::move(params)) {}

StudentScorer StudentScorer::create(Architecture arch, std::size_t input_dim, std::size_t hidden,
                                    std::uint64_t seed) {
    if (input_dim == 0) throw ConfigError("student input dimension must be positive");
    if (arch == Architecture::mlp1 && hidden == 0) throw ConfigError("mlp1 needs at least one hidden unit");
    std::vector<double> params(parameter_count(arch, input_dim, hidden), 0.0);
    if (arch == Architecture::mlp1) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> init(-0.1, 0.1);
        for (auto& p : params) p = init(rng);
    }
    return StudentScorer(arch, input_dim, hidden, std::move(params));
}

StudentScorer StudentScorer::from_parameters(Architecture arch, std::size_t input_dim, std::size_t hidden,
                                             std::vector<double> params) {
    if (params.size() != parameter_count(arch, input_dim, hidden))
        throw ConfigError("checkpoint has " + std::to_string(params.size()) + " parameters, expected " +
                          std::to_string(parameter_count(arch, input_dim, hidden)));
    for (double p : params)
        if (!std::isfinite(p)) throw ConfigError("checkpoint contains a non-finite parameter");
    return StudentScorer(arch, input_dim, hidden, std::move(params));
}

double StudentScorer::score(std::span<const double> x) const {
    if (x.size() != input_dim_) throw UsageError("student input has the wrong dimension");
    if (arch_ == Architecture::linear) {
        double s = 0.0;
        for (std::size_t j = 0; j < input_dim_; ++j) s += params_[j] * x[j];
        return s;
    }
    const double* w1 = params_.data();
    const double* w2 = w1 + hidden_ * input_dim_;
    double out = w2[hidden_];
    for (std::size_t k = 0; k < hidden_; ++k) {
        double a = 0.0;
        for (std::size_t j = 0; j < input_dim_; ++j) a += w1[k * input_dim_ + j] * x[j];
        out += w2[k] * std::tanh(a);
    }
    return out;
}

void StudentScorer::accumulate_gradient(std::span<const double> x, double dscore, std::span<double> grad) const {
    if (x.size() != input_dim_ || grad.size() != params_.size())
        throw UsageError("student gradient buffers have the wrong size");
    if (arch_ == Architecture::linear) {
        for (std::size_t j = 0; j < input_dim_; ++j) grad[j] += dscore * x[j];
        return;
    }
    const double* w1 = params_.data();
    const double* w2 = w1 + hidden_ * input_dim_;
    double* g1 = grad.data();
    double* g2 = g1 + hidden_ * input_dim_;
    for (std::size_t k = 0; k < hidden_; ++k) {
        double a = 0.0;
        for (std::size_t j = 0; j < input_dim_; ++j) a += w1[k * input_dim_ + j] * x[j];
        const double h = std::tanh(a);
        g2[k] += dscore * h;
        const double back = dscore * w2[k] * (1.0 - h * h);
        for (std::size_t j = 0; j < input_dim_; ++j) g1[k * input_dim_ + j] += back * x[j];
    }
    g2[hidden_] += dscore;
}

}  // namespace instill
