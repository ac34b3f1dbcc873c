#include "instill/ranknet.hpp"

#include <cmath>

#include "instill/error.hpp"

namespace instill {

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void check(std::span<const std::size_t> ranks, std::span<const double> scores) {
    if (ranks.size() != scores.size())
        throw UsageError("ranknet: " + std::to_string(ranks.size()) + " ranks for " +
                         std::to_string(scores.size()) + " scores");
}

}  // namespace

double ranknet_loss_and_grad(std::span<const std::size_t> teacher_ranks,
                             std::span<const double> student_scores, std::span<double> grad) {
    check(teacher_ranks, student_scores);
    if (grad.size() != student_scores.size()) throw UsageError("ranknet: gradient buffer has the wrong size");
    std::fill(grad.begin(), grad.end(), 0.0);
    const auto n = student_scores.size();
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (!(teacher_ranks[i] < teacher_ranks[j])) continue;
            const double margin = student_scores[i] - student_scores[j];
            loss += softplus(-margin);
            const double push = sigmoid(-margin);
            grad[i] -= push;
            grad[j] += push;
        }
    }
    return loss;
}

double ranknet_loss(std::span<const std::size_t> teacher_ranks, std::span<const double> student_scores) {
    std::vector<double> grad(student_scores.size());
    return ranknet_loss_and_grad(teacher_ranks, student_scores, grad);
}

std::vector<double> ranknet_grad(std::span<const std::size_t> teacher_ranks,
                                 std::span<const double> student_scores) {
    std::vector<double> grad(student_scores.size());
    ranknet_loss_and_grad(teacher_ranks, student_scores, grad);
    return grad;
}

}  // namespace instill
