#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace instill {

/// Pairwise logistic loss against a reference ranking:
///
///     L = sum over (i, j) with teacher_rank[i] < teacher_rank[j]
///             of log(1 + exp(-(s_i - s_j)))
///
/// The teacher-preferred item is pushed toward the higher score. Pairs with
/// equal teacher rank contribute nothing.
double ranknet_loss(std::span<const std::size_t> teacher_ranks,
                    std::span<const double> student_scores);

/// dL/ds for ranknet_loss(). Entries always sum to zero.
std::vector<double> ranknet_grad(std::span<const std::size_t> teacher_ranks,
                                 std::span<const double> student_scores);

/// Loss and gradient in one pass; `grad` is overwritten.
double ranknet_loss_and_grad(std::span<const std::size_t> teacher_ranks,
                             std::span<const double> student_scores,
                             std::span<double> grad);

}  // namespace instill
