#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace instill {

struct AdamWParams {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

struct OptimizerState {
    std::size_t step = 0;
    std::vector<double> m;  // first moment
    std::vector<double> v;  // second moment, never negative
    AdamWParams params;

    OptimizerState() = default;
    OptimizerState(std::size_t num_params, AdamWParams p)
        : m(num_params, 0.0), v(num_params, 0.0), params(p) {}
};

/// One AdamW update with decoupled weight decay:
///
///     m <- b1 m + (1 - b1) g
///     v <- b2 v + (1 - b2) g^2
///     theta <- theta - lr (m_hat / (sqrt(v_hat) + eps) + wd theta)
///
/// with bias-corrected m_hat, v_hat.
void adamw_step(OptimizerState& state, std::span<double> theta, std::span<const double> grad);

}  // namespace instill
