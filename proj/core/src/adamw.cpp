#include "instill/adamw.hpp"

#include <cmath>

#include "instill/error.hpp"

namespace instill {

void adamw_step(OptimizerState& state, std::span<double> theta, std::span<const double> grad) {
    if (theta.size() != grad.size() || state.m.size() != theta.size() || state.v.size() != theta.size())
        throw UsageError("adamw_step: parameter, gradient and moment sizes differ");
    const auto& p = state.params;
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(p.beta1, t);
    const double correction2 = 1.0 - std::pow(p.beta2, t);
    for (std::size_t k = 0; k < theta.size(); ++k) {
        const double g = grad[k];
        state.m[k] = p.beta1 * state.m[k] + (1.0 - p.beta1) * g;
        state.v[k] = p.beta2 * state.v[k] + (1.0 - p.beta2) * g * g;
        const double m_hat = state.m[k] / correction1;
        const double v_hat = state.v[k] / correction2;
        theta[k] -= p.lr * (m_hat / (std::sqrt(v_hat) + p.eps) + p.weight_decay * theta[k]);
    }
}

}  // namespace instill
