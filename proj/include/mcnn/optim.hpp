#pragma once

#include "mcnn/error.hpp"
#include "mcnn/nn.hpp"

#include <cmath>
#include <span>

namespace mcnn {

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const {
        detail::require(learning_rate > 0.0, "Adam: learning_rate must be positive");
        detail::require(beta1 > 0.0 && beta1 < 1.0, "Adam: beta1 must lie in (0, 1)");
        detail::require(beta2 > 0.0 && beta2 < 1.0, "Adam: beta2 must lie in (0, 1)");
        detail::require(epsilon > 0.0, "Adam: epsilon must be positive");
    }
};

/// One bias-corrected Adam update of `params` in place.
inline void adam_step(LayerParams& params, std::span<const double> grads, const AdamConfig& cfg) {
    cfg.validate();
    if (grads.size() != params.size())
        throw ArgumentError("adam_step: gradient has " + std::to_string(grads.size()) +
                            " entries, parameters have " + std::to_string(params.size()));
    ++params.step;
    const double t = static_cast<double>(params.step);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < grads.size(); ++i) {
        const double g = grads[i];
        params.m[i] = cfg.beta1 * params.m[i] + (1.0 - cfg.beta1) * g;
        params.v[i] = cfg.beta2 * params.v[i] + (1.0 - cfg.beta2) * g * g;
        const double m_hat = params.m[i] / c1;
        const double v_hat = params.v[i] / c2;
        params.values[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
}

}  // namespace mcnn
