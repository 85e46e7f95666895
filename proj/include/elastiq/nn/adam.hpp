#pragma once

#include <cmath>
#include <string_view>

#include "elastiq/nn/bptt.hpp"
#include "elastiq/nn/lstm.hpp"

namespace elastiq::nn {

struct AdamState {
    NetworkParams m;
    NetworkParams v;
    long step = 0;

    static AdamState for_params(const NetworkParams& p) { return {zeros_like(p), zeros_like(p), 0}; }
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

/// Bias-corrected Adam update of every trainable block. Blocks outside the
/// trainable scope are not touched, so they stay bit-identical.
inline void optimizer_step(NetworkParams& params, const NetworkParams& grads, AdamState& state,
                           const TrainConfig& cfg) {
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(kAdamBeta1, t);
    const double bc2 = 1.0 - std::pow(kAdamBeta2, t);
    const double lr = cfg.learning_rate;
    const bool head_only = cfg.scope == TrainableScope::HeadOnly;

    std::vector<double*> m_blocks, v_blocks;
    for_each_block(state.m, [&](std::string_view, bool, auto& b) { m_blocks.push_back(b.data()); });
    for_each_block(state.v, [&](std::string_view, bool, auto& b) { v_blocks.push_back(b.data()); });
    std::size_t k = 0;
    for_each_block_pair(params, grads, [&](std::string_view, bool in_cell, auto& p, const auto& g) {
        double* m = m_blocks[k];
        double* v = v_blocks[k];
        ++k;
        if (head_only && in_cell) return;
        double* theta = p.data();
        const double* grad = g.data();
        for (Index j = 0; j < p.size(); ++j) {
            m[j] = kAdamBeta1 * m[j] + (1.0 - kAdamBeta1) * grad[j];
            v[j] = kAdamBeta2 * v[j] + (1.0 - kAdamBeta2) * grad[j] * grad[j];
            const double m_hat = m[j] / bc1;
            const double v_hat = v[j] / bc2;
            theta[j] -= lr * m_hat / (std::sqrt(v_hat) + kAdamEpsilon);
        }
    });
}

} // namespace elastiq::nn
