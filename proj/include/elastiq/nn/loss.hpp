#pragma once

#include <cmath>
#include <span>
#include <string>

#include "elastiq/error.hpp"

namespace elastiq::nn {

/// Σ w_k (pred_k − target_k)² / Σ w_k.
///
/// Throws EmptyLossError when every weight is zero, which is how a fully
/// filtered batch shows up.
inline double weighted_mse(std::span<const double> preds, std::span<const double> targets,
                           std::span<const double> weights) {
    if (preds.size() != targets.size() || preds.size() != weights.size())
        throw ConfigError("weighted_mse: length mismatch");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < preds.size(); ++k) {
        if (!(weights[k] >= 0.0)) throw ConfigError("weighted_mse: weight " + std::to_string(k) + " is negative");
        const double d = preds[k] - targets[k];
        num += weights[k] * (d * d);
        den += weights[k];
    }
    if (den == 0.0) throw EmptyLossError("weighted_mse: all weights are zero");
    return num / den;
}

inline double mse(std::span<const double> preds, std::span<const double> targets) {
    if (preds.size() != targets.size()) throw ConfigError("mse: length mismatch");
    if (preds.empty()) throw EmptyLossError("mse: empty input");
    double num = 0.0;
    for (std::size_t k = 0; k < preds.size(); ++k) {
        const double d = preds[k] - targets[k];
        num += d * d;
    }
    return num / static_cast<double>(preds.size());
}

} // namespace elastiq::nn
