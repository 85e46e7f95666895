#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "elastiq/nn/bptt.hpp"

namespace elastiq::nn {

struct GradientCheckEntry {
    std::string block;
    Index index;
    double analytic;
    double numeric;
    double rel_error;
};

struct GradientCheckResult {
    double max_rel_error = 0.0;
    std::vector<GradientCheckEntry> entries;
};

/// Relative error |a − n| / max(|a|, |n|). Pairs where both magnitudes are
/// below `floor` are compared against the floor instead, so round-off on
/// vanishing gradients does not dominate.
inline double relative_error(double analytic, double numeric, double floor = 1e-8) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / scale;
}

/// Compares supplied analytic gradients against central differences of the
/// loss on a seeded random subset of parameters. The subset draws
/// `per_block` entries from every trainable block, so every block is covered.
inline GradientCheckResult gradient_check(const NetworkParams& params, std::span<const Example> batch,
                                          const TrainConfig& cfg, const NetworkParams& analytic, double eps,
                                          std::uint64_t seed = 7, std::size_t per_block = 4) {
    if (!(eps > 0.0)) throw ConfigError("gradient_check: eps must be positive");
    const bool head_only = cfg.scope == TrainableScope::HeadOnly;
    NetworkParams probe = params;
    std::mt19937_64 rng(seed);

    auto loss_at = [&](const NetworkParams& p) {
        TrainConfig c = cfg;
        c.scope = TrainableScope::HeadOnly; // loss value only
        return bptt_gradients(batch, p, c).loss;
    };

    std::vector<const double*> analytic_blocks;
    for_each_block(analytic, [&](std::string_view, bool, const auto& b) { analytic_blocks.push_back(b.data()); });

    GradientCheckResult result;
    std::size_t k = 0;
    for_each_block(probe, [&](std::string_view name, bool in_cell, auto& block) {
        const double* a = analytic_blocks[k++];
        if (head_only && in_cell) return;
        const std::size_t n = static_cast<std::size_t>(block.size());
        std::vector<std::size_t> idx(n);
        for (std::size_t j = 0; j < n; ++j) idx[j] = j;
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(std::min(n, per_block));
        for (const std::size_t j : idx) {
            double* theta = block.data() + j;
            const double saved = *theta;
            *theta = saved + eps;
            const double up = loss_at(probe);
            *theta = saved - eps;
            const double down = loss_at(probe);
            *theta = saved;
            const double numeric = (up - down) / (2.0 * eps);
            const double rel = relative_error(a[j], numeric);
            result.entries.push_back({std::string(name), static_cast<Index>(j), a[j], numeric, rel});
            result.max_rel_error = std::max(result.max_rel_error, rel);
        }
    });
    return result;
}

/// Convenience overload: checks bptt_gradients itself.
inline GradientCheckResult gradient_check(const NetworkParams& params, std::span<const Example> batch,
                                          const TrainConfig& cfg, double eps, std::uint64_t seed = 7,
                                          std::size_t per_block = 4) {
    const auto analytic = bptt_gradients(batch, params, cfg).grads;
    return gradient_check(params, batch, cfg, analytic, eps, seed, per_block);
}

} // namespace elastiq::nn
