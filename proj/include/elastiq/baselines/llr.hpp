#pragma once

#include <cmath>
#include <cstdlib>
#include <span>
#include <string>
#include <vector>

#include "elastiq/data/dataset.hpp"
#include "elastiq/error.hpp"
#include "elastiq/estimator/elasticity.hpp"

namespace elastiq::baselines {

/// Local linear regression of p_{t+tau} on lambda_t over a temporal
/// neighborhood of the anchor: the same clock time and adjacent periods on
/// the anchor day and the `lookback_days` before it, Gaussian-weighted by
/// the within-day offset.
struct LlrConfig {
    double bandwidth = 12.0; // periods
    double ridge = 1e-6;     // on the slope only
    int lookback_days = 14;
    double cutoff = 3.0;     // offsets beyond cutoff * bandwidth are dropped
};

inline void validate(const LlrConfig& c) {
    if (!(c.bandwidth > 0.0)) throw ConfigError("llr.bandwidth must be > 0");
    if (!(c.ridge >= 0.0)) throw ConfigError("llr.ridge must be >= 0");
    if (c.lookback_days < 0) throw ConfigError("llr.lookback_days must be >= 0");
    if (!(c.cutoff > 0.0)) throw ConfigError("llr.cutoff must be > 0");
}

/// Weighted observation (x, y, w) of a local regression.
struct WeightedPoint {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
};

struct LocalFit {
    double intercept = 0.0;
    double slope = 0.0;
    bool ok = false;
};

/// Solves the 2x2 normal equations of min sum w (y - a - b x)^2 + ridge b^2.
inline LocalFit weighted_linear_fit(std::span<const WeightedPoint> pts, double ridge) {
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& p : pts) {
        sw += p.w;
        sx += p.w * p.x;
        sy += p.w * p.y;
        sxx += p.w * p.x * p.x;
        sxy += p.w * p.x * p.y;
    }
    LocalFit f;
    // Centered form of the determinant avoids cancellation for large x.
    if (!(sw > 0.0)) return f;
    const double mx = sx / sw, my = sy / sw;
    const double cxx = sxx - sw * mx * mx + ridge, cxy = sxy - sw * mx * my;
    if (!(cxx > 1e-12 * std::max(1.0, sxx)) || !std::isfinite(cxx) || !std::isfinite(cxy)) return f;
    f.slope = cxy / cxx;
    f.intercept = my - f.slope * mx;
    f.ok = true;
    return f;
}

struct LlrResult {
    std::vector<ElasticityVector> estimates;
    std::vector<std::size_t> flagged; // anchors whose local system was singular
};

/// Neighborhood of anchor tc for horizon tau: periods t <= tc with t + tau
/// inside the dataset, at most lookback_days days back, within-day offset
/// from tc's period inside the cutoff.
inline std::vector<WeightedPoint> llr_neighborhood(const data::SeriesDataset& ds, std::size_t tc, int tau,
                                                   const LlrConfig& cfg) {
    std::vector<WeightedPoint> pts;
    const auto P = static_cast<std::int64_t>(data::kPeriodsPerDay);
    const auto itc = static_cast<std::int64_t>(tc);
    const auto reach = static_cast<std::int64_t>(std::floor(cfg.cutoff * cfg.bandwidth));
    for (std::int64_t d = cfg.lookback_days; d >= 0; --d) {
        for (std::int64_t j = -reach; j <= reach; ++j) {
            const std::int64_t t = itc - d * P + j;
            if (t < 0 || t > itc || t + tau >= static_cast<std::int64_t>(ds.size())) continue;
            const double z = static_cast<double>(j) / cfg.bandwidth;
            const auto ut = static_cast<std::size_t>(t);
            pts.push_back({ds[ut].price, ds[ut + static_cast<std::size_t>(tau)].load, std::exp(-0.5 * z * z)});
        }
    }
    return pts;
}

inline LlrResult llr_estimate(const data::SeriesDataset& ds, std::span<const std::size_t> anchors,
                              const LlrConfig& cfg) {
    validate(cfg);
    LlrResult out;
    for (const std::size_t tc : anchors) {
        if (tc + kElasticityLength > ds.size()) throw ConfigError("llr: anchor " + std::to_string(tc) + " has no full tail");
        ElasticityVector v{tc, ds[tc].timestamp, {}};
        bool ok = true;
        for (int tau = 0; tau < kElasticityLength && ok; ++tau) {
            const auto pts = llr_neighborhood(ds, tc, tau, cfg);
            const auto fit = pts.size() >= 3 ? weighted_linear_fit(pts, cfg.ridge) : LocalFit{};
            ok = fit.ok;
            v.e[static_cast<std::size_t>(tau)] = fit.slope * ds[tc].price / ds[tc + static_cast<std::size_t>(tau)].load;
        }
        if (!ok) {
            v.e.fill(0.0);
            out.flagged.push_back(tc);
        }
        out.estimates.push_back(v);
    }
    return out;
}

} // namespace elastiq::baselines
