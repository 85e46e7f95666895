#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "elastiq/error.hpp"

namespace elastiq {

/// q-quantile with linear interpolation between order statistics
/// (position q * (n - 1)), q in [0, 1].
inline double percentile(std::span<const double> xs, double q) {
    if (xs.empty()) throw ConfigError("percentile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("percentile: q outside [0, 1]");
    std::vector<double> v(xs.begin(), xs.end());
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double median(std::span<const double> xs) { return percentile(xs, 0.5); }

} // namespace elastiq
