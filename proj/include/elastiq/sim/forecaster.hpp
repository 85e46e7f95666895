#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "elastiq/data/dataset.hpp"
#include "elastiq/error.hpp"
#include "elastiq/stats.hpp"

namespace elastiq::sim {

/// Realized price history with an optional single-entry override, so a
/// re-simulation can perturb one price without copying the series.
struct PriceView {
    std::span<const double> base;
    std::size_t override_index = std::numeric_limits<std::size_t>::max();
    double override_value = 0.0;

    double operator[](std::size_t t) const { return t == override_index ? override_value : base[t]; }
    std::size_t size() const { return base.size(); }
};

struct ForecasterSpec {
    int ar_order = 4;
    double ridge = 1e-6;
    double spike_quantile = 0.95;
    double elevation_factor = 1.0; // >= 1; 1 disables the spike regime
    double half_life = 4.0;        // periods
    double decay_half_lives = 4.0; // elevation applies while age < this * half_life
};

inline void validate(const ForecasterSpec& s) {
    if (s.ar_order < 1) throw ConfigError("forecaster.ar_order must be >= 1");
    if (!(s.ridge >= 0.0)) throw ConfigError("forecaster.ridge must be >= 0");
    if (!(s.spike_quantile > 0.0 && s.spike_quantile < 1.0)) throw ConfigError("forecaster.spike_quantile must lie in (0, 1)");
    if (!(s.elevation_factor >= 1.0)) throw ConfigError("forecaster.elevation_factor must be >= 1");
    if (!(s.half_life > 0.0)) throw ConfigError("forecaster.half_life must be > 0");
    if (!(s.decay_half_lives > 0.0)) throw ConfigError("forecaster.decay_half_lives must be > 0");
}

/// Diurnal profile plus AR(p) on deviations from it, fit once on a
/// warm-up window; prices above `threshold` count as spikes.
struct ForecasterModel {
    ForecasterSpec spec;
    std::array<double, data::kPeriodsPerDay> profile{};
    std::vector<double> ar; // ar[j] multiplies the deviation at lag j + 1
    double threshold = 0.0;
    int first_period = 0;   // within-day index (0-based) of series element 0

    double profile_at(std::size_t t) const {
        return profile[(static_cast<std::size_t>(first_period) + t) % data::kPeriodsPerDay];
    }

    /// Elevation multiplier for a spike `age` periods old.
    double elevation(std::int64_t age) const {
        if (age < 0 || static_cast<double>(age) >= spec.decay_half_lives * spec.half_life) return 1.0;
        return std::pow(spec.elevation_factor, std::pow(0.5, static_cast<double>(age) / spec.half_life));
    }
};

/// Per-run forecaster state: time of the most recent spike.
struct ForecasterState {
    std::optional<std::size_t> last_spike;
};

/// Fits profile, AR coefficients and spike threshold on prices[0, n).
/// The profile is the per-period mean of non-spike prices; AR rows touching
/// a spike are left out so the coefficients describe the normal regime.
inline ForecasterModel fit_forecaster(const ForecasterSpec& spec, std::span<const double> prices, int first_period = 0) {
    validate(spec);
    const auto p = static_cast<std::size_t>(spec.ar_order);
    if (prices.size() < p + 1)
        throw ConfigError("forecaster: history of " + std::to_string(prices.size()) + " periods does not cover AR order " +
                          std::to_string(p));
    ForecasterModel m;
    m.spec = spec;
    m.first_period = first_period;
    m.threshold = percentile(prices, spec.spike_quantile);

    std::array<double, data::kPeriodsPerDay> sum{}, all_sum{};
    std::array<int, data::kPeriodsPerDay> cnt{}, all_cnt{};
    for (std::size_t t = 0; t < prices.size(); ++t) {
        const auto k = (static_cast<std::size_t>(first_period) + t) % data::kPeriodsPerDay;
        all_sum[k] += prices[t];
        ++all_cnt[k];
        if (prices[t] <= m.threshold) {
            sum[k] += prices[t];
            ++cnt[k];
        }
    }
    double fallback = 0.0;
    for (double v : prices) fallback += v;
    fallback /= static_cast<double>(prices.size());
    for (std::size_t k = 0; k < m.profile.size(); ++k)
        m.profile[k] = cnt[k] ? sum[k] / cnt[k] : (all_cnt[k] ? all_sum[k] / all_cnt[k] : fallback);

    std::vector<double> d(prices.size());
    for (std::size_t t = 0; t < prices.size(); ++t) d[t] = prices[t] - m.profile_at(t);

    Eigen::MatrixXd XtX = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    Eigen::VectorXd Xty = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    Eigen::VectorXd row(static_cast<Eigen::Index>(p));
    for (std::size_t t = p; t < prices.size(); ++t) {
        bool clean = prices[t] <= m.threshold;
        for (std::size_t j = 1; j <= p && clean; ++j) clean = prices[t - j] <= m.threshold;
        if (!clean) continue;
        for (std::size_t j = 0; j < p; ++j) row(static_cast<Eigen::Index>(j)) = d[t - j - 1];
        XtX.noalias() += row * row.transpose();
        Xty.noalias() += row * d[t];
    }
    XtX.diagonal().array() += spec.ridge;
    Eigen::VectorXd a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    if (XtX.diagonal().maxCoeff() > 0.0) a = XtX.ldlt().solve(Xty);
    if (!a.allFinite()) throw NumericError("forecaster: AR fit is not finite");
    m.ar.assign(a.data(), a.data() + a.size());
    return m;
}

/// Records whether the realized price at t is a spike. Call once per period,
/// before forecasting from t.
inline void observe(const ForecasterModel& m, ForecasterState& s, const PriceView& prices, std::size_t t) {
    if (prices[t] > m.threshold) s.last_spike = t;
}

/// AR forecast of periods t+1 .. t+horizon from the realized history
/// through t, without the spike-regime elevation.
inline std::vector<double> plain_forecast(const ForecasterModel& m, const PriceView& prices, std::size_t t, int horizon) {
    const auto p = m.ar.size();
    if (t + 1 < p) throw ConfigError("forecaster: insufficient history at period " + std::to_string(t));
    std::vector<double> dev(p + static_cast<std::size_t>(horizon)); // dev[p-1] is lag 0
    for (std::size_t j = 0; j < p; ++j) dev[p - 1 - j] = prices[t - j] - m.profile_at(t - j);
    std::vector<double> out(static_cast<std::size_t>(horizon));
    for (int k = 1; k <= horizon; ++k) {
        const std::size_t pos = p - 1 + static_cast<std::size_t>(k);
        double v = 0.0;
        for (std::size_t j = 0; j < p; ++j) v += m.ar[j] * dev[pos - 1 - j];
        dev[pos] = v;
        out[static_cast<std::size_t>(k - 1)] = m.profile_at(t + static_cast<std::size_t>(k)) + v;
    }
    return out;
}

/// Forecast of periods t+1 .. t+horizon; multiplied by elevation(age) while a
/// spike seen at t - age is inside the decay window.
inline std::vector<double> rolling_forecast(const ForecasterModel& m, const ForecasterState& s, const PriceView& prices,
                                            std::size_t t, int horizon) {
    auto f = plain_forecast(m, prices, t, horizon);
    if (s.last_spike && m.spec.elevation_factor > 1.0) {
        const double e = m.elevation(static_cast<std::int64_t>(t - *s.last_spike));
        for (double& v : f) v *= e;
    }
    return f;
}

} // namespace elastiq::sim
