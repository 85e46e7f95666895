#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "elastiq/data/dataset.hpp"
#include "elastiq/error.hpp"

namespace elastiq::sim {

using Profile = std::array<double, data::kPeriodsPerDay>;

/// 1 + amplitude * cos(2*pi*(period - peak)/96); periods are 1-based.
inline Profile cosine_profile(double level, double amplitude, double peak_period) {
    Profile p{};
    for (int k = 0; k < data::kPeriodsPerDay; ++k)
        p[static_cast<std::size_t>(k)] =
            level * (1.0 + amplitude * std::cos(2.0 * std::numbers::pi * (k + 1 - peak_period) / data::kPeriodsPerDay));
    return p;
}

// ---------------------------------------------------------------- prices

struct PriceProcessSpec {
    double mean = 40.0;              // mu, USD/MWh
    double reversion = 0.05;         // kappa per period
    double volatility = 0.03;        // sigma of the relative deviation
    double spike_intensity = 0.0035; // probability per period
    double spike_log_mean = 1.1;     // log of the multiplicative spike size
    double spike_log_sd = 0.25;
    Profile diurnal = cosine_profile(1.0, 0.3, 68);
};

inline void validate(const PriceProcessSpec& s) {
    if (!(s.mean > 0.0)) throw ConfigError("price.mean must be > 0");
    if (!(s.reversion >= 0.0 && s.reversion <= 1.0)) throw ConfigError("price.reversion must lie in [0, 1]");
    if (!(s.volatility >= 0.0)) throw ConfigError("price.volatility must be >= 0");
    if (!(s.spike_intensity >= 0.0 && s.spike_intensity <= 1.0))
        throw ConfigError("price.spike_intensity must lie in [0, 1]");
    if (!(s.spike_log_sd >= 0.0)) throw ConfigError("price.spike_log_sd must be >= 0");
    for (double m : s.diurnal)
        if (!(m > 0.0)) throw ConfigError("price.diurnal multipliers must be > 0");
}

struct PriceSeries {
    std::vector<double> price;
    std::vector<bool> spike; // a multiplicative spike was injected
};

/// lambda_t = mu * shape(period_t) * (1 + x_t) * s_t with
/// x_{t+1} = (1 - kappa) x_t + sigma * eps_t and s_t lognormal with
/// probability `spike_intensity`, else 1. `first_period` is the 0-based
/// within-day index of element 0.
inline PriceSeries synth_prices(const PriceProcessSpec& spec, std::size_t periods, std::uint64_t seed,
                                int first_period = 0) {
    validate(spec);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    PriceSeries out;
    out.price.resize(periods);
    out.spike.resize(periods);
    double x = 0.0;
    for (std::size_t t = 0; t < periods; ++t) {
        // Draw every variate unconditionally so the stream layout does not
        // depend on parameter values.
        const double eps = gauss(rng);
        const double u = unif(rng);
        const double z = gauss(rng);
        const bool spike = u < spec.spike_intensity;
        const double mult = spike ? std::exp(spec.spike_log_mean + spec.spike_log_sd * z) : 1.0;
        const auto period = static_cast<std::size_t>((static_cast<std::size_t>(first_period) + t) % data::kPeriodsPerDay);
        out.price[t] = spec.mean * spec.diurnal[period] * (1.0 + x) * mult;
        out.spike[t] = spike;
        x = (1.0 - spec.reversion) * x + spec.volatility * eps;
    }
    return out;
}

// ---------------------------------------------------------------- weather

struct WeatherSpec {
    double temp_mean = 27.0;      // °C
    double temp_amplitude = 6.0;  // diurnal half-swing
    double temp_peak_period = 62; // warmest period of the day
    double temp_noise = 0.4;      // AR(1) innovation sd
    double rh_mean = 60.0;        // %
    double rh_amplitude = 15.0;   // humidity is lowest when temperature peaks
    double rh_noise = 1.5;
    double persistence = 0.97;    // AR(1) coefficient of both noise terms
};

struct WeatherSeries {
    std::vector<double> temp_c, rh_pct, dewpoint_c;
};

/// Magnus approximation of the dew point.
inline double dewpoint(double temp_c, double rh_pct) {
    constexpr double b = 17.62, c = 243.12;
    const double g = std::log(std::max(rh_pct, 1e-3) / 100.0) + b * temp_c / (c + temp_c);
    return c * g / (b - g);
}

inline WeatherSeries synth_weather(const WeatherSpec& spec, std::size_t periods, std::uint64_t seed, int first_period = 0) {
    if (!(spec.persistence >= 0.0 && spec.persistence < 1.0)) throw ConfigError("weather.persistence must lie in [0, 1)");
    if (!(spec.temp_noise >= 0.0 && spec.rh_noise >= 0.0)) throw ConfigError("weather noise must be >= 0");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    WeatherSeries w;
    w.temp_c.resize(periods);
    w.rh_pct.resize(periods);
    w.dewpoint_c.resize(periods);
    double nt = 0.0, nh = 0.0;
    for (std::size_t t = 0; t < periods; ++t) {
        const double period = static_cast<double>((static_cast<std::size_t>(first_period) + t) % data::kPeriodsPerDay) + 1.0;
        const double cyc = std::cos(2.0 * std::numbers::pi * (period - spec.temp_peak_period) / data::kPeriodsPerDay);
        nt = spec.persistence * nt + spec.temp_noise * gauss(rng);
        nh = spec.persistence * nh + spec.rh_noise * gauss(rng);
        w.temp_c[t] = spec.temp_mean + spec.temp_amplitude * cyc + nt;
        w.rh_pct[t] = std::clamp(spec.rh_mean - spec.rh_amplitude * cyc + nh, 5.0, 100.0);
        w.dewpoint_c[t] = dewpoint(w.temp_c[t], w.rh_pct[t]);
    }
    return w;
}

} // namespace elastiq::sim
