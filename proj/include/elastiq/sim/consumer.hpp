#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "elastiq/data/dataset.hpp"
#include "elastiq/error.hpp"
#include "elastiq/sim/processes.hpp"

namespace elastiq::sim {

inline constexpr int kRollingWindow = 8;                  // T_rw
inline constexpr int kHorizon = kRollingWindow + 1;       // current + T_rw forecasts
inline constexpr double kPeriodHours = 0.25;

enum class ConsumerKind { Linear, Thermal, Shiftable, Insensitive };

inline const char* to_string(ConsumerKind k) {
    switch (k) {
    case ConsumerKind::Linear: return "linear";
    case ConsumerKind::Thermal: return "thermal";
    case ConsumerKind::Shiftable: return "shiftable";
    case ConsumerKind::Insensitive: return "insensitive";
    }
    return "?";
}

inline ConsumerKind consumer_kind_from(const std::string& s) {
    if (s == "linear") return ConsumerKind::Linear;
    if (s == "thermal") return ConsumerKind::Thermal;
    if (s == "shiftable") return ConsumerKind::Shiftable;
    if (s == "insensitive") return ConsumerKind::Insensitive;
    throw ConfigError("unknown consumer kind \"" + s + "\" (expected linear, thermal, shiftable or insensitive)");
}

/// Space cooling: theta_{k+1} = a theta_k + (1 - a)(theta_amb_k - R cop p_k)
/// with a = exp(-dt / (R C)).
struct ThermalParams {
    double resistance = 2.0;   // °C per MW of heat flow
    double capacitance = 1.0;  // MWh per °C
    double cop = 0.25;         // cooling effect per MW of electric power
    double setpoint_c = 24.0;
    double discomfort_weight = 40.0; // USD per °C² per period
    double overcool_weight = 0.0;    // below the setpoint; 0 means same as discomfort_weight
    double ramp_weight = 0.0;        // USD per MW² of change between periods
    double hvac_max = 40.0;          // MW
};

/// A daily job: `energy` MWh between within-day periods release..deadline
/// (1-based, inclusive) at no more than `max_rate` MW.
struct Job {
    double energy = 1.0;
    int release = 1;
    int deadline = 96;
    double max_rate = 10.0;
};

struct ConsumerSpec {
    ConsumerKind kind = ConsumerKind::Insensitive;
    Profile baseline = cosine_profile(50.0, 0.2, 60); // MW
    double p_min = 0.0;
    double p_max = 1e9;
    std::array<double, kHorizon> price_coef{}; // linear: c_0..c_8, MW per USD/MWh
    ThermalParams thermal;
    std::vector<Job> jobs;
};

inline void validate(const ConsumerSpec& s) {
    if (!(s.p_min <= s.p_max)) throw ConfigError("consumer: p_min > p_max");
    for (double b : s.baseline)
        if (!std::isfinite(b)) throw ConfigError("consumer: baseline must be finite");
    if (s.kind == ConsumerKind::Thermal) {
        const auto& t = s.thermal;
        if (!(t.resistance > 0 && t.capacitance > 0 && t.cop > 0 && t.discomfort_weight > 0 && t.hvac_max >= 0 &&
              t.ramp_weight >= 0 && t.overcool_weight >= 0))
            throw ConfigError("consumer.thermal: resistance, capacitance, cop, discomfort_weight must be > 0; "
                              "hvac_max, ramp_weight, overcool_weight >= 0");
    }
    if (s.kind == ConsumerKind::Shiftable) {
        for (std::size_t j = 0; j < s.jobs.size(); ++j) {
            const auto& job = s.jobs[j];
            const std::string name = "job " + std::to_string(j);
            if (job.deadline < job.release) throw ConfigError(name + " is infeasible: deadline < release");
            if (job.release < 1 || job.deadline > data::kPeriodsPerDay)
                throw ConfigError(name + ": release/deadline must be within-day periods 1..96");
            if (!(job.energy >= 0.0 && job.max_rate > 0.0)) throw ConfigError(name + ": energy >= 0 and max_rate > 0 required");
            if (job.energy > job.max_rate * kPeriodHours * (job.deadline - job.release + 1) + 1e-12)
                throw ConfigError(name + " is infeasible: energy exceeds max_rate over its window");
        }
    }
}

/// Decision-relevant memory carried from period to period.
struct ConsumerState {
    double theta = 24.0;            // room temperature (thermal)
    double hvac_prev = 0.0;         // last realized HVAC power (thermal)
    std::vector<double> remaining;  // undelivered energy per job (shiftable)
};

inline ConsumerState initial_state(const ConsumerSpec& s) {
    ConsumerState st;
    st.theta = s.thermal.setpoint_c;
    st.remaining.assign(s.jobs.size(), 0.0);
    return st;
}

/// Inputs to one decision at period t.
struct DecisionInput {
    std::array<double, kHorizon> prices{};   // realized price at t, then forecasts
    std::array<double, kHorizon> ambient{};  // temperatures at t .. t+8
    std::array<int, kHorizon> period{};      // within-day periods (1..96) at t .. t+8
};

struct ThermalSolution {
    std::array<double, kHorizon> hvac{};
    int sweeps = 0;
};

/// Minimizes sum_k [ lambda_k p_k dt + D(theta_{k+1} - setpoint) + w_r (p_k - p_{k-1})^2 ]
/// over p in [0, hvac_max]^9, with D(x) = w x^2 for x > 0 and w_cold x^2
/// for x < 0 (p_{-1} = hvac_prev). Projected coordinate descent with exact
/// line minimization; stops when no coordinate moves by 1e-8 or after 500
/// sweeps. D is C^1, so each line derivative is piecewise linear and
/// nondecreasing and its root is found segment by segment.
inline ThermalSolution solve_thermal(const ThermalParams& tp, double theta0, double hvac_prev,
                                     const std::array<double, kHorizon>& prices,
                                     const std::array<double, kHorizon>& ambient) {
    constexpr int H = kHorizon;
    const double a = std::exp(-kPeriodHours / (tp.resistance * tp.capacitance));
    const double gain = (1.0 - a) * tp.resistance * tp.cop;
    const double w_hot = tp.discomfort_weight;
    const double w_cold = tp.overcool_weight > 0.0 ? tp.overcool_weight : tp.discomfort_weight;
    const double wr = tp.ramp_weight;

    // dev[k] = theta_{k+1} - setpoint under the current plan; G(k, j) is the
    // cooling of theta_{k+1} per MW at period j <= k.
    std::array<double, H> dev{};
    std::array<std::array<double, H>, H> G{};
    double th = theta0;
    for (int k = 0; k < H; ++k) {
        th = a * th + (1.0 - a) * ambient[static_cast<std::size_t>(k)];
        dev[static_cast<std::size_t>(k)] = th - tp.setpoint_c;
        for (int j = 0; j <= k; ++j) G[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] = std::pow(a, k - j) * gain;
    }

    std::array<double, H> p{};
    // Line derivative along coordinate i at offset d.
    auto slope = [&](int i, double d) {
        const auto ii = static_cast<std::size_t>(i);
        double v = prices[ii] * kPeriodHours;
        for (int k = i; k < H; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            const double x = dev[kk] - G[kk][ii] * d;
            v -= 2.0 * (x > 0.0 ? w_hot : w_cold) * x * G[kk][ii];
        }
        if (wr > 0.0) {
            const double prev = i == 0 ? hvac_prev : p[ii - 1];
            v += 2.0 * wr * (p[ii] + d - prev);
            if (i + 1 < H) v -= 2.0 * wr * (p[ii + 1] - p[ii] - d);
        }
        return v;
    };

    ThermalSolution sol;
    std::array<double, H + 2> pts{};
    for (sol.sweeps = 1; sol.sweeps <= 500; ++sol.sweeps) {
        double max_step = 0.0;
        for (int i = 0; i < H; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            const double lo = -p[ii], hi = tp.hvac_max - p[ii];
            double d;
            if (slope(i, lo) >= 0.0) {
                d = lo;
            } else if (slope(i, hi) <= 0.0) {
                d = hi;
            } else {
                std::size_t n = 0;
                pts[n++] = lo;
                pts[n++] = hi;
                for (int k = i; k < H; ++k) {
                    const auto kk = static_cast<std::size_t>(k);
                    const double b = dev[kk] / G[kk][ii]; // theta_{k+1} reaches the setpoint
                    if (b > lo && b < hi) pts[n++] = b;
                }
                std::sort(pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(n));
                double x0 = pts[0], s0 = slope(i, x0);
                d = hi;
                for (std::size_t m = 1; m < n; ++m) {
                    const double x1 = pts[m], s1 = slope(i, x1);
                    if (s1 >= 0.0) {
                        d = s1 == s0 ? x1 : x0 - s0 * (x1 - x0) / (s1 - s0);
                        break;
                    }
                    x0 = x1;
                    s0 = s1;
                }
            }
            if (d != 0.0) {
                p[ii] += d;
                for (int k = i; k < H; ++k) dev[static_cast<std::size_t>(k)] -= G[static_cast<std::size_t>(k)][ii] * d;
                max_step = std::max(max_step, std::abs(d));
            }
        }
        if (max_step < 1e-8) break;
    }
    sol.sweeps = std::min(sol.sweeps, 500);
    sol.hvac = p;
    return sol;
}

inline double thermal_next(const ThermalParams& tp, double theta, double ambient, double hvac) {
    const double a = std::exp(-kPeriodHours / (tp.resistance * tp.capacitance));
    return a * theta + (1.0 - a) * (ambient - tp.resistance * tp.cop * hvac);
}

/// Greedy placement of `energy` MWh into the cheapest of `prices`
/// (ties to the earliest), at most `cap` MWh per period.
inline std::vector<double> place_greedy(std::span<const double> prices, double energy, double cap) {
    std::vector<std::size_t> order(prices.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return prices[i] < prices[j]; });
    std::vector<double> out(prices.size(), 0.0);
    for (std::size_t i : order) {
        if (energy <= 0.0) break;
        out[i] = std::min(cap, energy);
        energy -= out[i];
    }
    if (energy > 1e-9) throw ConfigError("shiftable job cannot be placed before its deadline");
    return out;
}

/// Plan for periods t .. t+8 (MW). Only element 0 is realized.
inline std::array<double, kHorizon> consumer_decide(const ConsumerSpec& spec, const DecisionInput& in,
                                                    const ConsumerState& st) {
    std::array<double, kHorizon> plan{};
    for (int k = 0; k < kHorizon; ++k)
        plan[static_cast<std::size_t>(k)] = spec.baseline[static_cast<std::size_t>(in.period[static_cast<std::size_t>(k)] - 1)];

    switch (spec.kind) {
    case ConsumerKind::Insensitive:
        return plan;
    case ConsumerKind::Linear: {
        // Every plan entry responds to the price vector seen from t.
        double resp = 0.0;
        for (int k = 0; k < kHorizon; ++k) resp += spec.price_coef[static_cast<std::size_t>(k)] * in.prices[static_cast<std::size_t>(k)];
        for (double& v : plan) v = std::clamp(v + resp, spec.p_min, spec.p_max);
        return plan;
    }
    case ConsumerKind::Thermal: {
        const auto sol = solve_thermal(spec.thermal, st.theta, st.hvac_prev, in.prices, in.ambient);
        for (int k = 0; k < kHorizon; ++k)
            plan[static_cast<std::size_t>(k)] = std::clamp(plan[static_cast<std::size_t>(k)] + sol.hvac[static_cast<std::size_t>(k)],
                                                           spec.p_min, spec.p_max);
        return plan;
    }
    case ConsumerKind::Shiftable: {
        const int now = in.period[0];
        for (std::size_t j = 0; j < spec.jobs.size(); ++j) {
            const auto& job = spec.jobs[j];
            if (now < job.release || now > job.deadline || st.remaining[j] <= 0.0) continue;
            // Feasible periods run to the deadline; beyond the forecast
            // horizon the last forecast is assumed to persist.
            const int n = job.deadline - now + 1;
            std::vector<double> prices(static_cast<std::size_t>(n));
            for (int k = 0; k < n; ++k) prices[static_cast<std::size_t>(k)] = in.prices[static_cast<std::size_t>(std::min(k, kHorizon - 1))];
            const auto energy = place_greedy(prices, st.remaining[j], job.max_rate * kPeriodHours);
            for (int k = 0; k < std::min(n, kHorizon); ++k)
                plan[static_cast<std::size_t>(k)] += energy[static_cast<std::size_t>(k)] / kPeriodHours;
        }
        for (double& v : plan) v = std::clamp(v, spec.p_min, spec.p_max);
        return plan;
    }
    }
    return plan;
}

/// Advances the consumer state after `load` MW was realized at period t.
inline void consumer_commit(const ConsumerSpec& spec, const DecisionInput& in, const std::array<double, kHorizon>& plan,
                            ConsumerState& st) {
    if (spec.kind == ConsumerKind::Thermal) {
        const double hvac = std::max(0.0, plan[0] - spec.baseline[static_cast<std::size_t>(in.period[0] - 1)]);
        st.theta = thermal_next(spec.thermal, st.theta, in.ambient[0], hvac);
        st.hvac_prev = hvac;
    } else if (spec.kind == ConsumerKind::Shiftable) {
        const int now = in.period[0];
        // Recompute each job's own share of the realized period.
        for (std::size_t j = 0; j < spec.jobs.size(); ++j) {
            const auto& job = spec.jobs[j];
            if (now < job.release || now > job.deadline || st.remaining[j] <= 0.0) continue;
            const int n = job.deadline - now + 1;
            std::vector<double> prices(static_cast<std::size_t>(n));
            for (int k = 0; k < n; ++k) prices[static_cast<std::size_t>(k)] = in.prices[static_cast<std::size_t>(std::min(k, kHorizon - 1))];
            st.remaining[j] -= place_greedy(prices, st.remaining[j], job.max_rate * kPeriodHours)[0];
            if (st.remaining[j] < 1e-12) st.remaining[j] = 0.0;
        }
    }
}

/// Jobs are re-armed at the first period of every day.
inline void consumer_new_day(const ConsumerSpec& spec, ConsumerState& st) {
    for (std::size_t j = 0; j < spec.jobs.size(); ++j) st.remaining[j] = spec.jobs[j].energy;
}

} // namespace elastiq::sim
