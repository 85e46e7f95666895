#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "elastiq/sim/scenario.hpp"
#include "elastiq/sim/simulator.hpp"
#include "elastiq/stats.hpp"

namespace sim = elastiq::sim;

#ifndef ELASTIQ_SOURCE_DIR
#define ELASTIQ_SOURCE_DIR "."
#endif

namespace {

std::filesystem::path config_path(const char* name) {
    return std::filesystem::path(ELASTIQ_SOURCE_DIR) / "configs" / name;
}

sim::Scenario flat_linear(double price, double baseline, double c0, int days = 3) {
    sim::Scenario sc;
    sc.days = days;
    sc.warmup_days = 2;
    sc.price.mean = price;
    sc.price.volatility = 0.0;
    sc.price.spike_intensity = 0.0;
    sc.price.diurnal.fill(1.0);
    sc.consumer.kind = sim::ConsumerKind::Linear;
    sc.consumer.baseline.fill(baseline);
    sc.consumer.price_coef[0] = c0;
    return sc;
}

// Objective of the thermal planning problem evaluated by forward simulation.
double thermal_objective(const sim::ThermalParams& tp, double theta0, double prev,
                         const std::array<double, sim::kHorizon>& p, const std::array<double, sim::kHorizon>& lam,
                         const std::array<double, sim::kHorizon>& amb) {
    double th = theta0, j = 0.0, last = prev;
    const double w_cold = tp.overcool_weight > 0 ? tp.overcool_weight : tp.discomfort_weight;
    for (int k = 0; k < sim::kHorizon; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        th = sim::thermal_next(tp, th, amb[kk], p[kk]);
        const double d = th - tp.setpoint_c;
        j += lam[kk] * p[kk] * sim::kPeriodHours + (d > 0 ? tp.discomfort_weight : w_cold) * d * d;
        j += tp.ramp_weight * (p[kk] - last) * (p[kk] - last);
        last = p[kk];
    }
    return j;
}

} // namespace

// ---------------------------------------------------------------- processes

TEST(Prices, DeterministicLimitEqualsShape) {
    sim::PriceProcessSpec spec;
    spec.spike_intensity = 0.0;
    spec.volatility = 0.0;
    const auto s = sim::synth_prices(spec, 300, 9);
    for (std::size_t t = 0; t < s.price.size(); ++t) EXPECT_EQ(s.price[t], spec.mean * spec.diurnal[t % 96]);
}

TEST(Prices, SameSeedSameSeries) {
    sim::PriceProcessSpec spec;
    EXPECT_EQ(sim::synth_prices(spec, 5000, 4).price, sim::synth_prices(spec, 5000, 4).price);
    EXPECT_NE(sim::synth_prices(spec, 5000, 4).price, sim::synth_prices(spec, 5000, 5).price);
}

TEST(Prices, SpikeFractionOverAYear) {
    sim::PriceProcessSpec spec;
    spec.spike_intensity = 0.0035;
    const auto s = sim::synth_prices(spec, 365 * 96, 21);
    const double thr = elastiq::percentile(s.price, 0.95);
    const auto above = std::count_if(s.price.begin(), s.price.end(), [&](double v) { return v > thr; });
    const double frac = static_cast<double>(above) / static_cast<double>(s.price.size());
    EXPECT_GE(frac, 0.03);
    EXPECT_LE(frac, 0.07);
    // Injected spikes follow the intensity (binomial, 5 sigma band).
    const auto spikes = std::count(s.spike.begin(), s.spike.end(), true);
    const double n = static_cast<double>(s.price.size()), mu = 0.0035 * n;
    EXPECT_LT(std::abs(static_cast<double>(spikes) - mu), 5.0 * std::sqrt(mu));
}

TEST(Prices, InvalidSpecRejected) {
    sim::PriceProcessSpec spec;
    spec.mean = 0.0;
    EXPECT_THROW(sim::synth_prices(spec, 10, 1), elastiq::ConfigError);
    spec = {};
    spec.spike_intensity = 1.5;
    EXPECT_THROW(sim::synth_prices(spec, 10, 1), elastiq::ConfigError);
}

TEST(Weather, DewpointBelowTemperature) {
    const auto w = sim::synth_weather(sim::WeatherSpec{}, 2000, 3);
    for (std::size_t t = 0; t < w.temp_c.size(); ++t) {
        EXPECT_LE(w.dewpoint_c[t], w.temp_c[t] + 1e-9);
        EXPECT_GE(w.rh_pct[t], 0.0);
        EXPECT_LE(w.rh_pct[t], 100.0);
    }
    // Saturated air: dew point equals temperature.
    EXPECT_NEAR(sim::dewpoint(20.0, 100.0), 20.0, 1e-9);
}

// ---------------------------------------------------------------- forecaster

TEST(Forecaster, ConstantHistoryGivesConstantForecast) {
    const std::vector<double> hist(300, 37.5);
    const auto m = sim::fit_forecaster(sim::ForecasterSpec{}, hist);
    sim::ForecasterState st;
    const sim::PriceView v{hist};
    for (std::size_t t = 10; t < hist.size(); t += 17) {
        sim::observe(m, st, v, t);
        for (double f : sim::rolling_forecast(m, st, v, t, 8)) EXPECT_DOUBLE_EQ(f, 37.5);
    }
    EXPECT_FALSE(st.last_spike.has_value());
}

TEST(Forecaster, RecoversArCoefficient) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> prices(96 * 60);
    double d = 0.0;
    for (auto& p : prices) {
        d = 0.8 * d + g(rng);
        p = 50.0 + d;
    }
    sim::ForecasterSpec spec;
    spec.spike_quantile = 0.999;
    const auto m = sim::fit_forecaster(spec, prices);
    EXPECT_NEAR(m.ar[0], 0.8, 0.05);
    for (std::size_t j = 1; j < m.ar.size(); ++j) EXPECT_NEAR(m.ar[j], 0.0, 0.05);
}

TEST(Forecaster, ElevationAfterSpike) {
    std::vector<double> prices(400);
    for (std::size_t t = 0; t < prices.size(); ++t) prices[t] = 40.0 + 3.0 * std::sin(0.3 * static_cast<double>(t));
    sim::ForecasterSpec spec;
    spec.elevation_factor = 3.0;
    spec.half_life = 4.0;
    const auto m = sim::fit_forecaster(spec, std::span<const double>(prices).first(300));
    prices[350] = 400.0;
    const sim::PriceView v{prices};
    sim::ForecasterState st;
    for (std::size_t t = 340; t <= 350; ++t) sim::observe(m, st, v, t);
    ASSERT_EQ(st.last_spike, std::optional<std::size_t>(350));
    const auto plain = sim::plain_forecast(m, v, 350, 8);
    const auto elev = sim::rolling_forecast(m, st, v, 350, 8);
    for (std::size_t k = 0; k < plain.size(); ++k) EXPECT_GE(elev[k], plain[k]);
}

TEST(Forecaster, ElevationDecayIsGeometric) {
    sim::ForecasterModel m;
    m.spec.elevation_factor = 2.7;
    m.spec.half_life = 5.0;
    EXPECT_NEAR(m.elevation(0), 2.7, 1e-9);
    EXPECT_NEAR(m.elevation(5), std::sqrt(2.7), 1e-9);
    EXPECT_NEAR(m.elevation(10), std::sqrt(std::sqrt(2.7)), 1e-9);
    EXPECT_EQ(m.elevation(20), 1.0); // outside the 4-half-life window
    // Ratio to the plain forecast at the logged ages.
    std::vector<double> prices(200, 40.0);
    for (std::size_t t = 0; t < prices.size(); ++t) prices[t] += std::cos(0.1 * static_cast<double>(t));
    const auto fit = sim::fit_forecaster(m.spec, prices);
    const sim::PriceView v{prices};
    for (int age : {0, 5, 10}) {
        sim::ForecasterState st;
        st.last_spike = 150;
        const std::size_t t = 150 + static_cast<std::size_t>(age);
        const auto e = sim::rolling_forecast(fit, st, v, t, 8);
        const auto p = sim::plain_forecast(fit, v, t, 8);
        for (std::size_t k = 0; k < e.size(); ++k) EXPECT_NEAR(e[k] / p[k], std::pow(2.7, std::pow(0.5, age / 5.0)), 1e-9);
    }
}

TEST(Forecaster, InsufficientHistory) {
    const std::vector<double> few(3, 1.0);
    EXPECT_THROW(sim::fit_forecaster(sim::ForecasterSpec{}, few), elastiq::ConfigError);
    const std::vector<double> hist(100, 1.0);
    const auto m = sim::fit_forecaster(sim::ForecasterSpec{}, hist);
    EXPECT_THROW(sim::plain_forecast(m, sim::PriceView{hist}, 1, 8), elastiq::ConfigError);
}

// ---------------------------------------------------------------- consumers

TEST(Consumer, InsensitiveReturnsBaseline) {
    sim::ConsumerSpec spec;
    sim::DecisionInput in;
    for (int k = 0; k < sim::kHorizon; ++k) {
        in.period[static_cast<std::size_t>(k)] = 30 + k;
        in.prices[static_cast<std::size_t>(k)] = 1000.0 * (k + 1);
    }
    const auto plan = sim::consumer_decide(spec, in, sim::initial_state(spec));
    for (int k = 0; k < sim::kHorizon; ++k) EXPECT_EQ(plan[static_cast<std::size_t>(k)], spec.baseline[static_cast<std::size_t>(29 + k)]);
}

TEST(Consumer, LinearDirectSubstitution) {
    sim::ConsumerSpec spec;
    spec.kind = sim::ConsumerKind::Linear;
    spec.baseline.fill(10.0);
    spec.price_coef[0] = -0.5;
    sim::DecisionInput in;
    in.period.fill(40);
    in.prices.fill(0.0);
    in.prices[0] = 4.0;
    EXPECT_DOUBLE_EQ(sim::consumer_decide(spec, in, sim::initial_state(spec))[0], 8.0);
    spec.p_min = 9.0;
    EXPECT_DOUBLE_EQ(sim::consumer_decide(spec, in, sim::initial_state(spec))[0], 9.0);
}

TEST(Consumer, ShiftableCheapestEarliest) {
    const std::vector<double> prices{30, 20, 25, 20};
    const auto e = sim::place_greedy(prices, 1.0, 10.0 * sim::kPeriodHours);
    // Exhaustive oracle over single-period placements.
    std::size_t best = 0;
    for (std::size_t i = 1; i < prices.size(); ++i)
        if (prices[i] < prices[best]) best = i;
    EXPECT_EQ(best, 1u);
    for (std::size_t i = 0; i < prices.size(); ++i) EXPECT_EQ(e[i], i == best ? 1.0 : 0.0);
}

TEST(Consumer, ShiftableGreedyIsCostOptimalProperty) {
    // With a common per-period cap, filling cheapest-first minimizes cost;
    // compare with exhaustive enumeration over quarter-cap units.
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 5;
        std::vector<double> prices(n);
        for (auto& p : prices) p = std::floor(std::uniform_real_distribution<double>(10, 20)(rng));
        const double cap = 1.0, energy = 0.25 * static_cast<double>(std::uniform_int_distribution<int>(1, 16)(rng));
        const auto g = sim::place_greedy(prices, energy, cap);
        double greedy_cost = 0.0;
        for (int i = 0; i < n; ++i) greedy_cost += g[static_cast<std::size_t>(i)] * prices[static_cast<std::size_t>(i)];
        double best = std::numeric_limits<double>::infinity();
        const int units = static_cast<int>(std::lround(energy / 0.25));
        std::vector<int> u(n, 0);
        std::function<void(int, int)> rec = [&](int i, int left) {
            if (i == n) {
                if (left == 0) {
                    double c = 0.0;
                    for (int k = 0; k < n; ++k) c += 0.25 * u[static_cast<std::size_t>(k)] * prices[static_cast<std::size_t>(k)];
                    best = std::min(best, c);
                }
                return;
            }
            for (int x = 0; x <= std::min(4, left); ++x) {
                u[static_cast<std::size_t>(i)] = x;
                rec(i + 1, left - x);
            }
        };
        rec(0, units);
        EXPECT_NEAR(greedy_cost, best, 1e-9);
    }
}

TEST(Consumer, InfeasibleJobRejected) {
    sim::ConsumerSpec spec;
    spec.kind = sim::ConsumerKind::Shiftable;
    spec.jobs.push_back({1.0, 50, 40, 10.0});
    EXPECT_THROW(sim::validate(spec), elastiq::ConfigError);
    spec.jobs[0] = {100.0, 40, 41, 10.0};
    EXPECT_THROW(sim::validate(spec), elastiq::ConfigError);
}

TEST(Consumer, ThermalSolutionSatisfiesKkt) {
    // Projected-gradient optimality checked with a finite-difference
    // gradient of the forward-simulated objective.
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 60; ++trial) {
        sim::ThermalParams tp;
        tp.discomfort_weight = 5 + 40 * u(rng);
        tp.overcool_weight = trial % 2 ? 0.0 : 100 * u(rng);
        tp.ramp_weight = trial % 3 ? 0.0 : 5 * u(rng);
        tp.hvac_max = 10 + 40 * u(rng);
        std::array<double, sim::kHorizon> lam{}, amb{};
        for (int k = 0; k < sim::kHorizon; ++k) {
            lam[static_cast<std::size_t>(k)] = 20 + 100 * u(rng);
            amb[static_cast<std::size_t>(k)] = 22 + 14 * u(rng);
        }
        const double theta0 = 21 + 6 * u(rng), prev = 20 * u(rng);
        const auto sol = sim::solve_thermal(tp, theta0, prev, lam, amb);
        ASSERT_LT(sol.sweeps, 500);
        for (int i = 0; i < sim::kHorizon; ++i) {
            auto p = sol.hvac;
            const auto ii = static_cast<std::size_t>(i);
            const double h = 1e-5;
            p[ii] += h;
            const double jp = thermal_objective(tp, theta0, prev, p, lam, amb);
            p[ii] -= 2 * h;
            const double jm = thermal_objective(tp, theta0, prev, p, lam, amb);
            const double grad = (jp - jm) / (2 * h);
            const double x = sol.hvac[ii];
            EXPECT_GE(x, 0.0);
            EXPECT_LE(x, tp.hvac_max);
            if (x > 1e-9 && x < tp.hvac_max - 1e-9) {
                EXPECT_NEAR(grad, 0.0, 1e-4) << "trial " << trial << " coord " << i;
            } else if (x <= 1e-9) {
                EXPECT_GE(grad, -1e-4);
            } else {
                EXPECT_LE(grad, 1e-4);
            }
        }
    }
}

// ---------------------------------------------------------------- simulator + oracle

TEST(Simulate, InsensitiveLoadsEqualBaselineAndOracleIsZero) {
    auto sc = sim::load_scenario(config_path("insensitive.json"));
    sc.days = 5;
    const auto s = sim::simulate(sc);
    const auto ds = sim::to_dataset(s);
    for (std::size_t i = 0; i < ds.size(); ++i)
        EXPECT_EQ(ds[i].load, sc.consumer.baseline[static_cast<std::size_t>(ds[i].timestamp.period_index() - 1)]);
    for (const auto& r : sim::oracle_all(s, 3.0))
        for (double e : r.e) EXPECT_EQ(e, 0.0);
}

TEST(Simulate, SameSeedBitIdentical) {
    auto sc = sim::load_scenario(config_path("thermal.json"));
    sc.days = 4;
    const auto a = sim::simulate(sc), b = sim::simulate(sc);
    EXPECT_EQ(a.load, b.load);
    EXPECT_EQ(a.prices.price, b.prices.price);
    const auto oa = sim::oracle_all(a, 3.0), ob = sim::oracle_all(b, 3.0);
    ASSERT_EQ(oa.size(), ob.size());
    for (std::size_t i = 0; i < oa.size(); ++i) EXPECT_EQ(oa[i].e, ob[i].e);
    sc.seed += 1;
    EXPECT_NE(sim::simulate(sc).load, a.load);
}

TEST(Simulate, ResimulationFromSnapshotReproducesLoads) {
    auto sc = sim::load_scenario(config_path("thermal.json"));
    sc.days = 3;
    const auto s = sim::simulate(sc);
    for (std::size_t tc = s.warmup + 30; tc < s.warmup + 200; tc += 13) {
        const auto loads = sim::resimulate(s, tc, s.prices.price[tc]);
        for (int k = 0; k < sim::kHorizon; ++k) EXPECT_EQ(loads[static_cast<std::size_t>(k)], s.load[tc + static_cast<std::size_t>(k)]);
    }
}

TEST(Simulate, LinearDecisionsDependOnlyOnPastPrices) {
    auto sc = sim::load_scenario(config_path("linear.json"));
    sc.days = 4;
    sc.consumer.price_coef = {-0.5, -0.1, 0.05, 0.0, -0.02, 0.0, 0.0, 0.0, 0.01};
    const auto s = sim::simulate(sc);
    for (std::size_t t = s.warmup; t < s.warmup + s.emitted; t += 7) {
        // Offline recomputation: forecasts from a history truncated at t.
        std::vector<double> truncated(s.prices.price.begin(), s.prices.price.begin() + static_cast<std::ptrdiff_t>(t + 1));
        truncated.resize(s.prices.price.size(), std::numeric_limits<double>::quiet_NaN());
        const auto f = sim::plain_forecast(s.forecaster, sim::PriceView{truncated}, t, 8);
        for (std::size_t k = 0; k < f.size(); ++k) EXPECT_EQ(f[k], s.forecasts[t][k]);
        double p = sc.consumer.baseline[t % 96] + sc.consumer.price_coef[0] * s.prices.price[t];
        for (std::size_t k = 0; k < f.size(); ++k) p += sc.consumer.price_coef[k + 1] * f[k];
        EXPECT_DOUBLE_EQ(s.load[t], std::clamp(p, sc.consumer.p_min, sc.consumer.p_max));
    }
}

TEST(Oracle, LinearAnalyticElasticity) {
    // c_0 = -0.5, lambda = 40, baseline 30 -> p = 10, e_0 = -0.5 * 40 / 10.
    const auto s = sim::simulate(flat_linear(40.0, 30.0, -0.5));
    for (const auto& r : sim::oracle_all(s, 3.0)) {
        EXPECT_NEAR(r.e[0], -2.0, 1e-12);
        for (int k = 1; k < sim::kHorizon; ++k) EXPECT_EQ(r.e[static_cast<std::size_t>(k)], 0.0);
    }
}

TEST(Oracle, LinearOwnElasticityNonPositiveWhenUnclipped) {
    const auto sc = sim::load_scenario(config_path("linear.json"));
    auto short_sc = sc;
    short_sc.days = 20;
    const auto s = sim::simulate(short_sc);
    for (const auto& r : sim::oracle_all(s, sc.dlambda)) {
        const double p = s.load[s.series_index(r.anchor)];
        if (p > sc.consumer.p_min + 1.5 && p < sc.consumer.p_max) {
            EXPECT_LE(r.e[0], 0.0);
        }
    }
}

TEST(Oracle, RichardsonConsistencyOnThermal) {
    // The thermal decision is piecewise smooth in the price, so for anchors
    // away from kinks the secant error falls at least 4x per halving, or
    // both differences are already at solver noise.
    auto sc = sim::load_scenario(config_path("thermal.json"));
    sc.days = 6;
    const auto s = sim::simulate(sc);
    int checked = 0, consistent = 0;
    for (std::size_t i = 0; i + 9 < s.emitted; i += 5) {
        const int p = s.period_of(s.series_index(i));
        if (p < 24 || p > 80) continue;
        const double lam = s.prices.price[s.series_index(i)];
        if (std::abs(lam - s.forecaster.threshold) < 4 * sc.dlambda) continue;
        const auto e1 = sim::oracle_elasticity(s, i, sc.dlambda).e;
        const auto e2 = sim::oracle_elasticity(s, i, sc.dlambda / 2).e;
        const auto e4 = sim::oracle_elasticity(s, i, sc.dlambda / 4).e;
        for (std::size_t k = 0; k < e1.size(); ++k) {
            const double d1 = std::abs(e1[k] - e2[k]), d2 = std::abs(e2[k] - e4[k]);
            ++checked;
            if ((d1 < 1e-6 && d2 < 1e-6) || d2 <= d1 / 4.0 * 1.5) ++consistent;
        }
    }
    ASSERT_GT(checked, 100);
    EXPECT_GE(static_cast<double>(consistent) / checked, 0.9) << consistent << " / " << checked;
}

TEST(Oracle, VanishingElasticityAfterSpikes) {
    const auto sc = sim::load_scenario(config_path("thermal.json"));
    ASSERT_GE(sc.forecaster.elevation_factor, 2.0);
    ASSERT_GE(sc.forecaster.half_life, 4.0);
    auto short_sc = sc;
    short_sc.days = 60;
    const auto s = sim::simulate(short_sc);
    std::vector<double> post, normal;
    for (const auto& r : sim::oracle_all(s, sc.dlambda)) {
        const std::size_t tc = s.series_index(r.anchor);
        bool recent = false, any = false;
        for (std::size_t a = 1; a <= 16; ++a) {
            const bool spike = s.prices.price[tc - a] > s.forecaster.threshold;
            recent = recent || (spike && a <= 8);
            any = any || spike;
        }
        if (s.prices.price[tc] > s.forecaster.threshold) any = true;
        for (double e : r.e) {
            if (recent) post.push_back(std::abs(e));
            else if (!any) normal.push_back(std::abs(e));
        }
    }
    ASSERT_FALSE(post.empty());
    EXPECT_LT(elastiq::median(post), 0.2 * elastiq::median(normal));
}

TEST(Oracle, NegativeCrossElasticityExists) {
    for (const char* name : {"thermal.json", "shiftable.json"}) {
        auto sc = sim::load_scenario(config_path(name));
        sc.days = std::min(sc.days, 60);
        const auto s = sim::simulate(sc);
        const auto rs = sim::oracle_all(s, sc.dlambda);
        const auto neg = std::count_if(rs.begin(), rs.end(), [](const sim::OracleResult& r) { return r.e[2] < 0.0; });
        EXPECT_GT(neg, 0) << name;
    }
}

TEST(Oracle, CsvRoundTrip) {
    auto sc = sim::load_scenario(config_path("thermal.json"));
    sc.days = 2;
    const auto s = sim::simulate(sc);
    const auto rs = sim::oracle_all(s, 3.0);
    const auto path = std::filesystem::temp_directory_path() / "elastiq_oracle_test.csv";
    sim::write_oracle_csv(rs, path);
    const auto back = sim::read_oracle_csv(path, sim::to_dataset(s));
    ASSERT_EQ(back.size(), rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i) {
        EXPECT_EQ(back[i].anchor, rs[i].anchor);
        EXPECT_EQ(back[i].e, rs[i].e);
    }
    std::filesystem::remove(path);
}

TEST(Scenario, ParseErrors) {
    EXPECT_THROW(sim::scenario_from_json(nlohmann::json::parse(R"({"days": 3})")), elastiq::ParseError);
    EXPECT_THROW(sim::scenario_from_json(nlohmann::json::parse(R"({"consumer": {"kind": "nuclear"}})")),
                 elastiq::ConfigError);
    EXPECT_THROW(sim::scenario_from_json(nlohmann::json::parse(
                     R"({"consumer": {"kind": "shiftable", "jobs": [{"release": 60, "deadline": 50}]}})")),
                 elastiq::ConfigError);
    EXPECT_THROW(sim::scenario_from_json(nlohmann::json::parse(R"({"days": "x", "consumer": {"kind": "linear"}})")),
                 elastiq::ParseError);
    EXPECT_THROW(sim::load_scenario("/nonexistent/scenario.json"), elastiq::IoError);
}

TEST(Scenario, DatasetUsesSchemaAndHolidays) {
    auto sc = sim::load_scenario(config_path("smoke.json"));
    sc.days = 3;
    sc.holidays.push_back(elastiq::data::LocalTime::from_date(2021, 6, 2));
    const auto ds = sim::to_dataset(sim::simulate(sc));
    ASSERT_EQ(ds.size(), 3u * 96);
    EXPECT_EQ(ds[0].timestamp, elastiq::data::LocalTime::from_date(2021, 6, 1));
    EXPECT_EQ(ds[95].holiday, 0);
    EXPECT_EQ(ds[96].holiday, 1);
    EXPECT_EQ(ds[191].holiday, 1);
    EXPECT_EQ(ds[192].holiday, 0);
    elastiq::data::validate_records(ds.records);
}
