#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "elastiq/data/dataset.hpp"
#include "elastiq/error.hpp"
#include "elastiq/seed.hpp"
#include "elastiq/sim/consumer.hpp"
#include "elastiq/sim/forecaster.hpp"
#include "elastiq/sim/processes.hpp"

namespace elastiq::sim {

struct Scenario {
    std::string name = "scenario";
    data::LocalTime start = data::LocalTime::from_date(2021, 6, 1);
    int days = 30;
    int warmup_days = 14; // simulated before `start`; the forecaster is fit on them
    std::uint64_t seed = 1;
    PriceProcessSpec price;
    WeatherSpec weather;
    ForecasterSpec forecaster;
    ConsumerSpec consumer;
    double dlambda = 3.0; // USD/MWh
    std::vector<data::LocalTime> holidays;
};

inline void validate(const Scenario& s) {
    if (s.days < 1) throw ConfigError("scenario.days must be >= 1");
    if (s.warmup_days < 1) throw ConfigError("scenario.warmup_days must be >= 1");
    if (!(s.dlambda > 0.0)) throw ConfigError("scenario.dlambda must be > 0");
    if (s.start.minute_of_day() != 0) throw ConfigError("scenario.start must be a date");
    validate(s.price);
    validate(s.forecaster);
    validate(s.consumer);
}

/// Per-period state captured before the decision at that period.
struct Snapshot {
    ConsumerState consumer;
    ForecasterState forecaster;
};

/// Everything needed to re-run any stretch of the simulation.
///
/// Series index t covers warm-up, the emitted days, and one padding day so
/// that every decision has a full weather horizon.
struct Simulation {
    Scenario scenario;
    PriceSeries prices;
    WeatherSeries weather;
    ForecasterModel forecaster;
    std::size_t warmup = 0;  // periods before the emitted range
    std::size_t emitted = 0; // periods in the emitted range
    std::size_t first_decision = 0;
    std::vector<double> load;                 // realized, size warmup + emitted
    std::vector<Snapshot> snapshots;          // size warmup + emitted
    std::vector<std::array<double, kRollingWindow>> forecasts; // logged at each period

    int period_of(std::size_t t) const { return static_cast<int>(t % data::kPeriodsPerDay) + 1; }
    std::size_t series_index(std::size_t dataset_index) const { return warmup + dataset_index; }
};

/// One rolling-decision period: observe the realized price, forecast the
/// next T_rw prices, re-plan, commit the first decision.
inline double simulate_step(const Simulation& sim, std::size_t t, const PriceView& view, ConsumerState& cs,
                            ForecasterState& fs, std::array<double, kRollingWindow>* forecast_log = nullptr) {
    const auto& spec = sim.scenario.consumer;
    if (sim.period_of(t) == 1) consumer_new_day(spec, cs);
    observe(sim.forecaster, fs, view, t);
    const auto f = rolling_forecast(sim.forecaster, fs, view, t, kRollingWindow);
    DecisionInput in;
    in.prices[0] = view[t];
    for (int k = 1; k < kHorizon; ++k) {
        in.prices[static_cast<std::size_t>(k)] = f[static_cast<std::size_t>(k - 1)];
    }
    for (int k = 0; k < kHorizon; ++k) {
        in.ambient[static_cast<std::size_t>(k)] = sim.weather.temp_c[t + static_cast<std::size_t>(k)];
        in.period[static_cast<std::size_t>(k)] = sim.period_of(t + static_cast<std::size_t>(k));
    }
    if (forecast_log) std::copy(f.begin(), f.end(), forecast_log->begin());
    const auto plan = consumer_decide(spec, in, cs);
    consumer_commit(spec, in, plan, cs);
    return plan[0];
}

inline Simulation simulate(const Scenario& sc) {
    validate(sc);
    Simulation sim;
    sim.scenario = sc;
    sim.warmup = static_cast<std::size_t>(sc.warmup_days) * data::kPeriodsPerDay;
    sim.emitted = static_cast<std::size_t>(sc.days) * data::kPeriodsPerDay;
    const std::size_t total = sim.warmup + sim.emitted;
    const std::size_t padded = total + data::kPeriodsPerDay;
    sim.prices = synth_prices(sc.price, padded, derive_seed(sc.seed, 1));
    sim.weather = synth_weather(sc.weather, padded, derive_seed(sc.seed, 2));
    sim.forecaster = fit_forecaster(sc.forecaster, std::span<const double>(sim.prices.price).first(sim.warmup));

    sim.first_decision = static_cast<std::size_t>(sc.forecaster.ar_order - 1);
    sim.load.resize(total);
    sim.snapshots.resize(total);
    sim.forecasts.resize(total);
    ConsumerState cs = initial_state(sc.consumer);
    consumer_new_day(sc.consumer, cs);
    ForecasterState fs;
    const PriceView view{sim.prices.price};
    for (std::size_t t = 0; t < total; ++t) {
        sim.snapshots[t] = {cs, fs};
        if (t < sim.first_decision) {
            // Not enough history to forecast yet: the consumer runs its baseline.
            sim.load[t] = sc.consumer.baseline[static_cast<std::size_t>(sim.period_of(t) - 1)];
            sim.forecasts[t].fill(sim.prices.price[t]);
            continue;
        }
        sim.load[t] = simulate_step(sim, t, view, cs, fs, &sim.forecasts[t]);
    }
    return sim;
}

/// Emitted range as a dataset in the CSV schema.
inline data::SeriesDataset to_dataset(const Simulation& sim) {
    std::vector<data::PeriodRecord> recs(sim.emitted);
    for (std::size_t i = 0; i < sim.emitted; ++i) {
        const std::size_t t = sim.warmup + i;
        auto& r = recs[i];
        r.timestamp = sim.scenario.start.plus_periods(static_cast<std::int64_t>(i));
        r.price = sim.prices.price[t];
        r.load = sim.load[t];
        r.temp_c = sim.weather.temp_c[t];
        r.rh_pct = sim.weather.rh_pct[t];
        r.dewpoint_c = sim.weather.dewpoint_c[t];
        const auto day = data::LocalTime{r.timestamp.minutes - r.timestamp.minute_of_day()};
        r.holiday = std::find(sim.scenario.holidays.begin(), sim.scenario.holidays.end(), day) != sim.scenario.holidays.end();
    }
    return data::make_dataset(std::move(recs));
}

/// Loads of periods T_c .. T_c + 8 after re-running from the snapshot at
/// T_c with the realized price there replaced by `price`.
inline std::array<double, kHorizon> resimulate(const Simulation& sim, std::size_t tc, double price) {
    if (tc < sim.first_decision || tc + kHorizon > sim.load.size())
        throw ConfigError("oracle: no snapshot window at series index " + std::to_string(tc));
    ConsumerState cs = sim.snapshots[tc].consumer;
    ForecasterState fs = sim.snapshots[tc].forecaster;
    const PriceView view{sim.prices.price, tc, price};
    std::array<double, kHorizon> out{};
    for (int k = 0; k < kHorizon; ++k) out[static_cast<std::size_t>(k)] = simulate_step(sim, tc + static_cast<std::size_t>(k), view, cs, fs);
    return out;
}

struct OracleResult {
    std::size_t anchor = 0; // dataset index T_c
    data::LocalTime anchor_time;
    std::array<double, kHorizon> e{};
    double dlambda = 0.0;
};

/// e_tau = (p+ - p-) / (2 dlambda) * lambda / p_{T_c+tau} from two
/// re-simulations with the anchor price moved by +-dlambda.
inline OracleResult oracle_elasticity(const Simulation& sim, std::size_t anchor, double dlambda) {
    if (!(dlambda > 0.0)) throw ConfigError("oracle: dlambda must be > 0");
    const std::size_t tc = sim.series_index(anchor);
    const double lam = sim.prices.price[tc];
    const auto up = resimulate(sim, tc, lam + dlambda);
    const auto dn = resimulate(sim, tc, lam - dlambda);
    OracleResult r;
    r.anchor = anchor;
    r.anchor_time = sim.scenario.start.plus_periods(static_cast<std::int64_t>(anchor));
    r.dlambda = dlambda;
    for (int k = 0; k < kHorizon; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        r.e[kk] = (up[kk] - dn[kk]) / (2.0 * dlambda) * lam / sim.load[tc + kk];
    }
    return r;
}

/// Oracle at every dataset index whose within-day period is 24..80.
inline std::vector<OracleResult> oracle_all(const Simulation& sim, double dlambda) {
    std::vector<OracleResult> out;
    for (std::size_t i = 0; i + kHorizon <= sim.emitted; ++i) {
        const int p = sim.period_of(sim.series_index(i));
        if (p < 24 || p > 80) continue;
        out.push_back(oracle_elasticity(sim, i, dlambda));
    }
    return out;
}

inline constexpr std::string_view kOracleHeader = "anchor_timestamp,e0,e1,e2,e3,e4,e5,e6,e7,e8,dlambda";

inline void write_oracle_csv(const std::vector<OracleResult>& rs, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << kOracleHeader << '\n';
    for (const auto& r : rs) {
        out << r.anchor_time.str();
        for (double v : r.e) out << ',' << data::detail::format_number(v);
        out << ',' << data::detail::format_number(r.dlambda) << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

/// Reads an oracle CSV; `anchor` is resolved against `ds` timestamps.
inline std::vector<OracleResult> read_oracle_csv(const std::filesystem::path& path, const data::SeriesDataset& ds) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open oracle file " + path.string());
    std::string line;
    if (!std::getline(in, line) || data::detail::trim(line) != kOracleHeader)
        throw ParseError(path.string() + ": header must be exactly: " + std::string(kOracleHeader));
    std::vector<OracleResult> out;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (data::detail::trim(line).empty()) continue;
        ++row;
        const auto cells = data::detail::split(line);
        if (cells.size() != 11) throw ParseError(path.string() + ": row " + std::to_string(row) + ": expected 11 cells");
        OracleResult r;
        r.anchor_time = data::LocalTime::parse(cells[0]);
        for (int k = 0; k < kHorizon; ++k)
            r.e[static_cast<std::size_t>(k)] = data::detail::parse_number(cells[static_cast<std::size_t>(k + 1)], row, "e");
        r.dlambda = data::detail::parse_number(cells[10], row, "dlambda");
        if (ds.size() == 0 || r.anchor_time < ds[0].timestamp)
            throw DataError(path.string() + ": row " + std::to_string(row) + ": anchor outside the dataset");
        r.anchor = static_cast<std::size_t>((r.anchor_time.minutes - ds[0].timestamp.minutes) / data::kMinutesPerPeriod);
        if (r.anchor >= ds.size()) throw DataError(path.string() + ": row " + std::to_string(row) + ": anchor outside the dataset");
        out.push_back(r);
    }
    return out;
}

} // namespace elastiq::sim
