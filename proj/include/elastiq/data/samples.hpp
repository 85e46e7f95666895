#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "elastiq/data/dataset.hpp"
#include "elastiq/error.hpp"
#include "elastiq/nn/lstm.hpp"

namespace elastiq::data {

inline constexpr int kNumFeatures = 9;
inline constexpr int kFirstAnchorPeriod = 24;
inline constexpr int kLastAnchorPeriod = 80;

// Column order of every window.
enum Feature : int {
    kPrice = 0,
    kLaggedLoad,
    kTemp,
    kHumidity,
    kDewpoint,
    kPeriodIndex,
    kWeekday,
    kMonth,
    kHoliday,
};

inline constexpr std::array<const char*, kNumFeatures> kFeatureNames{
    "price", "lagged_load", "temp_c", "rh_pct", "dewpoint_c", "period", "weekday", "month", "holiday"};

using FeatureRow = std::array<double, kNumFeatures>;

/// Raw features at period t. The load column reads load[t - load_lag];
/// callers guarantee t >= load_lag.
inline FeatureRow raw_features(const SeriesDataset& ds, std::size_t t, int load_lag) {
    const auto& r = ds[t];
    return {r.price,
            ds[t - static_cast<std::size_t>(load_lag)].load,
            r.temp_c,
            r.rh_pct,
            r.dewpoint_c,
            static_cast<double>(r.timestamp.period_index()),
            static_cast<double>(r.timestamp.weekday()),
            static_cast<double>(r.timestamp.month()),
            static_cast<double>(r.holiday)};
}

/// Per-feature min-max scaling. A feature whose span is below 1e-9 maps to
/// 0.5 and unscales back to its constant value.
struct Scaler {
    FeatureRow min{};
    FeatureRow max{};

    static constexpr double kMinSpan = 1e-9;

    bool degenerate(int k) const { return max[k] - min[k] < kMinSpan; }

    double scale(int k, double x) const { return degenerate(k) ? 0.5 : (x - min[k]) / (max[k] - min[k]); }
    double unscale(int k, double v) const { return degenerate(k) ? min[k] : min[k] + v * (max[k] - min[k]); }

    FeatureRow scale(const FeatureRow& x) const {
        FeatureRow out;
        for (int k = 0; k < kNumFeatures; ++k) out[k] = scale(k, x[k]);
        return out;
    }
    FeatureRow unscale(const FeatureRow& v) const {
        FeatureRow out;
        for (int k = 0; k < kNumFeatures; ++k) out[k] = unscale(k, v[k]);
        return out;
    }

    // Load targets share the lagged-load statistics.
    double scale_load(double mw) const { return scale(kLaggedLoad, mw); }
    double unscale_load(double v) const { return unscale(kLaggedLoad, v); }
    double load_span() const { return degenerate(kLaggedLoad) ? 0.0 : max[kLaggedLoad] - min[kLaggedLoad]; }
};

/// Fits min/max over every record of the training split. The lagged-load
/// feature uses the statistics of the load column itself.
inline Scaler fit_scaler(const SeriesDataset& train) {
    if (train.size() == 0) throw ConfigError("fit_scaler: empty training split");
    Scaler s;
    s.min.fill(std::numeric_limits<double>::infinity());
    s.max.fill(-std::numeric_limits<double>::infinity());
    for (std::size_t t = 0; t < train.size(); ++t) {
        const FeatureRow x = raw_features(train, t, 0);
        for (int k = 0; k < kNumFeatures; ++k) {
            s.min[k] = std::min(s.min[k], x[k]);
            s.max[k] = std::max(s.max[k], x[k]);
        }
    }
    return s;
}

inline nlohmann::json to_json(const Scaler& s) {
    nlohmann::json j;
    j["features"] = kFeatureNames;
    j["min"] = s.min;
    j["max"] = s.max;
    return j;
}

inline Scaler scaler_from_json(const nlohmann::json& j) {
    Scaler s;
    for (const char* key : {"min", "max"}) {
        if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("scaler: missing field \"") + key + "\"");
        const auto& a = j.at(key);
        if (!a.is_array() || a.size() != kNumFeatures)
            throw ConfigError(std::string("scaler: field \"") + key + "\" must hold 9 numbers");
        for (int k = 0; k < kNumFeatures; ++k) {
            if (!a[static_cast<std::size_t>(k)].is_number())
                throw ParseError(std::string("scaler: field \"") + key + "\" entry " + std::to_string(k) + " is not a number");
            (std::string(key) == "min" ? s.min : s.max)[k] = a[static_cast<std::size_t>(k)].get<double>();
        }
    }
    for (int k = 0; k < kNumFeatures; ++k)
        if (!(s.max[k] >= s.min[k])) throw ConfigError(std::string("scaler: max < min for ") + kFeatureNames[k]);
    return s;
}

struct Sample {
    std::size_t anchor = 0;      // global period index T_c
    LocalTime anchor_time;
    nn::Matrix window;           // t_in x 9, normalized
    std::vector<double> target_loads; // MW, periods T_c .. T_c + t_out - 1
    double anchor_price = 0.0;   // USD/MWh, raw
};

struct SampleOptions {
    int t_in = 25;
    int t_out = 9;
    // Anchors are taken from [first_anchor, last_anchor). Windows may read
    // records before first_anchor.
    std::size_t first_anchor = 0;
    std::size_t last_anchor = std::numeric_limits<std::size_t>::max();
};

/// True when anchor T_c supports a full window with lagged loads and a full
/// tail inside the dataset, and its within-day period lies in 24..80.
inline bool admissible_anchor(const SeriesDataset& ds, std::size_t tc, int t_in, int t_out) {
    if (tc >= ds.size()) return false;
    const int period = ds[tc].timestamp.period_index();
    if (period < kFirstAnchorPeriod || period > kLastAnchorPeriod) return false;
    // window start s = T_c + t_out - t_in; lag needs s - t_out >= 0
    if (tc < static_cast<std::size_t>(t_in)) return false;
    return tc + static_cast<std::size_t>(t_out) <= ds.size();
}

/// Window for anchor T_c: rows are periods T_c + t_out - t_in .. T_c + t_out - 1.
inline nn::Matrix build_window(const SeriesDataset& ds, const Scaler& scaler, std::size_t tc, int t_in, int t_out) {
    nn::Matrix w(t_in, kNumFeatures);
    const std::size_t start = tc + static_cast<std::size_t>(t_out) - static_cast<std::size_t>(t_in);
    for (int r = 0; r < t_in; ++r) {
        const FeatureRow x = scaler.scale(raw_features(ds, start + static_cast<std::size_t>(r), t_out));
        for (int k = 0; k < kNumFeatures; ++k) w(r, k) = x[k];
    }
    return w;
}

/// One sample per admissible anchor in the requested range. Returns an empty
/// vector when the dataset cannot supply a single window.
inline std::vector<Sample> build_samples(const SeriesDataset& ds, const Scaler& scaler, const SampleOptions& opt) {
    if (opt.t_out < 1 || opt.t_in < opt.t_out)
        throw ConfigError("build_samples: need 1 <= t_out <= t_in (got t_in=" + std::to_string(opt.t_in) +
                          ", t_out=" + std::to_string(opt.t_out) + ")");
    std::vector<Sample> out;
    const std::size_t hi = std::min(opt.last_anchor, ds.size());
    for (std::size_t tc = opt.first_anchor; tc < hi; ++tc) {
        if (!admissible_anchor(ds, tc, opt.t_in, opt.t_out)) continue;
        Sample s;
        s.anchor = tc;
        s.anchor_time = ds[tc].timestamp;
        s.window = build_window(ds, scaler, tc, opt.t_in, opt.t_out);
        s.target_loads.reserve(static_cast<std::size_t>(opt.t_out));
        for (int k = 0; k < opt.t_out; ++k) s.target_loads.push_back(ds[tc + static_cast<std::size_t>(k)].load);
        s.anchor_price = ds[tc].price;
        out.push_back(std::move(s));
    }
    return out;
}

inline std::vector<Sample> build_samples(const SeriesDataset& ds, const Scaler& scaler, int t_in, int t_out) {
    return build_samples(ds, scaler, SampleOptions{t_in, t_out});
}

/// Chronological split at a midnight. `boundary` is the global index of the
/// first test record; train = [0, boundary), test = [boundary, end).
struct DatasetSplit {
    SeriesDataset train;
    SeriesDataset test;
    std::size_t boundary = 0;
};

inline DatasetSplit split_at_day(const SeriesDataset& ds, std::size_t train_days) {
    if (train_days < 1 || train_days >= ds.days())
        throw ConfigError("split boundary outside the dataset: day " + std::to_string(train_days) + " of " +
                          std::to_string(ds.days()));
    DatasetSplit s;
    s.boundary = train_days * kPeriodsPerDay;
    const auto mid = ds.records.begin() + static_cast<std::ptrdiff_t>(s.boundary);
    s.train.records.assign(ds.records.begin(), mid);
    s.test.records.assign(mid, ds.records.end());
    return s;
}

/// Test set = the last round(fraction * days) days.
inline DatasetSplit split_dataset(const SeriesDataset& ds, double test_fraction) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw ConfigError("test_fraction must lie in (0, 1), got " + std::to_string(test_fraction));
    const auto test_days = static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(ds.days())));
    if (test_days == 0) throw ConfigError("test_fraction " + std::to_string(test_fraction) + " leaves an empty test set");
    if (test_days >= ds.days()) throw ConfigError("test_fraction leaves an empty training set");
    return split_at_day(ds, ds.days() - test_days);
}

/// Split at the first record of `date` (midnight).
inline DatasetSplit split_dataset(const SeriesDataset& ds, LocalTime date) {
    if (ds.size() == 0) throw ConfigError("split of an empty dataset");
    if (date.minute_of_day() != 0) throw ConfigError("split date must be a midnight: " + date.str());
    const auto first = ds[0].timestamp;
    if (date <= first || date > ds.records.back().timestamp)
        throw ConfigError("split boundary " + date.str() + " outside the dataset");
    return split_at_day(ds, static_cast<std::size_t>((date.minutes - first.minutes) / (kPeriodsPerDay * kMinutesPerPeriod)));
}

/// Train samples use anchors before the boundary; test samples use anchors at
/// or after it and may read train-period features in their windows.
struct SampleSplit {
    std::vector<Sample> train;
    std::vector<Sample> test;
};

inline SampleSplit split_samples(const SeriesDataset& full, const DatasetSplit& split, const Scaler& scaler, int t_in,
                                 int t_out) {
    SampleSplit out;
    out.train = build_samples(full, scaler, SampleOptions{t_in, t_out, 0, split.boundary});
    // Tails never cross midnight, so a train anchor never reads test loads.
    out.test = build_samples(full, scaler, SampleOptions{t_in, t_out, split.boundary, full.size()});
    return out;
}

} // namespace elastiq::data
