#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "elastiq/error.hpp"
#include "elastiq/estimator/elasticity.hpp"
#include "elastiq/stats.hpp"

namespace elastiq::eval {

struct ErrorSummary {
    double rmse = 0.0;
    double mae = 0.0;
    std::size_t n = 0; // vector entries
};

inline void check_aligned(std::span<const ElasticityVector> est, std::span<const ElasticityVector> truth) {
    if (est.size() != truth.size())
        throw DataError("metrics: " + std::to_string(est.size()) + " estimates against " + std::to_string(truth.size()) +
                        " truth vectors");
    for (std::size_t i = 0; i < est.size(); ++i)
        if (est[i].anchor_time != truth[i].anchor_time)
            throw DataError("metrics: anchor mismatch at row " + std::to_string(i) + ": " + est[i].anchor_time.str() +
                            " vs " + truth[i].anchor_time.str());
}

/// Every entry of every vector counts once.
inline ErrorSummary compute_metrics(std::span<const ElasticityVector> est, std::span<const ElasticityVector> truth) {
    check_aligned(est, truth);
    ErrorSummary s;
    double sq = 0.0, ab = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i)
        for (int k = 0; k < kElasticityLength; ++k) {
            const double d = est[i].e[static_cast<std::size_t>(k)] - truth[i].e[static_cast<std::size_t>(k)];
            sq += d * d;
            ab += std::abs(d);
        }
    s.n = est.size() * kElasticityLength;
    if (s.n > 0) {
        s.rmse = std::sqrt(sq / static_cast<double>(s.n));
        s.mae = ab / static_cast<double>(s.n);
    }
    return s;
}

/// RMSE over one bucket; absent when the bucket holds no entries.
struct Bucket {
    std::optional<double> rmse;
    std::size_t n = 0;

    friend bool operator==(const Bucket&, const Bucket&) = default;
};

struct MetricReport {
    std::string method;
    double rmse = 0.0;
    double mae = 0.0;
    std::size_t n = 0;
    Bucket own, cross, spike, normal;
    std::size_t anchors = 0;
    std::size_t spike_anchors = 0;
    double spike_threshold = 0.0;
    nlohmann::json config = nlohmann::json::object();
    std::uint64_t seed = 0;

    friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

/// Top 5% of the training prices.
inline double spike_threshold(std::span<const double> train_prices) { return percentile(train_prices, 0.95); }

namespace detail {

struct Accum {
    double sq = 0.0;
    std::size_t n = 0;
    void add(double d) {
        sq += d * d;
        ++n;
    }
    Bucket bucket() const {
        Bucket b;
        b.n = n;
        if (n > 0) b.rmse = std::sqrt(sq / static_cast<double>(n));
        return b;
    }
};

} // namespace detail

/// `prices[i]` is the anchor price of row i; anchors with a price at or above
/// the threshold form the spike bucket.
inline MetricReport breakdown(std::string method, std::span<const ElasticityVector> est,
                              std::span<const ElasticityVector> truth, std::span<const double> prices,
                              double threshold) {
    const auto overall = compute_metrics(est, truth);
    if (prices.size() != est.size())
        throw DataError("breakdown: " + std::to_string(prices.size()) + " prices for " + std::to_string(est.size()) +
                        " anchors");
    MetricReport r;
    r.method = std::move(method);
    r.rmse = overall.rmse;
    r.mae = overall.mae;
    r.n = overall.n;
    r.anchors = est.size();
    r.spike_threshold = threshold;
    detail::Accum own, cross, spike, normal;
    for (std::size_t i = 0; i < est.size(); ++i) {
        const bool is_spike = prices[i] >= threshold;
        if (is_spike) ++r.spike_anchors;
        for (int k = 0; k < kElasticityLength; ++k) {
            const double d = est[i].e[static_cast<std::size_t>(k)] - truth[i].e[static_cast<std::size_t>(k)];
            (k == 0 ? own : cross).add(d);
            (is_spike ? spike : normal).add(d);
        }
    }
    r.own = own.bucket();
    r.cross = cross.bucket();
    r.spike = spike.bucket();
    r.normal = normal.bucket();
    return r;
}

/// |RMSE^2 N - sum_b RMSE_b^2 N_b| for the two buckets of a partition.
inline double partition_residual(const MetricReport& r, const Bucket& a, const Bucket& b) {
    auto mass = [](const Bucket& x) { return x.rmse ? *x.rmse * *x.rmse * static_cast<double>(x.n) : 0.0; };
    return std::abs(r.rmse * r.rmse * static_cast<double>(r.n) - mass(a) - mass(b));
}

// ---------------------------------------------------------------- json

inline nlohmann::json to_json(const Bucket& b) {
    return {{"rmse", b.rmse ? nlohmann::json(*b.rmse) : nlohmann::json(nullptr)}, {"n", b.n}};
}

inline Bucket bucket_from_json(const nlohmann::json& j) {
    Bucket b;
    b.n = j.at("n").get<std::size_t>();
    if (!j.at("rmse").is_null()) b.rmse = j.at("rmse").get<double>();
    return b;
}

inline nlohmann::json to_json(const MetricReport& r) {
    return {{"method", r.method},
            {"rmse", r.rmse},
            {"mae", r.mae},
            {"entries", r.n},
            {"anchors", r.anchors},
            {"spike_anchors", r.spike_anchors},
            {"spike_threshold", r.spike_threshold},
            {"own", to_json(r.own)},
            {"cross", to_json(r.cross)},
            {"spike", to_json(r.spike)},
            {"normal", to_json(r.normal)},
            {"config", r.config},
            {"seed", r.seed}};
}

inline MetricReport report_from_json(const nlohmann::json& j) {
    try {
        MetricReport r;
        r.method = j.at("method").get<std::string>();
        r.rmse = j.at("rmse").get<double>();
        r.mae = j.at("mae").get<double>();
        r.n = j.at("entries").get<std::size_t>();
        r.anchors = j.at("anchors").get<std::size_t>();
        r.spike_anchors = j.at("spike_anchors").get<std::size_t>();
        r.spike_threshold = j.at("spike_threshold").get<double>();
        r.own = bucket_from_json(j.at("own"));
        r.cross = bucket_from_json(j.at("cross"));
        r.spike = bucket_from_json(j.at("spike"));
        r.normal = bucket_from_json(j.at("normal"));
        r.config = j.at("config");
        r.seed = j.at("seed").get<std::uint64_t>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("metric report: ") + e.what());
    }
}

} // namespace elastiq::eval
