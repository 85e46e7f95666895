#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "elastiq/data/dataset.hpp"
#include "elastiq/error.hpp"
#include "elastiq/eval/metrics.hpp"

namespace elastiq::eval {

inline constexpr std::string_view kMetricsHeader = "method,rmse,mae,own_rmse,cross_rmse,spike_rmse,normal_rmse";
inline constexpr std::string_view kSeriesHeader = "anchor_timestamp,method,tau,estimate,truth";
inline constexpr std::string_view kEstimatesHeader = "anchor_timestamp,method,e0,e1,e2,e3,e4,e5,e6,e7,e8";

struct MethodEstimates {
    std::string method;
    std::vector<ElasticityVector> estimates;
};

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

inline std::string cell(const Bucket& b) { return b.rmse ? data::detail::format_number(*b.rmse) : std::string(); }

} // namespace detail

inline nlohmann::json reports_to_json(std::span<const MetricReport> reports) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : reports) j.push_back(to_json(r));
    return j;
}

inline std::vector<MetricReport> reports_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw ParseError("metrics: expected an array of reports");
    std::vector<MetricReport> out;
    for (const auto& x : j) out.push_back(report_from_json(x));
    return out;
}

inline void write_metrics_json(std::span<const MetricReport> reports, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    out << reports_to_json(reports).dump(2) << '\n';
    detail::finish(out, path);
}

/// Empty buckets leave their cell blank.
inline void write_metrics_csv(std::span<const MetricReport> reports, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    out << kMetricsHeader << '\n';
    for (const auto& r : reports)
        out << r.method << ',' << data::detail::format_number(r.rmse) << ',' << data::detail::format_number(r.mae) << ','
            << detail::cell(r.own) << ',' << detail::cell(r.cross) << ',' << detail::cell(r.spike) << ','
            << detail::cell(r.normal) << '\n';
    detail::finish(out, path);
}

/// One row per (anchor, method, tau).
inline void write_series_csv(std::span<const MethodEstimates> runs, std::span<const ElasticityVector> truth,
                             const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    out << kSeriesHeader << '\n';
    for (const auto& m : runs) {
        check_aligned(m.estimates, truth);
        for (std::size_t i = 0; i < truth.size(); ++i)
            for (int k = 0; k < kElasticityLength; ++k) {
                const auto kk = static_cast<std::size_t>(k);
                out << truth[i].anchor_time.str() << ',' << m.method << ',' << k << ','
                    << data::detail::format_number(m.estimates[i].e[kk]) << ','
                    << data::detail::format_number(truth[i].e[kk]) << '\n';
            }
    }
    detail::finish(out, path);
}

/// metrics.json, metrics.csv and elasticity_series.csv under `dir`.
inline void emit_report(std::span<const MetricReport> reports, std::span<const MethodEstimates> runs,
                        std::span<const ElasticityVector> truth, const std::filesystem::path& dir) {
    if (reports.empty()) throw ConfigError("no methods evaluated");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    write_metrics_json(reports, dir / "metrics.json");
    write_metrics_csv(reports, dir / "metrics.csv");
    write_series_csv(runs, truth, dir / "elasticity_series.csv");
}

// ---------------------------------------------------------------- estimates file

inline void write_estimates_csv(std::span<const MethodEstimates> runs, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    out << kEstimatesHeader << '\n';
    for (const auto& m : runs)
        for (const auto& v : m.estimates) {
            out << v.anchor_time.str() << ',' << m.method;
            for (double x : v.e) out << ',' << data::detail::format_number(x);
            out << '\n';
        }
    detail::finish(out, path);
}

/// Groups rows by method in order of first appearance. Anchor indices are
/// resolved against `ds`.
inline std::vector<MethodEstimates> read_estimates_csv(const std::filesystem::path& path, const data::SeriesDataset& ds) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open estimates file " + path.string());
    std::string line;
    if (!std::getline(in, line) || data::detail::trim(line) != kEstimatesHeader)
        throw ParseError(path.string() + ": header must be exactly: " + std::string(kEstimatesHeader));
    std::vector<MethodEstimates> out;
    std::map<std::string, std::size_t> slot;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (data::detail::trim(line).empty()) continue;
        ++row;
        const auto cells = data::detail::split(line);
        if (cells.size() != 2 + kElasticityLength)
            throw ParseError(path.string() + ": row " + std::to_string(row) + ": expected 11 cells");
        ElasticityVector v;
        v.anchor_time = data::LocalTime::parse(cells[0]);
        for (int k = 0; k < kElasticityLength; ++k)
            v.e[static_cast<std::size_t>(k)] =
                data::detail::parse_number(cells[static_cast<std::size_t>(k + 2)], row, "e");
        if (ds.size() == 0 || v.anchor_time < ds[0].timestamp)
            throw DataError(path.string() + ": row " + std::to_string(row) + ": anchor outside the dataset");
        v.anchor = static_cast<std::size_t>((v.anchor_time.minutes - ds[0].timestamp.minutes) / data::kMinutesPerPeriod);
        if (v.anchor >= ds.size())
            throw DataError(path.string() + ": row " + std::to_string(row) + ": anchor outside the dataset");
        const std::string method(data::detail::trim(cells[1]));
        auto [it, fresh] = slot.try_emplace(method, out.size());
        if (fresh) out.push_back({method, {}});
        out[it->second].estimates.push_back(v);
    }
    return out;
}

} // namespace elastiq::eval
