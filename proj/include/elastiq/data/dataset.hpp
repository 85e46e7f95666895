#pragma once

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "elastiq/error.hpp"

namespace elastiq::data {

inline constexpr int kPeriodsPerDay = 96;
inline constexpr int kMinutesPerPeriod = 15;

/// Naive local wall-clock time at minute resolution (no zone, no DST).
struct LocalTime {
    std::int64_t minutes = 0; // since 1970-01-01T00:00

    auto operator<=>(const LocalTime&) const = default;

    std::chrono::sys_days day() const {
        return std::chrono::sys_days{std::chrono::days{floor_div(minutes, 1440)}};
    }
    int minute_of_day() const { return static_cast<int>(minutes - floor_div(minutes, 1440) * 1440); }
    /// 1..96
    int period_index() const { return minute_of_day() / kMinutesPerPeriod + 1; }
    /// ISO weekday, Monday = 1 .. Sunday = 7
    int weekday() const { return static_cast<int>(std::chrono::weekday{day()}.iso_encoding()); }
    /// 1..12
    int month() const { return static_cast<int>(unsigned(std::chrono::year_month_day{day()}.month())); }

    LocalTime plus_periods(std::int64_t n) const { return {minutes + n * kMinutesPerPeriod}; }

    static LocalTime from_date(int y, unsigned m, unsigned d, int minute_of_day = 0) {
        const std::chrono::sys_days sd{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}};
        return {static_cast<std::int64_t>(sd.time_since_epoch().count()) * 1440 + minute_of_day};
    }

    /// Accepts YYYY-MM-DD, YYYY-MM-DDTHH:MM and YYYY-MM-DDTHH:MM:SS (a space
    /// may replace the T). Seconds must be zero.
    static LocalTime parse(std::string_view s) {
        auto num = [&](std::size_t pos, std::size_t len) {
            int v = 0;
            if (pos + len > s.size()) throw ParseError("bad timestamp \"" + std::string(s) + "\"");
            const auto r = std::from_chars(s.data() + pos, s.data() + pos + len, v);
            if (r.ec != std::errc{} || r.ptr != s.data() + pos + len)
                throw ParseError("bad timestamp \"" + std::string(s) + "\"");
            return v;
        };
        if (s.size() < 10 || s[4] != '-' || s[7] != '-') throw ParseError("bad timestamp \"" + std::string(s) + "\"");
        const int y = num(0, 4), mo = num(5, 2), d = num(8, 2);
        int hh = 0, mm = 0;
        if (s.size() > 10) {
            if ((s[10] != 'T' && s[10] != ' ') || s.size() < 16 || s[13] != ':')
                throw ParseError("bad timestamp \"" + std::string(s) + "\"");
            hh = num(11, 2);
            mm = num(14, 2);
            if (s.size() > 16) {
                if (s.size() != 19 || s[16] != ':' || num(17, 2) != 0)
                    throw ParseError("bad timestamp \"" + std::string(s) + "\"");
            }
        }
        const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                              std::chrono::day{static_cast<unsigned>(d)}};
        if (!ymd.ok() || hh > 23 || mm > 59) throw ParseError("bad timestamp \"" + std::string(s) + "\"");
        return from_date(y, static_cast<unsigned>(mo), static_cast<unsigned>(d), hh * 60 + mm);
    }

    std::string str() const {
        const std::chrono::year_month_day ymd{day()};
        const int mod = minute_of_day();
        char buf[32];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:00", int(ymd.year()), unsigned(ymd.month()),
                      unsigned(ymd.day()), mod / 60, mod % 60);
        return buf;
    }

  private:
    static std::int64_t floor_div(std::int64_t a, std::int64_t b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0))); }
};

struct PeriodRecord {
    LocalTime timestamp;
    double price = 0.0;      // USD/MWh
    double load = 0.0;       // MW, > 0
    double temp_c = 0.0;     // °C
    double rh_pct = 0.0;     // %
    double dewpoint_c = 0.0; // °C
    int holiday = 0;         // 0 or 1
};

/// Contiguous 15-minute records covering whole days.
struct SeriesDataset {
    std::vector<PeriodRecord> records;
    std::size_t trimmed_rows = 0; // rows dropped to align to whole days

    std::size_t size() const { return records.size(); }
    std::size_t days() const { return records.size() / kPeriodsPerDay; }
    const PeriodRecord& operator[](std::size_t i) const { return records[i]; }
};

inline constexpr std::string_view kDatasetHeader = "timestamp,price_usd_mwh,load_mw,temp_c,rh_pct,dewpoint_c,holiday";

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline double parse_number(std::string_view cell, std::size_t row, std::string_view column) {
    double v = 0.0;
    const auto r = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || r.ec != std::errc{} || r.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw ParseError("row " + std::to_string(row) + ", column " + std::string(column) + ": \"" +
                         std::string(cell) + "\" is not a number");
    }
    return v;
}

inline std::string format_number(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

} // namespace detail

/// Checks the record invariants: 15-minute alignment and spacing, positive
/// load, humidity in [0, 100], binary holiday flag. Row numbers in messages
/// are 1-based data rows.
inline void validate_records(const std::vector<PeriodRecord>& recs) {
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto& r = recs[i];
        const std::string row = "row " + std::to_string(i + 1);
        if (r.timestamp.minute_of_day() % kMinutesPerPeriod != 0)
            throw DataError(row + ": timestamp " + r.timestamp.str() + " is not aligned to 15 minutes");
        if (i > 0) {
            const auto prev = recs[i - 1].timestamp;
            if (r.timestamp <= prev)
                throw DataError(row + ": timestamp " + r.timestamp.str() + " does not increase (duplicate or out of order)");
            if (r.timestamp.minutes - prev.minutes != kMinutesPerPeriod)
                throw DataError(row + ": gap after " + prev.str() + " (expected consecutive 15-minute periods)");
        }
        if (!(r.load > 0.0)) throw DataError(row + ": load must be positive (elasticity denominator)");
        if (!(r.rh_pct >= 0.0 && r.rh_pct <= 100.0)) throw DataError(row + ": rh_pct outside [0, 100]");
        if (r.holiday != 0 && r.holiday != 1) throw DataError(row + ": holiday must be 0 or 1");
        for (double v : {r.price, r.load, r.temp_c, r.rh_pct, r.dewpoint_c})
            if (!std::isfinite(v)) throw DataError(row + ": non-finite value");
    }
}

/// Drops leading rows before the first midnight and a trailing partial day.
inline SeriesDataset make_dataset(std::vector<PeriodRecord> recs) {
    validate_records(recs);
    SeriesDataset ds;
    std::size_t first = 0;
    while (first < recs.size() && recs[first].timestamp.period_index() != 1) ++first;
    const std::size_t usable = (recs.size() - first) / kPeriodsPerDay * kPeriodsPerDay;
    ds.records.assign(recs.begin() + static_cast<std::ptrdiff_t>(first),
                      recs.begin() + static_cast<std::ptrdiff_t>(first + usable));
    ds.trimmed_rows = recs.size() - usable;
    return ds;
}

inline SeriesDataset parse_dataset(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty dataset file");
    const auto header = detail::trim(line);
    if (header != kDatasetHeader) {
        const auto cols = detail::split(header);
        const auto expected = detail::split(kDatasetHeader);
        for (const auto& col : expected) {
            bool found = false;
            for (const auto& c : cols) found = found || c == col;
            if (!found) throw ParseError("missing column \"" + std::string(col) + "\"");
        }
        throw ParseError("header must be exactly: " + std::string(kDatasetHeader));
    }
    static constexpr std::array<std::string_view, 7> names{"timestamp", "price_usd_mwh", "load_mw", "temp_c",
                                                           "rh_pct",    "dewpoint_c",    "holiday"};
    std::vector<PeriodRecord> recs;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        ++row;
        const auto cells = detail::split(line);
        if (cells.size() != names.size())
            throw ParseError("row " + std::to_string(row) + ": expected 7 cells, found " + std::to_string(cells.size()));
        PeriodRecord r;
        try {
            r.timestamp = LocalTime::parse(cells[0]);
        } catch (const ParseError& e) {
            throw ParseError("row " + std::to_string(row) + ": " + e.what());
        }
        r.price = detail::parse_number(cells[1], row, names[1]);
        r.load = detail::parse_number(cells[2], row, names[2]);
        r.temp_c = detail::parse_number(cells[3], row, names[3]);
        r.rh_pct = detail::parse_number(cells[4], row, names[4]);
        r.dewpoint_c = detail::parse_number(cells[5], row, names[5]);
        const double h = detail::parse_number(cells[6], row, names[6]);
        if (h != 0.0 && h != 1.0) throw DataError("row " + std::to_string(row) + ": holiday must be 0 or 1");
        r.holiday = static_cast<int>(h);
        recs.push_back(r);
    }
    return make_dataset(std::move(recs));
}

inline SeriesDataset parse_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset " + path.string());
    try {
        return parse_dataset(in);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

inline void write_dataset(const SeriesDataset& ds, std::ostream& out) {
    out << kDatasetHeader << '\n';
    for (const auto& r : ds.records) {
        out << r.timestamp.str() << ',' << detail::format_number(r.price) << ',' << detail::format_number(r.load) << ','
            << detail::format_number(r.temp_c) << ',' << detail::format_number(r.rh_pct) << ','
            << detail::format_number(r.dewpoint_c) << ',' << r.holiday << '\n';
    }
}

inline void write_dataset(const SeriesDataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_dataset(ds, out);
    if (!out) throw IoError("failed writing " + path.string());
}

} // namespace elastiq::data
