#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "elastiq/error.hpp"
#include "elastiq/sim/simulator.hpp"

namespace elastiq::sim {

// Scenario file layout (every field optional unless noted):
// {
//   "name": "thermal", "start_date": "2021-06-01", "days": 180,
//   "warmup_days": 14, "seed": 7, "dlambda": 3, "holidays": ["2021-07-05"],
//   "price":      {"mean", "reversion", "volatility", "spike_intensity",
//                  "spike_log_mean", "spike_log_sd",
//                  "diurnal": [96 numbers] | {"amplitude", "peak_period"}},
//   "weather":    {"temp_mean", "temp_amplitude", "temp_peak_period", "temp_noise",
//                  "rh_mean", "rh_amplitude", "rh_noise", "persistence"},
//   "forecaster": {"ar_order", "ridge", "spike_quantile", "elevation_factor",
//                  "half_life", "decay_half_lives"},
//   "consumer":   {"kind" (required), "p_min", "p_max",
//                  "baseline": [96 numbers] | {"level", "amplitude", "peak_period"},
//                  "price_coef": [9 numbers],
//                  "thermal": {"resistance", "capacitance", "cop", "setpoint_c",
//                              "discomfort_weight", "overcool_weight",
//                              "ramp_weight", "hvac_max"},
//                  "jobs": [{"energy", "release", "deadline", "max_rate"}]}
// }

namespace detail {

class Reader {
  public:
    Reader(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ParseError(where_ + ": expected an object");
    }

    template <class T>
    void get(const char* key, T& out) const {
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ParseError(where_ + "." + key + ": wrong type");
        }
    }

    bool has(const char* key) const { return j_.contains(key); }
    const nlohmann::json& at(const char* key) const { return j_.at(key); }
    std::string path(const char* key) const { return where_ + "." + key; }

  private:
    const nlohmann::json& j_;
    std::string where_;
};

inline Profile read_profile(const nlohmann::json& v, const std::string& where, double level_default) {
    if (v.is_array()) {
        if (v.size() != data::kPeriodsPerDay) throw ConfigError(where + ": expected 96 values");
        Profile p{};
        for (std::size_t k = 0; k < p.size(); ++k) {
            if (!v[k].is_number()) throw ParseError(where + ": entry " + std::to_string(k) + " is not a number");
            p[k] = v[k].get<double>();
        }
        return p;
    }
    Reader r(v, where);
    double level = level_default, amplitude = 0.0, peak = 48.0;
    r.get("level", level);
    r.get("amplitude", amplitude);
    r.get("peak_period", peak);
    return cosine_profile(level, amplitude, peak);
}

} // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& j) {
    Scenario s;
    detail::Reader r(j, "scenario");
    r.get("name", s.name);
    if (r.has("start_date")) {
        if (!r.at("start_date").is_string()) throw ParseError("scenario.start_date: wrong type");
        s.start = data::LocalTime::parse(r.at("start_date").get<std::string>());
    }
    r.get("days", s.days);
    r.get("warmup_days", s.warmup_days);
    r.get("seed", s.seed);
    r.get("dlambda", s.dlambda);
    if (r.has("holidays")) {
        const auto& h = r.at("holidays");
        if (!h.is_array()) throw ParseError("scenario.holidays: expected an array");
        for (const auto& d : h) {
            if (!d.is_string()) throw ParseError("scenario.holidays: expected date strings");
            s.holidays.push_back(data::LocalTime::parse(d.get<std::string>()));
        }
    }
    if (r.has("price")) {
        detail::Reader p(r.at("price"), "scenario.price");
        p.get("mean", s.price.mean);
        p.get("reversion", s.price.reversion);
        p.get("volatility", s.price.volatility);
        p.get("spike_intensity", s.price.spike_intensity);
        p.get("spike_log_mean", s.price.spike_log_mean);
        p.get("spike_log_sd", s.price.spike_log_sd);
        if (p.has("diurnal")) s.price.diurnal = detail::read_profile(p.at("diurnal"), p.path("diurnal"), 1.0);
    }
    if (r.has("weather")) {
        detail::Reader w(r.at("weather"), "scenario.weather");
        w.get("temp_mean", s.weather.temp_mean);
        w.get("temp_amplitude", s.weather.temp_amplitude);
        w.get("temp_peak_period", s.weather.temp_peak_period);
        w.get("temp_noise", s.weather.temp_noise);
        w.get("rh_mean", s.weather.rh_mean);
        w.get("rh_amplitude", s.weather.rh_amplitude);
        w.get("rh_noise", s.weather.rh_noise);
        w.get("persistence", s.weather.persistence);
    }
    if (r.has("forecaster")) {
        detail::Reader f(r.at("forecaster"), "scenario.forecaster");
        f.get("ar_order", s.forecaster.ar_order);
        f.get("ridge", s.forecaster.ridge);
        f.get("spike_quantile", s.forecaster.spike_quantile);
        f.get("elevation_factor", s.forecaster.elevation_factor);
        f.get("half_life", s.forecaster.half_life);
        f.get("decay_half_lives", s.forecaster.decay_half_lives);
    }
    if (!r.has("consumer")) throw ParseError("scenario: missing field \"consumer\"");
    {
        detail::Reader c(r.at("consumer"), "scenario.consumer");
        if (!c.has("kind")) throw ParseError("scenario.consumer: missing field \"kind\"");
        std::string kind;
        c.get("kind", kind);
        s.consumer.kind = consumer_kind_from(kind);
        c.get("p_min", s.consumer.p_min);
        c.get("p_max", s.consumer.p_max);
        if (c.has("baseline")) s.consumer.baseline = detail::read_profile(c.at("baseline"), c.path("baseline"), 50.0);
        if (c.has("price_coef")) {
            const auto& pc = c.at("price_coef");
            if (!pc.is_array() || pc.size() > kHorizon)
                throw ConfigError("scenario.consumer.price_coef: expected at most 9 numbers");
            s.consumer.price_coef.fill(0.0);
            for (std::size_t k = 0; k < pc.size(); ++k) {
                if (!pc[k].is_number()) throw ParseError("scenario.consumer.price_coef: entry is not a number");
                s.consumer.price_coef[k] = pc[k].get<double>();
            }
        }
        if (c.has("thermal")) {
            detail::Reader t(c.at("thermal"), "scenario.consumer.thermal");
            auto& tp = s.consumer.thermal;
            t.get("resistance", tp.resistance);
            t.get("capacitance", tp.capacitance);
            t.get("cop", tp.cop);
            t.get("setpoint_c", tp.setpoint_c);
            t.get("discomfort_weight", tp.discomfort_weight);
            t.get("overcool_weight", tp.overcool_weight);
            t.get("ramp_weight", tp.ramp_weight);
            t.get("hvac_max", tp.hvac_max);
        }
        if (c.has("jobs")) {
            const auto& js = c.at("jobs");
            if (!js.is_array()) throw ParseError("scenario.consumer.jobs: expected an array");
            for (std::size_t k = 0; k < js.size(); ++k) {
                detail::Reader jr(js[k], "scenario.consumer.jobs[" + std::to_string(k) + "]");
                Job job;
                jr.get("energy", job.energy);
                jr.get("release", job.release);
                jr.get("deadline", job.deadline);
                jr.get("max_rate", job.max_rate);
                s.consumer.jobs.push_back(job);
            }
        }
    }
    validate(s);
    return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return scenario_from_json(nlohmann::json::parse(buf.str()));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": malformed JSON: " + e.what());
    }
}

} // namespace elastiq::sim
