#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "elastiq/error.hpp"
#include "elastiq/nn/bptt.hpp"

namespace elastiq::est {

struct EstimatorConfig {
    double dlambda = 3.0; // USD/MWh
    double eta_th = 0.8;
    double alpha = 0.5;
    int t_in = 25;
    int t_out = 9;
    int n_cell = 32;
    int n_den_p = 32;
    int n_den_e = 48;
    nn::TrainConfig stage1;
    nn::TrainConfig stage2;
    std::uint64_t seed = 1;
};

inline void validate(const EstimatorConfig& c) {
    if (!(c.dlambda > 0.0)) throw ConfigError("estimator.dlambda must be > 0");
    if (!(c.eta_th > 0.0 && c.eta_th <= 1.0)) throw ConfigError("estimator.eta_th must lie in (0, 1]");
    if (!(c.alpha > 0.0)) throw ConfigError("estimator.alpha must be > 0");
    if (c.t_out != 9) throw ConfigError("estimator.t_out must be 9 (current period plus the next 8)");
    if (c.t_in < c.t_out) throw ConfigError("estimator.t_in must be >= t_out");
    if (c.n_cell < 1 || c.n_den_p < 1 || c.n_den_e < 1) throw ConfigError("estimator network sizes must be >= 1");
    nn::validate(c.stage1);
    nn::validate(c.stage2);
}

namespace detail {

inline nlohmann::json train_to_json(const nn::TrainConfig& t) {
    return {{"batch_size", t.batch_size},
            {"max_iters", t.max_iters},
            {"learning_rate", t.learning_rate},
            {"report_every", t.report_every}};
}

template <class T>
void read_field(const nlohmann::json& j, const std::string& where, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ParseError(where + "." + key + ": wrong type");
    }
}

inline void train_from_json(const nlohmann::json& j, const std::string& where, nn::TrainConfig& t) {
    if (!j.is_object()) throw ParseError(where + ": expected an object");
    read_field(j, where, "batch_size", t.batch_size);
    read_field(j, where, "max_iters", t.max_iters);
    read_field(j, where, "learning_rate", t.learning_rate);
    read_field(j, where, "report_every", t.report_every);
}

} // namespace detail

inline nlohmann::json to_json(const EstimatorConfig& c) {
    return {{"dlambda", c.dlambda},   {"eta_th", c.eta_th},   {"alpha", c.alpha},
            {"t_in", c.t_in},         {"t_out", c.t_out},     {"n_cell", c.n_cell},
            {"n_den_p", c.n_den_p},   {"n_den_e", c.n_den_e}, {"seed", c.seed},
            {"stage1", detail::train_to_json(c.stage1)},
            {"stage2", detail::train_to_json(c.stage2)}};
}

/// Missing fields keep their defaults.
inline EstimatorConfig estimator_config_from_json(const nlohmann::json& j, const std::string& where = "estimator") {
    if (!j.is_object()) throw ParseError(where + ": expected an object");
    EstimatorConfig c;
    detail::read_field(j, where, "dlambda", c.dlambda);
    detail::read_field(j, where, "eta_th", c.eta_th);
    detail::read_field(j, where, "alpha", c.alpha);
    detail::read_field(j, where, "t_in", c.t_in);
    detail::read_field(j, where, "t_out", c.t_out);
    detail::read_field(j, where, "n_cell", c.n_cell);
    detail::read_field(j, where, "n_den_p", c.n_den_p);
    detail::read_field(j, where, "n_den_e", c.n_den_e);
    detail::read_field(j, where, "seed", c.seed);
    if (j.contains("stage1")) detail::train_from_json(j.at("stage1"), where + ".stage1", c.stage1);
    if (j.contains("stage2")) detail::train_from_json(j.at("stage2"), where + ".stage2", c.stage2);
    validate(c);
    return c;
}

} // namespace elastiq::est
