#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "elastiq/error.hpp"
#include "elastiq/nn/lstm.hpp"

namespace elastiq::nn {

// Checkpoint layout:
//   { "format": "elastiq.network", "version": 1,
//     "meta": {"n_cell", "n_den", "n_in", "t_in", "t_out"},
//     "cell": {"W_f": [[...], ...], ..., "b_f": [...], ...},
//     "head": {"W_h1": [[...]], "b_h1": [...], "W_h2": [[...]], "b_h2": x} }
// Matrices are row-major nested arrays; doubles use shortest round-trip text.

inline constexpr std::string_view kCheckpointFormat = "elastiq.network";

namespace detail {

inline nlohmann::json matrix_to_json(const auto& m, bool as_vector) {
    nlohmann::json rows = nlohmann::json::array();
    if (as_vector) {
        for (Index i = 0; i < m.size(); ++i) rows.push_back(m(i));
        return rows;
    }
    for (Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline const nlohmann::json& require_field(const nlohmann::json& obj, const std::string& key,
                                           const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) throw ParseError(where + ": missing field \"" + key + "\"");
    return obj.at(key);
}

inline double as_double(const nlohmann::json& v, const std::string& field) {
    if (!v.is_number()) throw ParseError("field " + field + ": expected a number");
    return v.get<double>();
}

inline int as_int(const nlohmann::json& v, const std::string& field) {
    if (!v.is_number_integer()) throw ParseError("field " + field + ": expected an integer");
    return v.get<int>();
}

/// Reads a block into m, whose shape is already set from meta.
inline void json_to_block(const nlohmann::json& v, auto& m, const std::string& field, bool as_vector) {
    if (!v.is_array()) throw ParseError("field " + field + ": expected an array");
    if (as_vector) {
        if (static_cast<Index>(v.size()) != m.size())
            throw ConfigError("shape mismatch in " + field + ": expected " + std::to_string(m.size()) +
                              " entries, found " + std::to_string(v.size()));
        for (Index i = 0; i < m.size(); ++i) m(i) = as_double(v[static_cast<std::size_t>(i)], field);
        return;
    }
    if (static_cast<Index>(v.size()) != m.rows())
        throw ConfigError("shape mismatch in " + field + ": expected " + std::to_string(m.rows()) + " rows, found " +
                          std::to_string(v.size()));
    for (Index i = 0; i < m.rows(); ++i) {
        const auto& row = v[static_cast<std::size_t>(i)];
        if (!row.is_array()) throw ParseError("field " + field + ": row " + std::to_string(i) + " is not an array");
        if (static_cast<Index>(row.size()) != m.cols())
            throw ConfigError("shape mismatch in " + field + ": row " + std::to_string(i) + " has " +
                              std::to_string(row.size()) + " columns, expected " + std::to_string(m.cols()));
        for (Index j = 0; j < m.cols(); ++j) m(i, j) = as_double(row[static_cast<std::size_t>(j)], field);
    }
}

} // namespace detail

inline nlohmann::json to_json(const NetworkParams& p) {
    nlohmann::json j;
    j["format"] = kCheckpointFormat;
    j["version"] = 1;
    j["meta"] = {{"n_cell", p.meta.n_cell}, {"n_den", p.meta.n_den}, {"n_in", p.meta.n_in},
                 {"t_in", p.meta.t_in},     {"t_out", p.meta.t_out}};
    nlohmann::json cell = nlohmann::json::object();
    nlohmann::json head = nlohmann::json::object();
    for_each_block(p, [&](std::string_view name, bool in_cell, const auto& m) {
        const std::string key(name);
        if (key == "b_h2") {
            head[key] = m(0, 0);
            return;
        }
        const bool vec = key[0] == 'b';
        (in_cell ? cell : head)[key] = detail::matrix_to_json(m, vec);
    });
    j["cell"] = std::move(cell);
    j["head"] = std::move(head);
    return j;
}

/// Parses and validates a checkpoint object. Missing or mistyped fields are
/// ParseErrors naming the field; wrong array sizes are ConfigErrors naming
/// the block.
inline NetworkParams network_from_json(const nlohmann::json& j) {
    const auto& meta_j = detail::require_field(j, "meta", "checkpoint");
    NetworkMeta meta;
    meta.n_cell = detail::as_int(detail::require_field(meta_j, "n_cell", "meta"), "meta.n_cell");
    meta.n_den = detail::as_int(detail::require_field(meta_j, "n_den", "meta"), "meta.n_den");
    meta.n_in = detail::as_int(detail::require_field(meta_j, "n_in", "meta"), "meta.n_in");
    meta.t_in = detail::as_int(detail::require_field(meta_j, "t_in", "meta"), "meta.t_in");
    meta.t_out = detail::as_int(detail::require_field(meta_j, "t_out", "meta"), "meta.t_out");
    validate(meta);

    NetworkParams p = zeros_like(meta);
    const auto& cell_j = detail::require_field(j, "cell", "checkpoint");
    const auto& head_j = detail::require_field(j, "head", "checkpoint");
    for_each_block(p, [&](std::string_view name, bool in_cell, auto& m) {
        const std::string key(name);
        const auto& field = detail::require_field(in_cell ? cell_j : head_j, key, in_cell ? "cell" : "head");
        if (key == "b_h2") {
            m(0, 0) = detail::as_double(field, key);
            return;
        }
        detail::json_to_block(field, m, key, key[0] == 'b');
    });
    validate(p);
    return p;
}

inline void save_params(const NetworkParams& p, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << to_json(p).dump(1) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

inline NetworkParams load_params(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": malformed checkpoint: " + e.what());
    }
    return network_from_json(j);
}

} // namespace elastiq::nn
