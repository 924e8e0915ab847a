#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wald/errors.hpp"
#include "wald/grid.hpp"
#include "wald/model.hpp"
#include "wald/simulate.hpp"
#include "wald/tariff.hpp"

namespace wald {

using Json = nlohmann::ordered_json;

// Scenario file: model parameters, the type list, and optional tariff,
// synthesis targets, grid and simulation overrides.
//
// {
//   "params": {"sigma": 1.0, "c": 0.05, "pi": 1.0, "beta": 1.2, "l": 0.8, "L": 2.0},
//   "types": [0.1, 0.5, 0.9],
//   "tariff": {"breakpoints": [...], "values": [...], "overrides": [[x, v], ...],
//              "default": 0.8},
//   "targets": [[theta, x], ...],
//   "grid": {"x_min": -7.0, "x_max": 7.0, "h": 0.05},
//   "sim": {"dt": 1e-3, "n_paths": 100000, "seed": 1, "max_time": 1000.0}
// }
struct Scenario {
    ModelParams params;
    TypeSpace types;
    std::optional<Tariff> tariff;
    std::vector<std::pair<double, double>> targets;
    std::optional<SolveGrid> grid;
    SimConfig sim;

    SolveGrid grid_or_default(double h_override = 0.0) const {
        if (grid && h_override <= 0.0) return *grid;
        double h = h_override;
        if (grid) return SolveGrid::make(grid->x_min(), grid->x_max(), h);
        return default_grid(params, types, h);
    }
};

namespace detail {

inline double require_number(const Json& j, const std::string& key) {
    if (!j.contains(key) || !j[key].is_number())
        raise(ErrorKind::MalformedInput, "missing numeric field '" + key + "'");
    return j[key].get<double>();
}

} // namespace detail

inline Tariff tariff_from_json(const Json& j, double cap) {
    std::vector<double> bps, vals;
    std::vector<std::pair<double, double>> overrides;
    if (j.contains("breakpoints")) bps = j["breakpoints"].get<std::vector<double>>();
    if (j.contains("values")) vals = j["values"].get<std::vector<double>>();
    if (j.contains("overrides"))
        for (const auto& o : j["overrides"]) {
            if (!o.is_array() || o.size() != 2)
                raise(ErrorKind::MalformedInput, "tariff overrides must be [x, value] pairs");
            overrides.emplace_back(o[0].get<double>(), o[1].get<double>());
        }
    double def = detail::require_number(j, "default");
    Tariff t(bps, vals, def, overrides);
    t.validate_cap(cap);
    return t;
}

inline Json tariff_to_json(const Tariff& t) {
    Json j;
    j["breakpoints"] = t.breakpoints();
    j["values"] = t.segment_values();
    Json ov = Json::array();
    for (const auto& [x, v] : t.overrides()) ov.push_back({x, v});
    j["overrides"] = ov;
    j["default"] = t.default_value();
    return j;
}

inline Scenario scenario_from_json(const Json& j) {
    Scenario s;
    if (!j.contains("params") || !j["params"].is_object())
        raise(ErrorKind::MalformedInput, "scenario needs a 'params' object");
    const Json& p = j["params"];
    s.params = validate_params(detail::require_number(p, "sigma"),
                               detail::require_number(p, "c"),
                               detail::require_number(p, "pi"),
                               detail::require_number(p, "beta"),
                               detail::require_number(p, "l"),
                               detail::require_number(p, "L"));
    if (j.contains("types"))
        for (const auto& t : j["types"]) s.types.push_back(FirmType{t.get<double>()});
    if (j.contains("tariff")) s.tariff = tariff_from_json(j["tariff"], s.params.l);
    if (j.contains("targets"))
        for (const auto& t : j["targets"]) {
            if (!t.is_array() || t.size() != 2)
                raise(ErrorKind::MalformedInput, "targets must be [theta, x] pairs");
            s.targets.emplace_back(t[0].get<double>(), t[1].get<double>());
        }
    if (j.contains("grid")) {
        const Json& g = j["grid"];
        s.grid = SolveGrid::make(detail::require_number(g, "x_min"),
                                 detail::require_number(g, "x_max"),
                                 detail::require_number(g, "h"));
    }
    if (j.contains("sim")) {
        const Json& g = j["sim"];
        if (g.contains("dt")) s.sim.dt = g["dt"].get<double>();
        if (g.contains("n_paths")) s.sim.n_paths = g["n_paths"].get<std::size_t>();
        if (g.contains("seed")) s.sim.seed = g["seed"].get<std::uint64_t>();
        if (g.contains("max_time")) s.sim.max_time = g["max_time"].get<double>();
    }
    return s;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) raise(ErrorKind::MalformedInput, "cannot open scenario file " + path);
    Json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorKind::MalformedInput, std::string("scenario parse error: ") + e.what());
    }
    return scenario_from_json(j);
}

} // namespace wald
