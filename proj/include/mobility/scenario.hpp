#pragma once

// Scenario bundle: networks, OD demand and parameters, loaded from a
// directory of CSV files plus a key = value parameter file.
//
//   road_links.csv  init_node,term_node,capacity,length,free_flow_time
//   rail_links.csv  init_node,term_node,line,length
//   od.csv          origin,destination,flow

#include <filesystem>
#include <set>
#include <string>
#include <utility>

#include "mobility/error.hpp"
#include "mobility/network.hpp"
#include "mobility/params.hpp"
#include "mobility/text.hpp"

namespace mobility {

struct Scenario {
    RoadNetwork road_network;
    RailNetwork rail_network;
    ODMatrix od_demand;
    ParamSet params;
    int horizon_years = 15;
    int base_year = 2025;

    std::size_t od_count() const { return od_demand.size(); }
    /// Number of lines; from the parameter override when set.
    double line_count() const {
        return params.rail_line_count.value_or(static_cast<double>(rail_network.lines.size()));
    }
    /// Mean one-way line length (km); from the parameter override when set.
    double line_length() const { return params.rail_line_length.value_or(rail_network.mean_line_length()); }
};

struct ScenarioPaths {
    std::string road_links;
    std::string rail_links;
    std::string od;
    std::string params;  // empty: built-in defaults

    /// Standard file names inside `dir`; `params` defaults to
    /// dir/default_params.txt when present.
    static ScenarioPaths in_directory(const std::string& dir, const std::string& params_file = {}) {
        namespace fs = std::filesystem;
        ScenarioPaths p;
        p.road_links = (fs::path(dir) / "road_links.csv").string();
        p.rail_links = (fs::path(dir) / "rail_links.csv").string();
        p.od = (fs::path(dir) / "od.csv").string();
        if (!params_file.empty())
            p.params = params_file;
        else if (fs::exists(fs::path(dir) / "default_params.txt"))
            p.params = (fs::path(dir) / "default_params.txt").string();
        return p;
    }
};

namespace detail {

inline RoadNetwork read_road(const std::string& path, const ParamSet& params) {
    const text::CsvFile f(path);
    const auto c_from = f.column("init_node"), c_to = f.column("term_node"), c_cap = f.column("capacity"),
               c_len = f.column("length"), c_t0 = f.column("free_flow_time");
    RoadNetwork net;
    std::set<std::pair<long long, long long>> seen;
    for (const auto& row : f.rows()) {
        const auto from = f.integer(row, c_from), to = f.integer(row, c_to);
        RoadLink l;
        l.capacity = f.number(row, c_cap);
        l.length = f.number(row, c_len);
        l.free_flow = f.number(row, c_t0);
        if (!(l.capacity > 0.0)) throw InputError(path, row.line, "capacity must be positive");
        if (!(l.free_flow > 0.0)) throw InputError(path, row.line, "free-flow time must be positive");
        if (l.length < 0.0) throw InputError(path, row.line, "negative length");
        if (from == to) throw InputError(path, row.line, "self-loop link");
        if (!seen.insert({from, to}).second) throw InputError(path, row.line, "duplicate link");
        l.from = net.nodes.add(from);
        l.to = net.nodes.add(to);
        l.alpha = params.road_bpr_alpha;
        l.beta = params.road_bpr_beta;
        net.links.push_back(l);
    }
    if (net.links.empty()) throw InputError(path, 0, "no links");
    return net;
}

inline RailNetwork read_rail(const std::string& path, const NodeIndex& nodes) {
    const text::CsvFile f(path);
    const auto c_from = f.column("init_node"), c_to = f.column("term_node"), c_line = f.column("line"),
               c_len = f.column("length");
    RailNetwork rail;
    rail.served.assign(static_cast<std::size_t>(nodes.size()), false);
    std::set<std::pair<long long, long long>> seen;
    for (const auto& row : f.rows()) {
        const auto from = f.integer(row, c_from), to = f.integer(row, c_to), line = f.integer(row, c_line);
        const double len = f.number(row, c_len);
        if (!nodes.contains(from))
            throw InputError(path, row.line, "dangling node reference " + std::to_string(from));
        if (!nodes.contains(to)) throw InputError(path, row.line, "dangling node reference " + std::to_string(to));
        if (!(len > 0.0)) throw InputError(path, row.line, "length must be positive");
        if (!seen.insert({from, to}).second) throw InputError(path, row.line, "duplicate link");
        std::size_t li = 0;
        while (li < rail.lines.size() && rail.lines[li].id != line) ++li;
        if (li == rail.lines.size()) rail.lines.push_back({line, {}});
        RailLink l{nodes.at(from), nodes.at(to), static_cast<int>(li), len};
        rail.lines[li].links.push_back(static_cast<int>(rail.links.size()));
        rail.links.push_back(l);
        rail.served[static_cast<std::size_t>(l.from)] = true;
        rail.served[static_cast<std::size_t>(l.to)] = true;
    }
    return rail;
}

inline ODMatrix read_od(const std::string& path, const NodeIndex& nodes) {
    const text::CsvFile f(path);
    const auto c_o = f.column("origin"), c_d = f.column("destination"), c_flow = f.column("flow");
    ODMatrix od;
    std::set<std::pair<long long, long long>> seen;
    for (const auto& row : f.rows()) {
        const auto o = f.integer(row, c_o), d = f.integer(row, c_d);
        const double flow = f.number(row, c_flow);
        if (!nodes.contains(o)) throw InputError(path, row.line, "dangling node reference " + std::to_string(o));
        if (!nodes.contains(d)) throw InputError(path, row.line, "dangling node reference " + std::to_string(d));
        if (flow < 0.0) throw InputError(path, row.line, "negative demand");
        if (o == d) throw InputError(path, row.line, "origin equals destination");
        if (!seen.insert({o, d}).second) throw InputError(path, row.line, "duplicate OD pair");
        od.push_back({nodes.at(o), nodes.at(d), flow});
    }
    return od;
}

}  // namespace detail

/// Reads and validates a scenario. Errors name the file and line.
inline Scenario load_scenario(const ScenarioPaths& paths) {
    Scenario s;
    s.params = paths.params.empty() ? ParamSet{} : load_params(paths.params);
    validate(s.params, paths.params.empty() ? "parameters" : paths.params);
    s.road_network = detail::read_road(paths.road_links, s.params);
    s.rail_network = detail::read_rail(paths.rail_links, s.road_network.nodes);
    s.od_demand = detail::read_od(paths.od, s.road_network.nodes);
    s.horizon_years = static_cast<int>(s.params.horizon_years);
    s.base_year = static_cast<int>(s.params.base_year);
    if (s.horizon_years < 1) throw InputError(paths.params, 0, "horizon_years must be at least 1");
    return s;
}

inline Scenario load_scenario(const std::string& dir, const std::string& params_file = {}) {
    return load_scenario(ScenarioPaths::in_directory(dir, params_file));
}

}  // namespace mobility
