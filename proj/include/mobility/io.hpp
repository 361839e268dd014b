#pragma once

// CSV and text outputs. Everything is rendered to strings first and written
// by OutputSet::commit, so a failing command leaves no partial files.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "mobility/analysis.hpp"
#include "mobility/backcast.hpp"
#include "mobility/error.hpp"
#include "mobility/simulator.hpp"
#include "mobility/text.hpp"

namespace mobility {

/// Named file contents, written together.
class OutputSet {
public:
    void add(std::string name, std::string content) { files_.emplace_back(std::move(name), std::move(content)); }
    const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }

    /// Writes every file to a temporary name in `dir`, then renames them
    /// into place. On failure the temporaries are removed.
    void commit(const std::string& dir) const {
        namespace fs = std::filesystem;
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw ModelError("cannot create output directory '" + dir + "': " + ec.message());
        std::vector<fs::path> temps;
        auto cleanup = [&] {
            for (const auto& t : temps) fs::remove(t, ec);
        };
        for (const auto& [name, content] : files_) {
            const fs::path tmp = fs::path(dir) / ("." + name + ".partial");
            temps.push_back(tmp);
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out << content;
            out.close();
            if (!out) {
                cleanup();
                throw ModelError("cannot write '" + (fs::path(dir) / name).string() + "'");
            }
        }
        for (std::size_t i = 0; i < files_.size(); ++i) {
            fs::rename(temps[i], fs::path(dir) / files_[i].first, ec);
            if (ec) {
                cleanup();
                throw ModelError("cannot move '" + files_[i].first + "' into place: " + ec.message());
            }
        }
    }

private:
    std::vector<std::pair<std::string, std::string>> files_;
};

namespace detail {

inline std::string fmt(double v) { return text::format_double(v); }

inline std::string csv_line(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += fields[i];
    }
    return out + '\n';
}

struct TrajectoryColumn {
    const char* name;
    const char* unit;
    double TrajectoryRecord::*field;
};

inline const std::vector<TrajectoryColumn>& trajectory_columns() {
    static const std::vector<TrajectoryColumn> cols{
        {"u", "veh/y", &TrajectoryRecord::u},
        {"S_S", "veh", &TrajectoryRecord::S_S},
        {"S_R", "trains", &TrajectoryRecord::S_R},
        {"S_H", "veh", &TrajectoryRecord::S_H},
        {"S_H_thermal", "veh", &TrajectoryRecord::S_H_thermal},
        {"S_H_electric", "veh", &TrajectoryRecord::S_H_electric},
        {"G_H", "pax/h", &TrajectoryRecord::G_H},
        {"G_S", "pax/h", &TrajectoryRecord::G_S},
        {"G_R", "pax/h", &TrajectoryRecord::G_R},
        {"t_A", "min", &TrajectoryRecord::t_A},
        {"t_R", "min", &TrajectoryRecord::t_R},
        {"t_S_w", "min", &TrajectoryRecord::t_S_w},
        {"t_R_ae", "min", &TrajectoryRecord::t_R_ae},
        {"F_R", "trains/h", &TrajectoryRecord::F_R},
        {"K_A", "veh/h", &TrajectoryRecord::K_A},
        {"K_R", "pax/h", &TrajectoryRecord::K_R},
        {"C_S", "EUR/y", &TrajectoryRecord::C_S},
        {"C_R", "EUR/y", &TrajectoryRecord::C_R},
        {"E", "t/y", &TrajectoryRecord::E},
        {"xi", "t", &TrajectoryRecord::xi},
        {"D_S", "vkm/y", &TrajectoryRecord::D_S},
        {"D_R", "train-km/y", &TrajectoryRecord::D_R},
        {"U", "-", &TrajectoryRecord::U},
    };
    return cols;
}

}  // namespace detail

/// Yearly trajectory, one row per simulated year. Units per column are
/// listed by trajectory_units().
inline std::string trajectory_csv(const std::vector<TrajectoryRecord>& records) {
    if (records.empty()) throw ModelError("trajectory_csv: no records");
    const auto& cols = detail::trajectory_columns();
    std::vector<std::string> header{"year"};
    for (const auto& c : cols) header.emplace_back(c.name);
    std::string out = detail::csv_line(header);
    for (const auto& r : records) {
        std::vector<std::string> row{std::to_string(r.year)};
        for (const auto& c : cols) row.push_back(detail::fmt(r.*(c.field)));
        out += detail::csv_line(row);
    }
    return out;
}

/// "name (unit)" for every trajectory column.
inline std::vector<std::string> trajectory_units() {
    std::vector<std::string> out{"year (calendar year)"};
    for (const auto& c : detail::trajectory_columns()) out.push_back(std::string(c.name) + " (" + c.unit + ")");
    return out;
}

inline std::vector<TrajectoryRecord> read_trajectory(const std::string& path) {
    const text::CsvFile f(path);
    const auto& cols = detail::trajectory_columns();
    const auto c_year = f.column("year");
    std::vector<std::size_t> idx;
    for (const auto& c : cols) idx.push_back(f.column(c.name));
    std::vector<TrajectoryRecord> out;
    for (const auto& row : f.rows()) {
        TrajectoryRecord r;
        r.year = static_cast<int>(f.integer(row, c_year));
        for (std::size_t i = 0; i < cols.size(); ++i) r.*(cols[i].field) = f.number(row, idx[i]);
        out.push_back(r);
    }
    if (out.empty()) throw InputError(path, 0, "trajectory has no rows");
    return out;
}

/// Plot data grouped by panel: demand, times, stocks, supply, costs,
/// emissions. `baseline` (same length, may be empty) adds the no-SAV run.
inline std::string plot_data_csv(const std::vector<TrajectoryRecord>& records,
                                 const std::vector<TrajectoryRecord>& baseline = {}) {
    std::vector<std::string> header{"year",
                                    "demand_HV_pax_h",
                                    "demand_SAV_pax_h",
                                    "demand_rail_pax_h",
                                    "time_road_min",
                                    "time_rail_min",
                                    "time_SAV_wait_min",
                                    "time_rail_access_min",
                                    "stock_HV_thermal_veh",
                                    "stock_HV_electric_veh",
                                    "stock_SAV_veh",
                                    "stock_rail_trains",
                                    "supply_road_capacity_veh_h",
                                    "supply_rail_capacity_pax_h",
                                    "supply_rail_frequency_trains_h",
                                    "cost_SAV_EUR_y",
                                    "cost_rail_EUR_y",
                                    "emissions_t_y",
                                    "emissions_cumulative_t"};
    const bool base = !baseline.empty();
    if (base && baseline.size() != records.size()) throw ModelError("plot_data_csv: baseline length differs");
    if (base) {
        header.emplace_back("emissions_no_SAV_t_y");
        header.emplace_back("emissions_cumulative_no_SAV_t");
    }
    std::string out = detail::csv_line(header);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        std::vector<std::string> row{std::to_string(r.year)};
        for (double v : {r.G_H, r.G_S, r.G_R, r.t_A, r.t_R, r.t_S_w, r.t_R_ae, r.S_H_thermal, r.S_H_electric, r.S_S,
                         r.S_R, r.K_A, r.K_R, r.F_R, r.C_S, r.C_R, r.E, r.xi})
            row.push_back(detail::fmt(v));
        if (base) {
            row.push_back(detail::fmt(baseline[i].E));
            row.push_back(detail::fmt(baseline[i].xi));
        }
        out += detail::csv_line(row);
    }
    return out;
}

// ---- analysis ----

inline std::string gains_csv(const std::vector<YearAnalysis>& years) {
    std::vector<std::string> header{"year"};
    for (int i : GainSet::kUsed) header.push_back("k" + std::to_string(i));
    std::string out = detail::csv_line(header);
    for (const auto& a : years) {
        std::vector<std::string> row{std::to_string(a.year)};
        for (int i : GainSet::kUsed) row.push_back(detail::fmt(a.lin.gains[static_cast<std::size_t>(i)]));
        out += detail::csv_line(row);
    }
    return out;
}

namespace detail {

inline std::string chain_nodes(const std::vector<int>& nodes, bool closed) {
    std::string s;
    for (int v : nodes) s += (s.empty() ? "" : " > ") + canonical_node_names()[static_cast<std::size_t>(v)];
    if (closed) s += " > " + canonical_node_names()[static_cast<std::size_t>(nodes.front())];
    return s;
}

}  // namespace detail

/// One row per loop and path per year: label, kind, structural sign, gain.
inline std::string loops_csv(const std::vector<YearAnalysis>& years) {
    std::string out = detail::csv_line({"year", "label", "kind", "sign", "gain", "nodes"});
    for (const auto& a : years) {
        for (const auto& l : a.transfer.mason.loops) {
            const int sign = canonical_sign(l.nodes, true);
            out += detail::csv_line({std::to_string(a.year), canonical_label(l.mask, false),
                                     sign > 0 ? "reinforcing" : "balancing", sign > 0 ? "+" : "-",
                                     detail::fmt(l.gain), detail::chain_nodes(l.nodes, true)});
        }
        for (const auto& p : a.transfer.mason.paths) {
            const int sign = canonical_sign(p.nodes, false);
            out += detail::csv_line({std::to_string(a.year), canonical_label(p.mask, true), "path",
                                     sign > 0 ? "+" : "-", detail::fmt(p.gain), detail::chain_nodes(p.nodes, false)});
        }
    }
    return out;
}

inline std::string transfer_csv(const std::vector<YearAnalysis>& years) {
    std::string out = detail::csv_line({"year", "S_S_veh", "T_t_per_y_per_veh", "numerator", "denominator",
                                        "T_linear_solve", "undesired_flag", "k6k7_gt_k4", "margin_k6k7_minus_k4"});
    for (const auto& a : years) {
        const auto& t = a.transfer;
        out += detail::csv_line({std::to_string(a.year), detail::fmt(a.point.state.S_S), detail::fmt(t.T),
                                 detail::fmt(t.mason.numerator), detail::fmt(t.mason.denominator),
                                 detail::fmt(t.T_linear), t.effect.flag ? "1" : "0", t.effect.necessary ? "1" : "0",
                                 detail::fmt(t.effect.margin)});
    }
    return out;
}

inline std::string analysis_report(const std::vector<YearAnalysis>& years) {
    std::string out;
    for (const auto& a : years) {
        const auto& t = a.transfer;
        out += "year " + std::to_string(a.year) + "\n";
        out += "  operating point: S_S " + detail::fmt(a.point.state.S_S) + " veh, wait " + detail::fmt(a.lin.wait) +
               " min, D_S " + detail::fmt(a.lin.D_S) + " pax km/h, D_H " + detail::fmt(a.lin.D_H) +
               " pax km/h, mean road time " + detail::fmt(a.lin.T_bar) + " min, mean capacity " +
               detail::fmt(a.lin.K_bar) + " veh/h\n";
        out += "  gains:";
        for (int i : GainSet::kUsed) out += " k" + std::to_string(i) + "=" + detail::fmt(a.lin.gains[static_cast<std::size_t>(i)]);
        out += "\n";
        int reinforcing = 0;
        for (const auto& l : t.mason.loops) reinforcing += canonical_sign(l.nodes, true) > 0;
        out += "  loops: " + std::to_string(t.mason.loops.size()) + " (" + std::to_string(reinforcing) +
               " reinforcing, " + std::to_string(t.mason.loops.size() - static_cast<std::size_t>(reinforcing)) +
               " balancing)\n";
        for (const auto& l : t.mason.loops) {
            const int sign = canonical_sign(l.nodes, true);
            out += "    " + canonical_label(l.mask, false) + " " + (sign > 0 ? "+" : "-") + " " + detail::fmt(l.gain) +
                   "  " + detail::chain_nodes(l.nodes, true) + "\n";
        }
        out += "  paths: " + std::to_string(t.mason.paths.size()) + "\n";
        for (const auto& p : t.mason.paths) {
            const int sign = canonical_sign(p.nodes, false);
            out += "    " + canonical_label(p.mask, true) + " " + (sign > 0 ? "+" : "-") + " " + detail::fmt(p.gain) +
                   "  " + detail::chain_nodes(p.nodes, false) + "\n";
        }
        out += "  T = " + detail::fmt(t.T) + " t/y per SAV (linear solve " + detail::fmt(t.T_linear) + ")\n";
        out += "  undesired effect: " + std::string(t.effect.flag ? "yes" : "no") + "; k6 k7 > k4: " +
               (t.effect.necessary ? "yes" : "no") + " (margin " + detail::fmt(t.effect.margin) + ")\n";
    }
    return out;
}

// ---- backcast ----

/// Yearly solution against the reference; totals re-sum from the rows.
inline std::string solution_csv(const ForecastResult& solution, const ForecastResult& reference) {
    if (solution.records.size() != reference.records.size()) throw ModelError("solution_csv: horizon mismatch");
    std::string out = detail::csv_line({"year", "u_opt_veh", "u_ref_veh", "cost_opt_EUR", "cost_ref_EUR", "E_opt_t",
                                        "E_ref_t", "xi_opt_t", "xi_ref_t", "S_S_opt_veh", "S_S_ref_veh"});
    for (std::size_t i = 0; i < solution.records.size(); ++i) {
        const auto& s = solution.records[i];
        const auto& r = reference.records[i];
        out += detail::csv_line({std::to_string(s.year), detail::fmt(s.u), detail::fmt(r.u), detail::fmt(s.C_S + s.C_R),
                                 detail::fmt(r.C_S + r.C_R), detail::fmt(s.E), detail::fmt(r.E), detail::fmt(s.xi),
                                 detail::fmt(r.xi), detail::fmt(s.S_S), detail::fmt(r.S_S)});
    }
    return out;
}

inline std::string comparison_report(const BackcastSolution& sol, const ReferenceComparison& c) {
    std::string out;
    out += "cap: " + detail::fmt(sol.cap) + " t\n";
    out += "reference: cost " + detail::fmt(sol.reference_cost) + " EUR, xi(T) " + detail::fmt(sol.reference_xi) + " t\n";
    out += "solution: cost " + detail::fmt(sol.total_cost) + " EUR, xi(T) " + detail::fmt(sol.xi_T) + " t\n";
    out += "cost change: " + detail::fmt(c.cost_delta) + " EUR (" + detail::fmt(c.cost_delta_pct) + " %)\n";
    out += "xi(T) change: " + detail::fmt(c.xi_delta) + " t (" + detail::fmt(c.xi_delta_pct) + " %)\n";
    out += "cap violation: " + detail::fmt(100.0 * sol.violation) + " %\n";
    out += "integer policy: " + std::string(sol.rounded ? "yes" : "no") + "\n";
    out += "solver: best start " + std::to_string(sol.best_start) + ", outer iterations " +
           std::to_string(sol.outer_iterations) + ", inner iterations " + std::to_string(sol.inner_iterations) +
           ", simulated years " + std::to_string(sol.simulated_years) + "\n";
    out += "policy (veh/y):";
    for (double u : c.solution_policy) out += " " + detail::fmt(u);
    out += "\nreference (veh/y):";
    for (double u : c.reference_policy) out += " " + detail::fmt(u);
    return out + "\n";
}

/// Policy file: a `u` column (veh/y), one row per year; `year` optional.
inline std::vector<double> read_policy_csv(const std::string& path) {
    const text::CsvFile f(path);
    const auto c_u = f.column("u");
    std::vector<double> u;
    for (const auto& row : f.rows()) {
        const double v = f.number(row, c_u);
        if (!(v >= 0.0)) throw InputError(path, row.line, "policy values must be non-negative");
        u.push_back(v);
    }
    if (u.empty()) throw InputError(path, 0, "policy has no rows");
    return u;
}

}  // namespace mobility
