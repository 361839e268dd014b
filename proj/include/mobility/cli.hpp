#pragma once

// Command-line front end: forecast, backcast, analyze, validate.

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mobility/analysis.hpp"
#include "mobility/backcast.hpp"
#include "mobility/io.hpp"
#include "mobility/scenario.hpp"
#include "mobility/simulator.hpp"

#ifndef MOBILITY_DEFAULT_SCENARIO
#define MOBILITY_DEFAULT_SCENARIO "data/siouxfalls"
#endif

namespace mobility {

struct RunConfig {
    std::string command;
    std::string scenario = MOBILITY_DEFAULT_SCENARIO;
    std::string params;  // empty: scenario default
    std::optional<double> policy_const;
    std::string policy_csv;
    std::optional<int> years;
    std::optional<double> cap;
    std::optional<double> u_max;
    std::uint64_t seed = 1;
    long long budget = BackcastOptions{}.year_budget;
    std::string out = "out";
    std::optional<int> year;  // analyze: one year only
    bool verbose = false;
};

namespace detail {

inline Scenario load_for(const RunConfig& cfg) {
    auto sc = load_scenario(cfg.scenario, cfg.params);
    if (cfg.years) {
        if (*cfg.years < 1) throw ModelError("--years must be at least 1");
        sc.horizon_years = *cfg.years;
    }
    return sc;
}

/// Policy from the flags; constant 700 veh/y when none is given.
inline std::vector<double> policy_for(const RunConfig& cfg, const Scenario& sc) {
    if (!cfg.policy_csv.empty()) {
        auto u = read_policy_csv(cfg.policy_csv);
        if (cfg.years && static_cast<int>(u.size()) != *cfg.years)
            throw InputError(cfg.policy_csv, 0,
                             "policy has " + std::to_string(u.size()) + " rows but --years is " +
                                 std::to_string(*cfg.years));
        return u;
    }
    return constant_policy(cfg.policy_const.value_or(700.0), sc.horizon_years);
}

inline std::string policy_file(const std::vector<double>& u, int base_year) {
    std::string out = "year,u\n";
    for (std::size_t t = 0; t < u.size(); ++t)
        out += std::to_string(base_year + static_cast<int>(t)) + "," + text::format_double(u[t]) + "\n";
    return out;
}

inline int run_forecast(const RunConfig& cfg, std::ostream& out) {
    const MobilityModel model(load_for(cfg));
    const auto policy = policy_for(cfg, model.scenario());
    const auto run = forecast(model, policy);
    const auto base = forecast(model, std::vector<double>(policy.size(), 0.0));
    OutputSet files;
    files.add("trajectory.csv", trajectory_csv(run.records));
    files.add("plot_data.csv", plot_data_csv(run.records, base.records));
    files.commit(cfg.out);
    out << "forecast: " << run.records.size() << " years, total cost " << text::format_double(run.total_cost)
        << " EUR, xi(T) " << text::format_double(run.xi_T) << " t (no-SAV run " << text::format_double(base.xi_T)
        << " t)\n";
    out << "wrote " << cfg.out << "/trajectory.csv, " << cfg.out << "/plot_data.csv\n";
    return 0;
}

inline int run_backcast(const RunConfig& cfg, std::ostream& out) {
    const MobilityModel model(load_for(cfg));
    BackcastProblem pb;
    pb.reference = policy_for(cfg, model.scenario());
    pb.cap = cfg.cap.value_or(0.0);
    pb.options.u_max = cfg.u_max.value_or(model.params().u_max);
    pb.options.seed = cfg.seed;
    pb.options.year_budget = cfg.budget;
    if (cfg.verbose) pb.options.log = [&out](const std::string& l) { out << "  " << l << "\n"; };
    const auto sol = solve_backcast(model, pb);
    const auto cmp = compare_to_reference(sol, pb.reference);
    const auto sol_run = forecast(model, sol.policy);
    const auto ref_run = forecast(model, pb.reference);
    OutputSet files;
    files.add("solution.csv", solution_csv(sol_run, ref_run));
    files.add("policy.csv", policy_file(sol.policy, model.scenario().base_year));
    files.add("comparison.txt", comparison_report(sol, cmp));
    files.commit(cfg.out);
    out << "backcast: cost " << text::format_double(sol.total_cost) << " EUR (" << text::format_double(cmp.cost_delta_pct)
        << " % vs reference), xi(T) " << text::format_double(sol.xi_T) << " t, cap " << text::format_double(sol.cap)
        << " t\n";
    out << "wrote " << cfg.out << "/solution.csv, " << cfg.out << "/policy.csv, " << cfg.out << "/comparison.txt\n";
    return 0;
}

inline int run_analyze(const RunConfig& cfg, std::ostream& out) {
    const MobilityModel model(load_for(cfg));
    const auto policy = policy_for(cfg, model.scenario());
    const auto run = forecast(model, policy);
    const int T = static_cast<int>(policy.size());
    std::vector<YearAnalysis> years;
    if (cfg.year) {
        if (*cfg.year < 1 || *cfg.year > T)
            throw ModelError("--year must lie in 1.." + std::to_string(T) + " (got " + std::to_string(*cfg.year) + ")");
        years.push_back(analyse_year(model, run, *cfg.year));
    } else {
        for (int t = 1; t <= T; ++t) years.push_back(analyse_year(model, run, t));
    }
    OutputSet files;
    files.add("gains.csv", gains_csv(years));
    files.add("loops.csv", loops_csv(years));
    files.add("transfer.csv", transfer_csv(years));
    files.add("analysis.txt", analysis_report(years));
    files.commit(cfg.out);
    out << analysis_report(years);
    out << "wrote " << cfg.out << "/gains.csv, " << cfg.out << "/loops.csv, " << cfg.out << "/transfer.csv, "
        << cfg.out << "/analysis.txt\n";
    return 0;
}

inline int run_validate(const RunConfig& cfg, std::ostream& out) {
    const auto sc = load_for(cfg);
    out << "scenario " << cfg.scenario << ": " << sc.road_network.node_count() << " nodes, "
        << sc.road_network.links.size() << " road links, " << sc.rail_network.links.size() << " rail links on "
        << sc.rail_network.lines.size() << " lines, " << sc.od_count() << " OD pairs\n";
    out << echo_params(sc.params);
    return 0;
}

}  // namespace detail

/// Parses `argv` and runs one command. Returns the exit status; diagnostics
/// go to `err`.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"Mobility system simulator: forecasting, causal-loop analysis and backcasting of SAV fleets"};
    app.require_subcommand(1, 1);

    auto common = [&](CLI::App* c) {
        c->add_option("--scenario", cfg.scenario, "Scenario directory with road_links.csv, rail_links.csv, od.csv")
            ->capture_default_str();
        c->add_option("--params", cfg.params, "Parameter file (key = value); default DIR/default_params.txt");
        c->add_option("--years", cfg.years, "Horizon T in years (default from parameters)");
    };
    auto policy = [&](CLI::App* c) {
        auto* pc = c->add_option("--policy-const", cfg.policy_const, "Constant SAV additions u in veh/y (default 700)");
        auto* pf = c->add_option("--policy-csv", cfg.policy_csv, "Policy CSV with a column u in veh/y, one row per year");
        pc->excludes(pf);
    };
    auto output = [&](CLI::App* c) {
        c->add_option("--out", cfg.out, "Output directory")->capture_default_str();
    };

    auto* fc = app.add_subcommand("forecast", "Simulate a policy; writes trajectory.csv and plot_data.csv");
    common(fc);
    policy(fc);
    output(fc);
    {
        std::string cols = "trajectory.csv columns:";
        for (const auto& c : trajectory_units()) cols += "\n  " + c;
        fc->footer(cols);
    }

    auto* bc = app.add_subcommand("backcast",
                                  "Least-cost SAV schedule under an emissions cap; writes solution.csv, policy.csv, "
                                  "comparison.txt. The policy flags give the reference policy");
    common(bc);
    policy(bc);
    output(bc);
    bc->add_option("--cap", cfg.cap, "Cumulative emissions cap in t CO2 (default: xi(T) of the reference)");
    bc->add_option("--umax", cfg.u_max, "Upper bound on u in veh/y (default from parameters, 2000)");
    bc->add_option("--seed", cfg.seed, "Seed of the multi-start draws")->capture_default_str();
    bc->add_option("--budget", cfg.budget, "Solver budget in simulated model years")->capture_default_str();
    bc->add_flag("--verbose", cfg.verbose, "Print solver progress");

    auto* an = app.add_subcommand("analyze",
                                  "Linearise each year of a forecast; writes gains.csv, loops.csv, transfer.csv, "
                                  "analysis.txt (gains in model units, T in t/y per SAV)");
    common(an);
    policy(an);
    output(an);
    an->add_option("--year", cfg.year, "Analyse only this simulation year (1..T)");

    auto* va = app.add_subcommand("validate", "Check the scenario files and print the parameters with units");
    common(va);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (fc->parsed()) return detail::run_forecast(cfg, out);
        if (bc->parsed()) return detail::run_backcast(cfg, out);
        if (an->parsed()) return detail::run_analyze(cfg, out);
        return detail::run_validate(cfg, out);
    } catch (const ModelError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace mobility
