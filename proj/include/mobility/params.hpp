#pragma once

// Model parameters and the key = value parameter file format.
//
// Keys use the cost symbols of the model directly (C_S_pu is the SAV purchase
// cost C_S^{pu}, C_H_c_op the HV customer operating cost C_H^{c,op}, ...).
// A parameter file overrides a subset of the built-in defaults; unknown keys
// are rejected.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mobility/error.hpp"
#include "mobility/text.hpp"

namespace mobility {

inline constexpr int kMaxVehicleAge = 30;
inline constexpr int kAgeClasses = kMaxVehicleAge + 1;

/// Logistic cumulative survival with median life `median_life` years.
/// Entry a is the fraction of a cohort that, having just reached age a,
/// survives its last year; entry 0 is 1.
inline std::array<double, kAgeClasses> logistic_survival_table(double median_life, double width) {
    std::array<double, kAgeClasses> out{};
    auto cumulative = [&](double a) { return 1.0 / (1.0 + std::exp((a - median_life) / width)); };
    out[0] = 1.0;
    for (int a = 1; a < kAgeClasses; ++a) out[a] = cumulative(a) / cumulative(a - 1);
    return out;
}

inline std::array<double, kAgeClasses> linear_emission_table(double at_zero, double per_year) {
    std::array<double, kAgeClasses> out{};
    for (int a = 0; a < kAgeClasses; ++a) out[a] = at_zero + per_year * a;
    return out;
}

struct ParamSet {
    // Traveller segments: choice, HV-captive, rail-captive, SAV-captive.
    std::array<double, 4> x_i{0.66, 0.0, 0.34, 0.0};

    // Customer costs used in utilities.
    double C_H_c_ae = 1.4;     // EUR
    double C_H_c_op = 0.0745;  // EUR/km
    double C_R_c_ae = 2.2;     // EUR
    double C_R_c_op = 0.2263;  // EUR/km
    double C_S_c_ae = 2.0;     // EUR, at utilisation 1
    double C_S_c_op = 0.5;     // EUR/km, at utilisation 1

    // Operator costs.
    double C_R_op = 10.0;       // EUR/vkm
    double C_R_fix = 5.4767e7;  // EUR/y
    double C_S_pu = 120000.0;   // EUR/veh
    double C_S_op = 0.2;        // EUR/vkm

    // Volume-delay functions.
    double road_bpr_alpha = 0.15;
    double road_bpr_beta = 4.0;
    double rail_bpr_alpha = 0.30;
    double rail_bpr_beta = 2.0;

    // Offline user equilibrium.
    double ue_relative_gap = 1e-7;
    double ue_max_iterations = 2000;
    double path_share_threshold = 0.01;

    // Following headways (s).
    double h_HH = 1.8;
    double h_SH = 1.4;
    double h_SS = 0.9;

    // Mode choice.
    double value_of_time = 4.0;   // min/EUR
    double time_weight = 0.07;    // utils/min
    double nest_lambda = 0.5;
    double asc_H = 0.0;           // utils
    double asc_S = 1.0;
    double asc_R = 1.5;
    double hv_access_time = 5.0;  // min, parking and walking for HVs

    // SAV level of service.
    double queue_population_factor = 6.0;
    double queue_request_cycle = 1.0;  // h between requests of one customer
    double pickup_overhead = 3.0;      // min
    double wait_cap = 60.0;            // min
    double benchmark_mileage = 20000;  // km/y per SAV
    double elasticity_customer = 0.3;
    double elasticity_operator = 0.5;
    double utilisation_floor = 0.1;
    double cost_ceiling_factor = 2.0;
    double cost_min_fraction = 0.2;
    double filter_tau = 1.0;  // y

    // Rail level of service and stock.
    double walk_speed = 4.5;        // km/h
    double station_spacing = 0.8;   // km
    double commercial_speed = 30.0; // km/h
    double train_capacity = 700.0;  // pax
    double occupancy_rate = 0.7;
    double rail_min_frequency = 4.0;  // veh/h
    double rail_reserve_fraction = 0.1;
    std::optional<double> rail_line_count;   // derived from the rail file when unset
    std::optional<double> rail_line_length;  // km, derived when unset
    double train_purchase_cost = 8e6;  // EUR
    double train_life = 35.0;          // y
    double rail_dep_floor = 1e4;       // vkm/y

    // Vehicle stocks.
    double M = 12000.0;            // km/y annual mileage
    double working_hours = 2000.0; // h/y
    double sav_survival = 0.93;
    double bass_p = 0.01;
    double bass_q = 0.4;
    double hv_price_thermal = 25000.0;   // EUR
    double hv_price_electric = 32000.0;  // EUR
    double hv_energy_thermal = 0.08;     // EUR/km
    double hv_energy_electric = 0.04;    // EUR/km
    double hv_ownership_years = 8.0;
    double hv_tco_sensitivity = 0.3;     // utils per kEUR
    double hv_initial_thermal_share = 0.95;
    double hv_initial_age_ratio = 0.92;
    std::array<double, kAgeClasses> hv_survival = logistic_survival_table(15.0, 3.0);
    std::array<double, kAgeClasses> epsilon_a = linear_emission_table(110.0, 1.5);  // g/km

    // Simulation and policy.
    double horizon_years = 15;
    double base_year = 2025;
    double equilibrium_damping = 0.5;
    double equilibrium_tolerance = 1e-9;
    double equilibrium_max_iterations = 500;
    double u_max = 2000.0;  // veh/y
};

namespace detail {

struct ParamEntry {
    std::string name;
    std::string unit;
    std::function<std::string()> get;
    std::function<void(const std::vector<double>&)> set;
    std::size_t arity = 1;
};

template <std::size_t N>
ParamEntry array_entry(const char* name, const char* unit, std::array<double, N>& a) {
    return {name, unit,
            [&a] {
                std::string s;
                for (std::size_t i = 0; i < N; ++i) s += (i ? ", " : "") + text::format_double(a[i]);
                return s;
            },
            [&a](const std::vector<double>& v) {
                for (std::size_t i = 0; i < N; ++i) a[i] = v[i];
            },
            N};
}

inline ParamEntry scalar_entry(const char* name, const char* unit, double& d) {
    return {name, unit, [&d] { return text::format_double(d); }, [&d](const std::vector<double>& v) { d = v[0]; }, 1};
}

inline ParamEntry optional_entry(const char* name, const char* unit, std::optional<double>& d) {
    return {name, unit, [&d] { return d ? text::format_double(*d) : std::string("derived"); },
            [&d](const std::vector<double>& v) { d = v[0]; }, 1};
}

inline std::vector<ParamEntry> entries(ParamSet& p) {
    return {
        array_entry("x_i", "-", p.x_i),
        scalar_entry("C_H_c_ae", "EUR", p.C_H_c_ae),
        scalar_entry("C_H_c_op", "EUR/km", p.C_H_c_op),
        scalar_entry("C_R_c_ae", "EUR", p.C_R_c_ae),
        scalar_entry("C_R_c_op", "EUR/km", p.C_R_c_op),
        scalar_entry("C_S_c_ae", "EUR", p.C_S_c_ae),
        scalar_entry("C_S_c_op", "EUR/km", p.C_S_c_op),
        scalar_entry("C_R_op", "EUR/vkm", p.C_R_op),
        scalar_entry("C_R_fix", "EUR/y", p.C_R_fix),
        scalar_entry("C_S_pu", "EUR/veh", p.C_S_pu),
        scalar_entry("C_S_op", "EUR/vkm", p.C_S_op),
        scalar_entry("road_bpr_alpha", "-", p.road_bpr_alpha),
        scalar_entry("road_bpr_beta", "-", p.road_bpr_beta),
        scalar_entry("rail_bpr_alpha", "-", p.rail_bpr_alpha),
        scalar_entry("rail_bpr_beta", "-", p.rail_bpr_beta),
        scalar_entry("ue_relative_gap", "-", p.ue_relative_gap),
        scalar_entry("ue_max_iterations", "-", p.ue_max_iterations),
        scalar_entry("path_share_threshold", "-", p.path_share_threshold),
        scalar_entry("h_HH", "s", p.h_HH),
        scalar_entry("h_SH", "s", p.h_SH),
        scalar_entry("h_SS", "s", p.h_SS),
        scalar_entry("value_of_time", "min/EUR", p.value_of_time),
        scalar_entry("time_weight", "1/min", p.time_weight),
        scalar_entry("nest_lambda", "-", p.nest_lambda),
        scalar_entry("asc_H", "-", p.asc_H),
        scalar_entry("asc_S", "-", p.asc_S),
        scalar_entry("asc_R", "-", p.asc_R),
        scalar_entry("hv_access_time", "min", p.hv_access_time),
        scalar_entry("queue_population_factor", "-", p.queue_population_factor),
        scalar_entry("queue_request_cycle", "h", p.queue_request_cycle),
        scalar_entry("pickup_overhead", "min", p.pickup_overhead),
        scalar_entry("wait_cap", "min", p.wait_cap),
        scalar_entry("benchmark_mileage", "km/y", p.benchmark_mileage),
        scalar_entry("elasticity_customer", "-", p.elasticity_customer),
        scalar_entry("elasticity_operator", "-", p.elasticity_operator),
        scalar_entry("utilisation_floor", "-", p.utilisation_floor),
        scalar_entry("cost_ceiling_factor", "-", p.cost_ceiling_factor),
        scalar_entry("cost_min_fraction", "-", p.cost_min_fraction),
        scalar_entry("filter_tau", "y", p.filter_tau),
        scalar_entry("walk_speed", "km/h", p.walk_speed),
        scalar_entry("station_spacing", "km", p.station_spacing),
        scalar_entry("commercial_speed", "km/h", p.commercial_speed),
        scalar_entry("train_capacity", "pax", p.train_capacity),
        scalar_entry("occupancy_rate", "-", p.occupancy_rate),
        scalar_entry("rail_min_frequency", "veh/h", p.rail_min_frequency),
        scalar_entry("rail_reserve_fraction", "-", p.rail_reserve_fraction),
        optional_entry("rail_line_count", "-", p.rail_line_count),
        optional_entry("rail_line_length", "km", p.rail_line_length),
        scalar_entry("train_purchase_cost", "EUR", p.train_purchase_cost),
        scalar_entry("train_life", "y", p.train_life),
        scalar_entry("rail_dep_floor", "vkm/y", p.rail_dep_floor),
        scalar_entry("M", "km/y", p.M),
        scalar_entry("working_hours", "h/y", p.working_hours),
        scalar_entry("sav_survival", "1/y", p.sav_survival),
        scalar_entry("bass_p", "-", p.bass_p),
        scalar_entry("bass_q", "-", p.bass_q),
        scalar_entry("hv_price_thermal", "EUR", p.hv_price_thermal),
        scalar_entry("hv_price_electric", "EUR", p.hv_price_electric),
        scalar_entry("hv_energy_thermal", "EUR/km", p.hv_energy_thermal),
        scalar_entry("hv_energy_electric", "EUR/km", p.hv_energy_electric),
        scalar_entry("hv_ownership_years", "y", p.hv_ownership_years),
        scalar_entry("hv_tco_sensitivity", "1/kEUR", p.hv_tco_sensitivity),
        scalar_entry("hv_initial_thermal_share", "-", p.hv_initial_thermal_share),
        scalar_entry("hv_initial_age_ratio", "-", p.hv_initial_age_ratio),
        array_entry("hv_survival", "-", p.hv_survival),
        array_entry("epsilon_a", "g/km", p.epsilon_a),
        scalar_entry("horizon_years", "y", p.horizon_years),
        scalar_entry("base_year", "y", p.base_year),
        scalar_entry("equilibrium_damping", "-", p.equilibrium_damping),
        scalar_entry("equilibrium_tolerance", "-", p.equilibrium_tolerance),
        scalar_entry("equilibrium_max_iterations", "-", p.equilibrium_max_iterations),
        scalar_entry("u_max", "veh/y", p.u_max),
    };
}

}  // namespace detail

/// Checks the ParamSet invariants; throws InputError naming the offending key.
inline void validate(const ParamSet& p, const std::string& source = "parameters") {
    auto fail = [&](const std::string& what) { throw InputError(source, 0, what); };
    double sum = 0.0;
    for (double x : p.x_i) {
        if (x < 0.0) fail("x_i entries must be non-negative");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9) fail("x_i must sum to 1 (got " + text::format_double(sum) + ")");

    const std::pair<const char*, double> non_negative[] = {
        {"C_H_c_ae", p.C_H_c_ae}, {"C_H_c_op", p.C_H_c_op}, {"C_R_c_ae", p.C_R_c_ae}, {"C_R_c_op", p.C_R_c_op},
        {"C_S_c_ae", p.C_S_c_ae}, {"C_S_c_op", p.C_S_c_op}, {"C_R_op", p.C_R_op},     {"C_R_fix", p.C_R_fix},
        {"C_S_pu", p.C_S_pu},     {"C_S_op", p.C_S_op},     {"elasticity_customer", p.elasticity_customer},
        {"elasticity_operator", p.elasticity_operator},     {"train_purchase_cost", p.train_purchase_cost},
        {"rail_reserve_fraction", p.rail_reserve_fraction}, {"hv_access_time", p.hv_access_time},
        {"pickup_overhead", p.pickup_overhead},             {"bass_p", p.bass_p}, {"bass_q", p.bass_q},
        {"road_bpr_alpha", p.road_bpr_alpha},               {"rail_bpr_alpha", p.rail_bpr_alpha},
    };
    for (const auto& [name, v] : non_negative)
        if (!(v >= 0.0)) fail(std::string(name) + " must be non-negative");

    const std::pair<const char*, double> positive[] = {
        {"value_of_time", p.value_of_time},   {"time_weight", p.time_weight},       {"h_HH", p.h_HH},
        {"h_SH", p.h_SH},                     {"h_SS", p.h_SS},                     {"wait_cap", p.wait_cap},
        {"benchmark_mileage", p.benchmark_mileage}, {"filter_tau", p.filter_tau}, {"walk_speed", p.walk_speed},
        {"commercial_speed", p.commercial_speed},   {"train_capacity", p.train_capacity},
        {"occupancy_rate", p.occupancy_rate},       {"rail_min_frequency", p.rail_min_frequency},
        {"train_life", p.train_life},               {"rail_dep_floor", p.rail_dep_floor}, {"M", p.M},
        {"working_hours", p.working_hours},         {"queue_population_factor", p.queue_population_factor},
        {"queue_request_cycle", p.queue_request_cycle}, {"utilisation_floor", p.utilisation_floor},
        {"cost_ceiling_factor", p.cost_ceiling_factor}, {"horizon_years", p.horizon_years},
        {"u_max", p.u_max},                         {"equilibrium_tolerance", p.equilibrium_tolerance},
        {"road_bpr_beta", p.road_bpr_beta},         {"rail_bpr_beta", p.rail_bpr_beta},
    };
    for (const auto& [name, v] : positive)
        if (!(v > 0.0)) fail(std::string(name) + " must be positive");

    if (!(p.nest_lambda > 0.0 && p.nest_lambda <= 1.0)) fail("nest_lambda must lie in (0, 1]");
    if (!(p.h_SS <= p.h_SH && p.h_SH <= p.h_HH)) fail("headways must satisfy h_SS <= h_SH <= h_HH");
    if (!(p.sav_survival >= 0.0 && p.sav_survival <= 1.0)) fail("sav_survival must lie in [0, 1]");
    if (!(p.equilibrium_damping > 0.0 && p.equilibrium_damping <= 1.0)) fail("equilibrium_damping must lie in (0, 1]");
    if (!(p.cost_min_fraction >= 0.0 && p.cost_min_fraction <= 1.0)) fail("cost_min_fraction must lie in [0, 1]");
    if (!(p.hv_initial_thermal_share >= 0.0 && p.hv_initial_thermal_share <= 1.0))
        fail("hv_initial_thermal_share must lie in [0, 1]");
    if (!(p.elasticity_operator >= p.elasticity_customer))
        fail("elasticity_operator must not be below elasticity_customer");
    for (double s : p.hv_survival)
        if (!(s >= 0.0 && s <= 1.0)) fail("hv_survival entries must lie in [0, 1]");
    for (double e : p.epsilon_a)
        if (!(e >= 0.0)) fail("epsilon_a entries must be non-negative");
    if (std::floor(p.horizon_years) != p.horizon_years) fail("horizon_years must be an integer");
    if (p.rail_line_count && !(*p.rail_line_count > 0.0)) fail("rail_line_count must be positive");
    if (p.rail_line_length && !(*p.rail_line_length > 0.0)) fail("rail_line_length must be positive");
}

/// Applies `key = value[, value...]` lines from `content` on top of `base`.
inline ParamSet parse_params(const std::string& content, const std::string& source, ParamSet base = {}) {
    auto table = detail::entries(base);
    std::istringstream in(content);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto body = std::string_view(line);
        if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
        body = text::trim(body);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) throw InputError(source, line_no, "expected 'key = value'");
        const auto key = text::trim(body.substr(0, eq));
        const auto fields = text::split(body.substr(eq + 1), ',');

        auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.name == key; });
        if (it == table.end()) throw InputError(source, line_no, "unknown parameter '" + std::string(key) + "'");
        if (fields.size() != it->arity)
            throw InputError(source, line_no,
                             "parameter '" + it->name + "' expects " + std::to_string(it->arity) + " value(s)");
        std::vector<double> values;
        for (const auto f : fields) {
            double v = 0.0;
            if (!text::parse_double(f, v) || !std::isfinite(v))
                throw InputError(source, line_no, "malformed value for '" + it->name + "'");
            values.push_back(v);
        }
        it->set(values);
    }
    return base;
}

inline ParamSet load_params(const std::string& path, ParamSet base = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(path, 0, "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_params(ss.str(), path, std::move(base));
}

/// One `key = value  # unit` line per parameter, in declaration order.
inline std::string echo_params(ParamSet p) {
    std::string out;
    for (const auto& e : detail::entries(p)) out += e.name + " = " + e.get() + "  # " + e.unit + "\n";
    return out;
}

}  // namespace mobility
