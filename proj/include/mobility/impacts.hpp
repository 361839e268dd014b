#pragma once

// Operator costs and tailpipe emissions.

#include <algorithm>

#include "mobility/error.hpp"
#include "mobility/fleet.hpp"
#include "mobility/level_of_service.hpp"
#include "mobility/params.hpp"

namespace mobility {

struct ImpactRecord {
    double C_S = 0.0;    // EUR/y
    double C_R = 0.0;    // EUR/y
    double E = 0.0;      // t/y
    double xi = 0.0;     // t, cumulative
    double D_S = 0.0;    // vkm/y
    double D_R = 0.0;    // train-km/y
    double C_R_dep = 0.0;  // EUR/vkm
};

/// C_S = C_S_op * f_op(U) * D_S + u * C_S_pu with the operator elasticity.
inline double sav_operator_cost(double D_S, double u, double U, const ParamSet& p) {
    if (D_S < 0.0 || u < 0.0 || U < 0.0) throw ModelError("sav_operator_cost: negative input");
    const double f =
        utilisation_factor(U, p.elasticity_operator, p.utilisation_floor, p.cost_min_fraction, p.cost_ceiling_factor);
    return p.C_S_op * f * D_S + u * p.C_S_pu;
}

struct RailCost {
    double total = 0.0;  // EUR/y
    double dep = 0.0;    // EUR/vkm
};

inline RailCost rail_operator_cost(double D_R, double S_R, const ParamSet& p) {
    if (D_R < 0.0 || S_R < 0.0) throw ModelError("rail_operator_cost: negative input");
    RailCost c;
    c.dep = S_R * p.train_purchase_cost / (p.train_life * std::max(D_R, p.rail_dep_floor));
    c.total = (p.C_R_op + c.dep) * D_R + p.C_R_fix;
    return c;
}

/// Tailpipe CO2 of the thermal stock, t/y.
inline double emissions(const HVStock& stock, const std::array<double, kAgeClasses>& eps, double M) {
    double g = 0.0;
    for (std::size_t a = 0; a < eps.size(); ++a) g += eps[a] * stock.counts[kThermal][a];
    return g * M / 1e6;
}

inline double accumulate(double xi, double E, double dt = 1.0) {
    if (E < 0.0) throw ModelError("accumulate: negative emissions");
    return xi + E * dt;
}

}  // namespace mobility
