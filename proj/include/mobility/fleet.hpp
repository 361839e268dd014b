#pragma once

// Vehicle stocks: age-structured private HVs (thermal/electric), the SAV
// fleet, and the rail service derived from rail demand.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "mobility/error.hpp"
#include "mobility/params.hpp"

namespace mobility {

enum Powertrain { kThermal = 0, kElectric = 1 };

struct HVStock {
    std::array<std::array<double, kAgeClasses>, 2> counts{};  // [powertrain][age]

    double total(int powertrain) const {
        double s = 0.0;
        for (double c : counts[static_cast<std::size_t>(powertrain)]) s += c;
        return s;
    }
    double thermal() const { return total(kThermal); }
    double electric() const { return total(kElectric); }
    double total() const { return thermal() + electric(); }
    /// Share of electric vehicles in the fleet; 0 for an empty fleet.
    double electric_share() const {
        const double t = total();
        return t > 0.0 ? electric() / t : 0.0;
    }
};

/// Annual HV vehicle-km: sum over ODs of G_H * distance * working hours.
inline double hv_vkm(const std::vector<double>& G_H, const std::vector<double>& distance, double working_hours) {
    double s = 0.0;
    for (std::size_t k = 0; k < G_H.size(); ++k) s += G_H[k] * distance[k];
    return s * working_hours;
}

/// Total cost of ownership of one new vehicle over the ownership period.
inline double hv_tco(double price, double energy_per_km, const ParamSet& p) {
    return price + energy_per_km * p.M * p.hv_ownership_years;
}

/// Electric share of new purchases. A binary logit on the TCO difference
/// sets the attractiveness of electric cars; the Bass term p + q*phi (phi the
/// electric share of the current fleet) sets how fast buyers adopt it.
inline double electric_purchase_share(double fleet_electric_share, const ParamSet& p) {
    const double tco_t = hv_tco(p.hv_price_thermal, p.hv_energy_thermal, p);
    const double tco_e = hv_tco(p.hv_price_electric, p.hv_energy_electric, p);
    const double sigma = 1.0 / (1.0 + std::exp(-p.hv_tco_sensitivity * (tco_t - tco_e) / 1000.0));
    const double phi = fleet_electric_share;
    const double adoption = (p.bass_p + p.bass_q * phi) * 2.0 * sigma;
    return std::clamp(phi + (1.0 - phi) * adoption, 0.0, 1.0);
}

struct HVStepResult {
    HVStock stock;
    double surviving = 0.0;  // veh after ageing and scrappage
    double required = 0.0;   // veh
    double purchases = 0.0;  // veh
    double electric_share_of_purchases = 0.0;
};

/// One year of HV fleet turnover: age, scrap, then buy what the demand
/// requires beyond the surviving fleet.
inline HVStepResult hv_stock_step(const HVStock& stock, double hv_vkm_demand, const ParamSet& p) {
    if (hv_vkm_demand < 0.0) throw ModelError("hv_stock_step: negative demand");
    HVStepResult r;
    for (std::size_t pt = 0; pt < 2; ++pt) {
        auto& next = r.stock.counts[pt];
        const auto& prev = stock.counts[pt];
        next[0] = 0.0;
        for (std::size_t a = 1; a < static_cast<std::size_t>(kAgeClasses); ++a)
            next[a] = prev[a - 1] * p.hv_survival[a];
    }
    r.surviving = r.stock.total();
    r.required = hv_vkm_demand / p.M;
    r.purchases = std::max(0.0, r.required - r.surviving);
    r.electric_share_of_purchases = electric_purchase_share(stock.electric_share(), p);
    r.stock.counts[kElectric][0] = r.purchases * r.electric_share_of_purchases;
    r.stock.counts[kThermal][0] = r.purchases - r.stock.counts[kElectric][0];
    return r;
}

/// Fleet sized to `hv_vkm_demand` at mileage M, with a geometric age
/// profile (ratio hv_initial_age_ratio) and the initial thermal share.
inline HVStock initial_hv_stock(double hv_vkm_demand, const ParamSet& p) {
    HVStock s;
    const double fleet = hv_vkm_demand / p.M;
    std::array<double, kAgeClasses> w{};
    double total = 0.0;
    for (int a = 0; a < kAgeClasses; ++a) total += (w[static_cast<std::size_t>(a)] = std::pow(p.hv_initial_age_ratio, a));
    for (std::size_t a = 0; a < w.size(); ++a) {
        const double n = fleet * w[a] / total;
        s.counts[kThermal][a] = n * p.hv_initial_thermal_share;
        s.counts[kElectric][a] = n * (1.0 - p.hv_initial_thermal_share);
    }
    return s;
}

/// S_S' = survival * S_S + u.
inline double sav_stock_step(double S_S, double u, double survival_rate) {
    if (u < 0.0) throw ModelError("sav_stock_step: negative fleet addition");
    return survival_rate * S_S + u;
}

struct RailState {
    double S_R = 0.0;  // trains
    double F_R = 0.0;  // trains/h
    double K_R = 0.0;  // pax/h
};

/// Frequency follows rail demand (floored at the minimum service); the
/// fleet covers all lines' round trips plus a reserve.
inline RailState rail_update(double G_R_total, double line_count, double line_length, const ParamSet& p) {
    if (G_R_total < 0.0) throw ModelError("rail_update: negative demand");
    RailState r;
    r.F_R = std::max(p.rail_min_frequency, G_R_total / (p.train_capacity * p.occupancy_rate));
    r.K_R = r.F_R * p.train_capacity;
    const double round_trip_h = 2.0 * line_length / p.commercial_speed;
    // Relative slack so products that are whole numbers up to rounding do not round up.
    const double trains = r.F_R * round_trip_h * line_count * (1.0 + p.rail_reserve_fraction);
    r.S_R = std::ceil(trains * (1.0 - 1e-12));
    return r;
}

}  // namespace mobility
