#pragma once

// Road capacity under mixed HV/SAV traffic, from average following headways.

#include "mobility/error.hpp"
#include "mobility/params.hpp"

namespace mobility {

struct HeadwaySet {
    double h_HH = 1.8;  // s, human follower (any leader)
    double h_SH = 1.4;  // s, SAV behind HV
    double h_SS = 0.9;  // s, SAV behind SAV

    static HeadwaySet from(const ParamSet& p) { return {p.h_HH, p.h_SH, p.h_SS}; }
};

/// Mean headway under random mixing with SAV flow share x.
inline double mean_headway(double x, const HeadwaySet& h) {
    return (1.0 - x) * h.h_HH + x * ((1.0 - x) * h.h_SH + x * h.h_SS);
}

/// Link capacity K0 * h_HH / mean headway; x = 0 without flow.
inline double mixed_capacity(double q_S, double q_H, double K0, const HeadwaySet& h) {
    if (q_S < 0.0 || q_H < 0.0) throw ModelError("mixed_capacity: negative flow");
    if (!(K0 > 0.0)) throw ModelError("mixed_capacity: base capacity must be positive");
    const double total = q_S + q_H;
    const double x = total > 0.0 ? q_S / total : 0.0;
    return K0 * h.h_HH / mean_headway(x, h);
}

}  // namespace mobility
