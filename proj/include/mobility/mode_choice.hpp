#pragma once

// Nested logit mode choice: HV and SAV share the auto nest, rail stands
// alone. Demand is split per traveller segment, each with its own choice
// set.

#include <algorithm>
#include <array>
#include <cmath>
#include <initializer_list>
#include <vector>

#include "mobility/error.hpp"

namespace mobility {

enum class Mode { HV = 0, SAV = 1, Rail = 2 };

/// Bit set of available modes.
class ModeSet {
public:
    constexpr ModeSet() = default;
    constexpr ModeSet(std::initializer_list<Mode> modes) {
        for (Mode m : modes) bits_ |= bit(m);
    }
    constexpr bool has(Mode m) const { return (bits_ & bit(m)) != 0; }
    constexpr bool empty() const { return bits_ == 0; }
    constexpr ModeSet without(Mode m) const {
        ModeSet s = *this;
        s.bits_ &= static_cast<unsigned char>(~bit(m));
        return s;
    }

private:
    static constexpr unsigned char bit(Mode m) { return static_cast<unsigned char>(1u << static_cast<int>(m)); }
    unsigned char bits_ = 0;
};

struct UtilitySpec {
    double time_weight = 0.07;   // utils/min
    double value_of_time = 4.0;  // min/EUR
    double nest_lambda = 0.5;    // auto nest scale, (0, 1]
    std::array<double, 3> constant{0.0, 0.0, 0.0};  // per Mode
};

/// U = constant - w * (t_in + t_ae + VOT * (cost_op * distance + cost_ae)).
inline double mode_utility(Mode mode, double t_invehicle, double t_ae, double cost_op, double cost_ae,
                           double distance, const UtilitySpec& spec) {
    const double generalised = t_invehicle + t_ae + spec.value_of_time * (cost_op * distance + cost_ae);
    return spec.constant[static_cast<std::size_t>(mode)] - spec.time_weight * generalised;
}

/// Choice probabilities indexed by Mode; unavailable modes get 0.
inline std::array<double, 3> nested_logit_shares(double U_H, double U_S, double U_R, double lambda,
                                                 ModeSet available) {
    if (available.empty()) throw ModelError("nested_logit_shares: empty choice set");
    if (!(lambda > 0.0 && lambda <= 1.0)) throw ModelError("nested_logit_shares: nest coefficient outside (0, 1]");
    std::array<double, 3> p{0.0, 0.0, 0.0};
    const bool h = available.has(Mode::HV), s = available.has(Mode::SAV), r = available.has(Mode::Rail);
    const bool any_auto = h || s;

    // Lower level within the auto nest.
    double logsum = 0.0;
    if (any_auto) {
        const double a = h ? U_H / lambda : -INFINITY;
        const double b = s ? U_S / lambda : -INFINITY;
        const double top = std::max(a, b);
        const double eh = h ? std::exp(a - top) : 0.0;
        const double es = s ? std::exp(b - top) : 0.0;
        p[0] = eh / (eh + es);
        p[1] = es / (eh + es);
        logsum = lambda * (top + std::log(eh + es));
    }

    // Upper level: auto nest against rail.
    double p_auto = 1.0;
    if (r && any_auto) {
        const double top = std::max(logsum, U_R);
        const double ea = std::exp(logsum - top), er = std::exp(U_R - top);
        p_auto = ea / (ea + er);
    } else if (r) {
        p_auto = 0.0;
    }
    p[0] *= p_auto;
    p[1] *= p_auto;
    p[2] = r ? 1.0 - p_auto : 0.0;
    return p;
}

enum Segment { kChoice = 0, kHVTraveller = 1, kRailTraveller = 2, kSAVTraveller = 3 };

/// Choice set of a segment on an OD with or without rail service. Rail
/// travellers on an OD without rail choose like HV travellers.
inline ModeSet segment_modes(int segment, bool rail_available) {
    switch (segment) {
        case kChoice:
            return rail_available ? ModeSet{Mode::HV, Mode::SAV, Mode::Rail} : ModeSet{Mode::HV, Mode::SAV};
        case kHVTraveller: return {Mode::HV, Mode::SAV};
        case kRailTraveller: return rail_available ? ModeSet{Mode::Rail, Mode::SAV} : ModeSet{Mode::HV, Mode::SAV};
        default: return {Mode::SAV};
    }
}

struct ODUtilities {
    double U_H = 0.0;
    double U_S = 0.0;
    double U_R = 0.0;
    bool rail_available = false;
};

struct ModeSplit {
    std::vector<double> G_H;  // pax/h per OD
    std::vector<double> G_S;
    std::vector<double> G_R;

    explicit ModeSplit(std::size_t n = 0) : G_H(n, 0.0), G_S(n, 0.0), G_R(n, 0.0) {}
    std::size_t size() const { return G_H.size(); }
};

/// Mode shares of one OD aggregated over segments (sum to 1).
inline std::array<double, 3> segment_weighted_shares(const ODUtilities& u, const std::array<double, 4>& x,
                                                     double lambda) {
    std::array<double, 3> total{0.0, 0.0, 0.0};
    for (int seg = 0; seg < 4; ++seg) {
        if (x[static_cast<std::size_t>(seg)] == 0.0) continue;
        const auto p = nested_logit_shares(u.U_H, u.U_S, u.U_R, lambda, segment_modes(seg, u.rail_available));
        for (std::size_t m = 0; m < 3; ++m) total[m] += x[static_cast<std::size_t>(seg)] * p[m];
    }
    return total;
}

/// Splits each OD's demand over modes; conserves demand per OD.
inline ModeSplit split_demand(const std::vector<double>& demand, const std::array<double, 4>& x,
                              const std::vector<ODUtilities>& utilities, double lambda) {
    ModeSplit out(demand.size());
    for (std::size_t k = 0; k < demand.size(); ++k) {
        const auto sh = segment_weighted_shares(utilities[k], x, lambda);
        const double norm = sh[0] + sh[1] + sh[2];
        out.G_H[k] = demand[k] * sh[0] / norm;
        if (utilities[k].rail_available) {
            out.G_S[k] = demand[k] * sh[1] / norm;
            out.G_R[k] = std::max(0.0, demand[k] - out.G_H[k] - out.G_S[k]);
        } else {
            out.G_S[k] = demand[k] - out.G_H[k];
        }
    }
    return out;
}

}  // namespace mobility
