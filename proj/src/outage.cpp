#include "cascsim/outage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cascsim {

namespace {

// exp-space interpolation: returns the log-linear value between (x0, y0) and
// (x1, y1) at x, with exact endpoint values.
double log_lerp(double x, double x0, double y0, double x1, double y1) {
    if (x == x0) {
        return y0;
    }
    if (x == x1) {
        return y1;
    }
    const double t = (x - x0) / (x1 - x0);
    if (y0 <= 0.0 || y1 <= 0.0) {
        // Degenerate anchors (a disabled floor): fall back to a linear ramp,
        // which stays monotone and hits both endpoints.
        return y0 + t * (y1 - y0);
    }
    return std::exp(std::log(y0) + t * (std::log(y1) - std::log(y0)));
}

}  // namespace

double line_trip_probability(double ratio, const OutageParams& p) {
    if (ratio <= 1.0) {
        return p.p1;
    }
    const double ramp_end = 1.0 + p.epsilon;
    if (ratio <= ramp_end) {
        return log_lerp(ratio, 1.0, p.p1, ramp_end, p.p2);
    }
    if (ratio <= p.K) {
        return log_lerp(ratio, ramp_end, p.p2, p.K, p.p3);
    }
    return p.p3;
}

GenTripBreakpoints gen_trip_breakpoints(const Generator& gen, const OutageParams& p) {
    GenTripBreakpoints bp;
    bp.q_lower = gen.q_min_mvar;
    bp.q_upper = gen.q_max_mvar;
    const double eps_lower = -0.01 * gen.q_min_mvar;  // positive when q_min < 0
    const double eps_upper = 0.01 * gen.q_max_mvar;
    bp.q_lower_minus_eps = bp.q_lower - eps_lower;
    bp.q_upper_plus_eps = bp.q_upper + eps_upper;
    bp.k_q_lower = gen.q_min_mvar < 0.0 ? p.k_q_factor * gen.q_min_mvar : -0.5;
    bp.k_q_upper = gen.q_max_mvar > 0.0 ? p.k_q_factor * gen.q_max_mvar
                                        : gen.q_max_mvar + 0.5;
    return bp;
}

double generator_trip_probability(double q, const Generator& gen, const OutageParams& p) {
    const GenTripBreakpoints bp = gen_trip_breakpoints(gen, p);
    if (q <= bp.k_q_lower) {
        return p.p6;
    }
    if (q >= bp.q_lower && q <= bp.q_upper) {
        return p.p4;
    }
    if (q < bp.q_lower) {
        if (q > bp.q_lower_minus_eps) {
            return log_lerp(q, bp.q_lower_minus_eps, p.p5, bp.q_lower, p.p4);
        }
        return log_lerp(q, bp.k_q_lower, p.p6, bp.q_lower_minus_eps, p.p5);
    }
    if (q >= bp.k_q_upper) {
        return p.p6;
    }
    if (q < bp.q_upper_plus_eps) {
        return log_lerp(q, bp.q_upper, p.p4, bp.q_upper_plus_eps, p.p5);
    }
    return log_lerp(q, bp.q_upper_plus_eps, p.p5, bp.k_q_upper, p.p6);
}

double line_overload_limit(double rating_mva, const OutageParams& p) {
    return p.line_overload_calibration.seconds * (p.line_overload_calibration.percent / 100.0) *
           rating_mva;
}

double gen_overload_limit(double violated_limit_mvar, const OutageParams& p) {
    return p.gen_overload_calibration.seconds * (p.gen_overload_calibration.percent / 100.0) *
           std::abs(violated_limit_mvar);
}

double line_trip_time_s(double flow_mva, double rating_mva, const OverloadTracker& tracker) {
    const double excess = flow_mva - rating_mva;
    if (excess <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return std::max((tracker.o_limit - tracker.accumulated) / excess, 0.0);
}

double gen_trip_time_s(double excess_mvar, const OverloadTracker& tracker) {
    if (excess_mvar <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return std::max((tracker.o_limit - tracker.accumulated) / excess_mvar, 0.0);
}

}  // namespace cascsim
