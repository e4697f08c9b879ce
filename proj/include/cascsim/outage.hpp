#pragma once

#include "cascsim/network.hpp"
#include "cascsim/params.hpp"

namespace cascsim {

// Trip probability of a line as a function of its loading ratio R = F / Fd.
// Four segments: a floor below R = 1, a steep exponential ramp to p2 over
// (1, 1+epsilon], a slower exponential ramp to p3 over (1+epsilon, K], and a
// plateau beyond. The exponentials are evaluated as log-linear interpolation
// between the segment anchors, which is algebraically the a*e^(bR) form but
// keeps the anchor values exact at the breakpoints.
double line_trip_probability(double ratio, const OutageParams& params);

// Reactive-power breakpoints of the generator trip curve.
struct GenTripBreakpoints {
    double k_q_lower = 0.0;        // deep under-excitation plateau edge
    double q_lower_minus_eps = 0.0;
    double q_lower = 0.0;
    double q_upper = 0.0;
    double q_upper_plus_eps = 0.0;
    double k_q_upper = 0.0;        // deep over-excitation plateau edge
};

GenTripBreakpoints gen_trip_breakpoints(const Generator& gen, const OutageParams& params);

// Seven-segment analogue of the line curve over reactive output: floor p4
// inside [q_min, q_max], ramps to p5 just outside, to p6 at the deep
// plateaus. A zero q_min collapses the lower ramp (the curve then steps from
// p4 to the sub-zero ramp; the discontinuity mirrors the curve definition).
double generator_trip_probability(double q_mvar, const Generator& gen, const OutageParams& params);

// Accumulated-overload bookkeeping shared by lines and generators. The
// accumulator spans the whole run; the limit is frozen when the violating
// condition first appears, and the mark records one Bernoulli draw per
// violation episode.
struct OverloadTracker {
    bool active = false;
    bool marked = false;
    double mark_probability = 0.0;
    double o_limit = 0.0;
    double accumulated = 0.0;
};

// Overload limit for a line: trips after `seconds` of being `percent` above
// the dynamic rating in effect at overload onset.
double line_overload_limit(double rating_mva, const OutageParams& params);

// Overload limit for a generator, anchored to the violated capability bound.
double gen_overload_limit(double violated_limit_mvar, const OutageParams& params);

// Remaining time to trip for an overloaded line (flow above rating).
double line_trip_time_s(double flow_mva, double rating_mva, const OverloadTracker& tracker);

// Remaining time to trip for a generator outside its reactive band; excess is
// the positive distance to the violated bound.
double gen_trip_time_s(double excess_mvar, const OverloadTracker& tracker);

}  // namespace cascsim
