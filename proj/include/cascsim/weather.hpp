#pragma once

#include <string>
#include <vector>

#include "cascsim/geo.hpp"
#include "cascsim/network.hpp"
#include "cascsim/params.hpp"

namespace cascsim {

// Cubic load-temperature response, normalized to 1 at both reference
// temperatures and anchored by the load multiplier 10 C above the high
// reference. The curve has its minimum near 18.5 C, matching the U-shape of
// temperature-sensitive demand.
class LoadCurve {
  public:
    static LoadCurve calibrate(double anchor_ratio);

    double operator()(double temp_c) const {
        return ((a3_ * temp_c + a2_) * temp_c + a1_) * temp_c + a0_;
    }
    double derivative(double temp_c) const {
        return (3.0 * a3_ * temp_c + 2.0 * a2_) * temp_c + a1_;
    }

  private:
    double a0_ = 0.0;
    double a1_ = 0.0;
    double a2_ = 0.0;
    double a3_ = 0.0;
};

// Piecewise-constant temperature field: base everywhere, base + delta inside
// the disturbance rectangle. Line temperatures are length-weighted by the
// fraction of the line inside the rectangle.
struct TemperatureField {
    GeoRect area;
    double base_c = kTempRefHighC;
    double delta_c = 0.0;

    std::vector<bool> bus_inside;          // per bus index
    std::vector<double> bus_temp_c;        // per bus index
    std::vector<double> branch_fraction;   // per branch index, d1/D
    std::vector<double> branch_temp_c;     // per branch index

    static TemperatureField build(const Network& net, const GeoRect& area, double base_c,
                                  double delta_c);
};

// Scales loads and recomputes reactive power for every bus inside the
// disturbed area. Power factors outside (0.5, 1] are clamped to the floor and
// counted in pf_clamp_warnings.
struct LoadChangeResult {
    double delta_p_mw = 0.0;  // total active-load increase inside the area
    int pf_clamp_warnings = 0;
};
LoadChangeResult apply_load_change(const Network& net, SystemState& state,
                                   const TemperatureField& field, const LoadCurve& curve,
                                   const WeatherParams& params);

// Temperature- and voltage-dependent transfer limit. The constant c is frozen
// from the pre-disturbance solve so the rating reduces to the initial one at
// base temperature and base voltage.
class DynamicRatingModel {
  public:
    // v0 per branch: mean endpoint voltage magnitude of the base solve.
    DynamicRatingModel(const Network& net, const std::vector<double>& v0_pu, double base_temp_c,
                       double slope_ka_per_c);

    // alpha is the vegetation factor in (0, 1].
    double rating_mva(std::size_t branch_idx, double line_temp_c, double v_pu,
                      double alpha) const;

    double frozen_c(std::size_t branch_idx) const { return c_[branch_idx]; }

  private:
    const Network* net_;
    std::vector<double> c_;
    double slope_;
};

// Spreads the area's load growth across in-service non-slack generators in
// proportion to remaining capacity, clamping at p_max. Returns the share that
// could not be placed (absorbed by the slack).
double redistribute_generation(const Network& net, SystemState& state, double delta_p_mw);

}  // namespace cascsim
