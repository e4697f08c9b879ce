#include "cascsim/weather.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace cascsim {

LoadCurve LoadCurve::calibrate(double anchor_ratio) {
    if (anchor_ratio <= 1.0) {
        throw std::invalid_argument("load curve anchor ratio must exceed 1");
    }
    // Four linear conditions pin the cubic: unit load at both references, a
    // stationary point at the curve minimum, and the anchor multiplier at
    // t_ref_high + 10.
    const double t_anchor = kTempRefHighC + 10.0;
    Eigen::Matrix4d m;
    Eigen::Vector4d rhs;
    const auto value_row = [](double t) {
        return Eigen::RowVector4d(t * t * t, t * t, t, 1.0);
    };
    m.row(0) = value_row(kTempRefLowC);
    m.row(1) = value_row(kTempRefHighC);
    m.row(2) = Eigen::RowVector4d(3.0 * kTempMinC * kTempMinC, 2.0 * kTempMinC, 1.0, 0.0);
    m.row(3) = value_row(t_anchor);
    rhs << 1.0, 1.0, 0.0, anchor_ratio;

    Eigen::FullPivLU<Eigen::Matrix4d> lu(m);
    if (!lu.isInvertible()) {
        throw std::runtime_error("load curve constraint system is singular");
    }
    const Eigen::Vector4d c = lu.solve(rhs);
    LoadCurve curve;
    curve.a3_ = c[0];
    curve.a2_ = c[1];
    curve.a1_ = c[2];
    curve.a0_ = c[3];
    return curve;
}

TemperatureField TemperatureField::build(const Network& net, const GeoRect& area, double base_c,
                                         double delta_c) {
    TemperatureField f;
    f.area = area;
    f.base_c = base_c;
    f.delta_c = delta_c;
    const auto& buses = net.buses();
    f.bus_inside.resize(buses.size());
    f.bus_temp_c.resize(buses.size());
    for (std::size_t i = 0; i < buses.size(); ++i) {
        const bool inside = area.contains(buses[i].position);
        f.bus_inside[i] = inside;
        f.bus_temp_c[i] = base_c + (inside ? delta_c : 0.0);
    }
    const auto& branches = net.branches();
    f.branch_fraction.resize(branches.size());
    f.branch_temp_c.resize(branches.size());
    for (std::size_t li = 0; li < branches.size(); ++li) {
        const GeoPoint& a = buses[net.from_index(li)].position;
        const GeoPoint& b = buses[net.to_index(li)].position;
        const double frac = crossing_fraction(a, b, area);
        f.branch_fraction[li] = frac;
        f.branch_temp_c[li] = base_c + frac * delta_c;
    }
    return f;
}

LoadChangeResult apply_load_change(const Network& net, SystemState& state,
                                   const TemperatureField& field, const LoadCurve& curve,
                                   const WeatherParams& params) {
    LoadChangeResult res;
    const bool heat = params.scenario_direction == ScenarioDirection::heat;
    for (std::size_t i = 0; i < net.buses().size(); ++i) {
        if (!field.bus_inside[i]) {
            continue;
        }
        const Bus& bus = net.buses()[i];
        if (bus.p_load_nominal_mw <= 0.0) {
            continue;
        }
        const double temp = field.bus_temp_c[i];
        const double p_new = curve(temp) * bus.p_load_nominal_mw;
        const double dtemp = temp - field.base_c;
        double pf = heat ? bus.pf_nominal() - params.pf_slope * dtemp
                         : bus.pf_nominal() + params.pf_slope * dtemp;
        if (pf < 0.5) {
            pf = 0.5;
            ++res.pf_clamp_warnings;
        }
        if (pf > 1.0) {
            pf = 1.0;
            ++res.pf_clamp_warnings;
        }
        res.delta_p_mw += p_new - state.load_p_mw[i];
        state.load_p_mw[i] = p_new;
        state.load_q_mvar[i] = p_new * std::tan(std::acos(pf));
    }
    return res;
}

DynamicRatingModel::DynamicRatingModel(const Network& net, const std::vector<double>& v0_pu,
                                       double base_temp_c, double slope_ka_per_c)
    : net_(&net), slope_(slope_ka_per_c) {
    const auto& branches = net.branches();
    c_.resize(branches.size());
    for (std::size_t li = 0; li < branches.size(); ++li) {
        const Branch& br = branches[li];
        const double v0 = std::max(v0_pu[li], 1e-6);
        c_[li] = br.rating_initial_mva / (br.rated_kv * v0) + slope_ * base_temp_c;
    }
}

double DynamicRatingModel::rating_mva(std::size_t branch_idx, double line_temp_c, double v_pu,
                                      double alpha) const {
    const Branch& br = net_->branches()[branch_idx];
    const double rating = alpha * br.rated_kv * v_pu * (-slope_ * line_temp_c + c_[branch_idx]);
    return std::max(rating, 0.0);
}

double redistribute_generation(const Network& net, SystemState& state, double delta_p_mw) {
    if (delta_p_mw == 0.0) {
        return 0.0;
    }
    double total_reserve = 0.0;
    for (std::size_t gi = 0; gi < net.generators().size(); ++gi) {
        if (!state.gen_in_service[gi] || state.gen_is_slack[gi]) {
            continue;
        }
        total_reserve += std::max(net.generators()[gi].p_max_mw - state.gen_p_mw[gi], 0.0);
    }
    if (total_reserve <= 0.0) {
        return delta_p_mw;  // nothing controllable; the slack carries it all
    }
    double unplaced = 0.0;
    for (std::size_t gi = 0; gi < net.generators().size(); ++gi) {
        if (!state.gen_in_service[gi] || state.gen_is_slack[gi]) {
            continue;
        }
        const double reserve = std::max(net.generators()[gi].p_max_mw - state.gen_p_mw[gi], 0.0);
        const double increment = delta_p_mw * reserve / total_reserve;
        const double target = state.gen_p_mw[gi] + increment;
        const double clamped = std::clamp(target, 0.0, net.generators()[gi].p_max_mw);
        unplaced += target - clamped;
        state.gen_p_mw[gi] = clamped;
    }
    return unplaced;
}

}  // namespace cascsim
