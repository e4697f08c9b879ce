#pragma once

#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "cascsim/network.hpp"
#include "cascsim/params.hpp"

namespace cascsim {

struct PowerFlowSolution {
    bool converged = false;
    int iterations = 0;          // worst island
    double max_mismatch_pu = 0.0;

    // Indexed like the Network vectors. De-energized buses carry v = 0.
    std::vector<double> bus_v_pu;
    std::vector<double> bus_theta_rad;
    std::vector<bool> bus_energized;

    // Apparent power per branch in MVA; F is the larger of the two ends.
    // Out-of-service or de-energized branches carry zeros.
    std::vector<double> flow_from_mva;
    std::vector<double> flow_to_mva;
    std::vector<double> flow_mva;
    std::vector<double> flow_from_p_mw;  // signed sending-end active power

    // Per generator. Reactive output is the bus total allocated across the
    // bus's in-service units in proportion to the relevant capability bound.
    std::vector<double> gen_p_mw;
    std::vector<double> gen_q_mvar;

    // Voltage stability index of the largest energized island, +inf when that
    // island has no PQ bus, 0 on a singular reduced Jacobian.
    double vsi = std::numeric_limits<double>::infinity();

    // Reduced Jacobian of the largest energized island and the bus indices
    // (Network order) of its rows, kept for diagnostics and tests.
    Eigen::MatrixXd reduced_jacobian;
    std::vector<std::size_t> reduced_jacobian_buses;
};

// Full Newton-Raphson AC solve over every energized island. Generators hold
// terminal voltage without reactive-power clamping; limit violations feed the
// outage model instead of switching bus types. Returns converged = false if
// any energized island fails to converge (a warm start that stalls is retried
// once from flat before giving up).
PowerFlowSolution solve_power_flow(const Network& net, const SystemState& state,
                                   const std::vector<Island>& islands,
                                   const EngineParams& params);

// min_i 1 / (M^-1)_ii, the determinant-over-adjugate stability index of a
// reduced Jacobian; 0 when M is singular.
double vsi_of_matrix(const Eigen::MatrixXd& m);

}  // namespace cascsim
