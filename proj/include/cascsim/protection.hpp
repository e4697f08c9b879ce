#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cascsim/network.hpp"
#include "cascsim/params.hpp"
#include "cascsim/powerflow.hpp"

namespace cascsim {

// Undervoltage shed amounts for one bus: active power proportional to the
// voltage depression (clamped at the remaining load), reactive power scaled
// to preserve the bus power factor.
struct ShedAmount {
    double delta_p_mw = 0.0;
    double delta_q_mvar = 0.0;
};
ShedAmount undervoltage_shed(double load_p_mw, double load_q_mvar, double v_pu,
                             const ProtectionParams& params);

// DC sensitivities of branch flows to bus injections, withdrawn at the
// island slack. One table covers all energized islands; entries across
// islands (or for bus = island slack) are zero.
class ShiftFactorTable {
  public:
    static ShiftFactorTable build(const Network& net, const SystemState& state,
                                  const std::vector<Island>& islands);

    double factor(std::size_t branch_idx, std::size_t bus_idx) const {
        return table_(static_cast<Eigen::Index>(branch_idx), static_cast<Eigen::Index>(bus_idx));
    }

  private:
    Eigen::MatrixXd table_;
};

// One operator pass: branches above their basis rating are processed in
// descending F / F_initial order, positive-shift-factor generators backed
// down first (highest sensitivity first), then negative-shift-factor
// generators raised, each setpoint clamped to [0, p_max] with the shortfall
// spilling to the next unit in the ranking.
struct RedispatchOutcome {
    int branches_processed = 0;
    double total_adjustment_mw = 0.0;  // sum of absolute setpoint changes
};
RedispatchOutcome redispatch_round(const Network& net, SystemState& state,
                                   const PowerFlowSolution& solution,
                                   const std::vector<double>& basis_rating_mva,
                                   const ShiftFactorTable& table, const ProtectionParams& params);

// Takes the auto-disconnect shunts of a just-tripped branch out of service.
void disconnect_coupled_shunts(const Network& net, SystemState& state, std::size_t branch_idx);

}  // namespace cascsim
