#include "cascsim/protection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace cascsim {

ShedAmount undervoltage_shed(double load_p_mw, double load_q_mvar, double v_pu,
                             const ProtectionParams& params) {
    ShedAmount shed;
    if (load_p_mw <= 0.0 || v_pu >= params.v_threshold) {
        return shed;
    }
    shed.delta_p_mw = std::min(params.k_shed_mw_per_pu * (params.v_threshold - v_pu), load_p_mw);
    shed.delta_q_mvar = load_q_mvar * shed.delta_p_mw / load_p_mw;
    return shed;
}

ShiftFactorTable ShiftFactorTable::build(const Network& net, const SystemState& state,
                                         const std::vector<Island>& islands) {
    ShiftFactorTable t;
    t.table_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(net.branches().size()),
                                     static_cast<Eigen::Index>(net.buses().size()));
    for (const Island& island : islands) {
        if (!island.energized) {
            continue;
        }
        // Island slack bus: the bus hosting the slack generator.
        std::size_t slack_bus = net.buses().size();
        for (const std::size_t bi : island.bus_indices) {
            for (const std::size_t gi : net.generators_at_bus()[bi]) {
                if (state.gen_in_service[gi] && state.gen_is_slack[gi]) {
                    slack_bus = bi;
                    break;
                }
            }
            if (slack_bus < net.buses().size()) {
                break;
            }
        }
        if (slack_bus >= net.buses().size()) {
            continue;  // no slack: no controllable sensitivities
        }

        // Local numbering without the slack bus.
        std::vector<int> local(net.buses().size(), -1);
        std::vector<std::size_t> order;
        for (const std::size_t bi : island.bus_indices) {
            if (bi == slack_bus) {
                continue;
            }
            local[bi] = static_cast<int>(order.size());
            order.push_back(bi);
        }
        const auto n = static_cast<Eigen::Index>(order.size());
        if (n == 0) {
            continue;  // single-bus island
        }

        Eigen::MatrixXd b_mat = Eigen::MatrixXd::Zero(n, n);
        std::vector<std::size_t> island_branches;
        for (std::size_t li = 0; li < net.branches().size(); ++li) {
            if (!state.branch_in_service[li]) {
                continue;
            }
            const std::size_t f = net.from_index(li);
            const std::size_t to = net.to_index(li);
            const bool f_in = local[f] >= 0 || f == slack_bus;
            const bool t_in = local[to] >= 0 || to == slack_bus;
            if (!f_in || !t_in) {
                continue;
            }
            island_branches.push_back(li);
            const double y = 1.0 / net.branches()[li].reactance_pu;
            if (local[f] >= 0) {
                b_mat(local[f], local[f]) += y;
            }
            if (local[to] >= 0) {
                b_mat(local[to], local[to]) += y;
            }
            if (local[f] >= 0 && local[to] >= 0) {
                b_mat(local[f], local[to]) -= y;
                b_mat(local[to], local[f]) -= y;
            }
        }

        Eigen::PartialPivLU<Eigen::MatrixXd> lu(b_mat);
        const Eigen::MatrixXd x_mat = lu.inverse();
        if (!x_mat.allFinite()) {
            continue;  // degenerate island; leave sensitivities at zero
        }
        // S(branch, bus) = (theta_f - theta_t) / x for a unit injection at
        // the bus; theta columns come straight from the inverse.
        for (const std::size_t li : island_branches) {
            const int lf = local[net.from_index(li)];
            const int lt = local[net.to_index(li)];
            const double inv_x = 1.0 / net.branches()[li].reactance_pu;
            for (Eigen::Index col = 0; col < n; ++col) {
                const double th_f = lf >= 0 ? x_mat(lf, col) : 0.0;
                const double th_t = lt >= 0 ? x_mat(lt, col) : 0.0;
                t.table_(static_cast<Eigen::Index>(li), static_cast<Eigen::Index>(order[col])) =
                    (th_f - th_t) * inv_x;
            }
        }
    }
    return t;
}

namespace {

struct RankedGen {
    std::size_t gen_idx;
    double shift;
};

// Walks the ranked generators, moving each setpoint toward absorbing the
// remaining flow excess; returns the total absolute adjustment applied.
double apply_ranked(const Network& net, SystemState& state, std::vector<RankedGen>& ranked,
                    double& flow_target_mva) {
    double moved = 0.0;
    for (const RankedGen& rg : ranked) {
        if (flow_target_mva >= 0.0) {
            break;
        }
        const double want = flow_target_mva / rg.shift;  // signed setpoint change
        const double cur = state.gen_p_mw[rg.gen_idx];
        const double next = std::clamp(cur + want, 0.0, net.generators()[rg.gen_idx].p_max_mw);
        const double applied = next - cur;
        if (applied == 0.0) {
            continue;
        }
        state.gen_p_mw[rg.gen_idx] = next;
        flow_target_mva -= rg.shift * applied;
        moved += std::abs(applied);
        if (std::getenv("CASCSIM_REDISPATCH_LOG")) {
            std::fprintf(stderr, "    gen %d s=%+.4f applied %+.2f (-> %.2f) remaining %.3f\n",
                         net.generators()[rg.gen_idx].id, rg.shift, applied, next,
                         flow_target_mva);
        }
    }
    return moved;
}

}  // namespace

RedispatchOutcome redispatch_round(const Network& net, SystemState& state,
                                   const PowerFlowSolution& solution,
                                   const std::vector<double>& basis_rating_mva,
                                   const ShiftFactorTable& table,
                                   const ProtectionParams& params) {
    RedispatchOutcome out;

    std::vector<std::size_t> overloaded;
    for (std::size_t li = 0; li < net.branches().size(); ++li) {
        if (state.branch_in_service[li] && solution.flow_mva[li] > basis_rating_mva[li]) {
            overloaded.push_back(li);
        }
    }
    if (overloaded.empty()) {
        return out;
    }
    // Worst relative loading against the nameplate rating goes first.
    std::sort(overloaded.begin(), overloaded.end(), [&](std::size_t a, std::size_t b) {
        const double ra = solution.flow_mva[a] / net.branches()[a].rating_initial_mva;
        const double rb = solution.flow_mva[b] / net.branches()[b].rating_initial_mva;
        if (ra != rb) {
            return ra > rb;
        }
        return net.branches()[a].id < net.branches()[b].id;
    });

    for (const std::size_t li : overloaded) {
        ++out.branches_processed;
        // Desired flow change, scaled up so the linear estimate overshoots
        // the nonlinear response slightly.
        double flow_target = params.eta * (basis_rating_mva[li] - solution.flow_mva[li]);
        if (std::getenv("CASCSIM_REDISPATCH_LOG")) {
            std::fprintf(stderr, "  branch %d flow %.2f basis %.2f target %.3f\n",
                         net.branches()[li].id, solution.flow_mva[li], basis_rating_mva[li],
                         flow_target);
        }

        // Sensitivities are stored for the signed from-to flow; orient them so
        // that a positive factor always means "injection raises the loading".
        const double direction = solution.flow_from_p_mw[li] < 0.0 ? -1.0 : 1.0;

        std::vector<RankedGen> positive;
        std::vector<RankedGen> negative;
        for (std::size_t gi = 0; gi < net.generators().size(); ++gi) {
            if (!state.gen_in_service[gi] || state.gen_is_slack[gi]) {
                continue;
            }
            const double s = direction * table.factor(li, net.bus_index(net.generators()[gi].bus));
            if (std::abs(s) < params.min_shift_factor) {
                continue;  // too little leverage to be worth dispatching
            }
            if (s > 0.0) {
                positive.push_back({gi, s});
            } else {
                negative.push_back({gi, s});
            }
        }
        std::sort(positive.begin(), positive.end(), [&](const RankedGen& a, const RankedGen& b) {
            if (a.shift != b.shift) {
                return a.shift > b.shift;
            }
            return net.generators()[a.gen_idx].id < net.generators()[b.gen_idx].id;
        });
        std::sort(negative.begin(), negative.end(), [&](const RankedGen& a, const RankedGen& b) {
            if (a.shift != b.shift) {
                return a.shift < b.shift;
            }
            return net.generators()[a.gen_idx].id < net.generators()[b.gen_idx].id;
        });

        out.total_adjustment_mw += apply_ranked(net, state, positive, flow_target);
        out.total_adjustment_mw += apply_ranked(net, state, negative, flow_target);
    }
    return out;
}

void disconnect_coupled_shunts(const Network& net, SystemState& state, std::size_t branch_idx) {
    for (const std::size_t si : net.shunts_on_branch()[branch_idx]) {
        if (net.shunts()[si].auto_disconnect) {
            state.shunt_in_service[si] = false;
        }
    }
}

}  // namespace cascsim
