#include "cascsim/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace cascsim {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using cplx = std::complex<double>;

enum class NodeRole { slack, pv, pq };

// One island prepared for a Newton solve: local indexing, admittance matrix,
// specified injections, and role assignment.
struct IslandProblem {
    std::vector<std::size_t> buses;       // network bus indices, local order
    std::vector<int> local_of_bus;        // -1 if not in island (sized to all buses)
    std::vector<NodeRole> role;
    std::vector<double> p_spec_pu;        // net specified injection
    std::vector<double> q_spec_pu;
    std::vector<double> v_setpoint;       // for slack and pv nodes
    Eigen::MatrixXcd ybus;
    int slack_local = -1;
    std::vector<int> theta_vars;          // local bus -> position among theta unknowns (-1 none)
    std::vector<int> v_vars;              // local bus -> position among V unknowns (-1 none)
    std::vector<std::size_t> pq_buses;    // network indices of PQ buses, local order
};

IslandProblem build_problem(const Network& net, const SystemState& state, const Island& island) {
    IslandProblem pr;
    pr.buses = island.bus_indices;
    pr.local_of_bus.assign(net.buses().size(), -1);
    for (std::size_t k = 0; k < pr.buses.size(); ++k) {
        pr.local_of_bus[pr.buses[k]] = static_cast<int>(k);
    }
    const std::size_t n = pr.buses.size();
    pr.ybus = Eigen::MatrixXcd::Zero(n, n);

    for (std::size_t li = 0; li < net.branches().size(); ++li) {
        if (!state.branch_in_service[li]) {
            continue;
        }
        const int f = pr.local_of_bus[net.from_index(li)];
        const int t = pr.local_of_bus[net.to_index(li)];
        if (f < 0 || t < 0) {
            continue;  // branch lives in another island
        }
        const Branch& br = net.branches()[li];
        const cplx y = 1.0 / cplx(br.resistance_pu, br.reactance_pu);
        const cplx ysh(0.0, br.charging_pu / 2.0);
        pr.ybus(f, f) += y + ysh;
        pr.ybus(t, t) += y + ysh;
        pr.ybus(f, t) -= y;
        pr.ybus(t, f) -= y;
    }
    // Shunts attach at their bus whenever in service; the engine removes
    // auto-disconnect shunts together with their branch.
    for (std::size_t si = 0; si < net.shunts().size(); ++si) {
        if (!state.shunt_in_service[si]) {
            continue;
        }
        const int at = pr.local_of_bus[net.shunt_bus(si)];
        if (at >= 0) {
            pr.ybus(at, at) += cplx(0.0, net.shunts()[si].q_mvar / kBaseMva);
        }
    }

    pr.role.assign(n, NodeRole::pq);
    pr.p_spec_pu.assign(n, 0.0);
    pr.q_spec_pu.assign(n, 0.0);
    pr.v_setpoint.assign(n, 1.0);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t bi = pr.buses[k];
        double gen_p = 0.0;
        bool has_gen = false;
        bool has_slack = false;
        double vset = 1.0;
        bool vset_taken = false;
        for (const std::size_t gi : net.generators_at_bus()[bi]) {
            if (!state.gen_in_service[gi]) {
                continue;
            }
            has_gen = true;
            if (!vset_taken) {
                vset = net.generators()[gi].v_setpoint_pu;
                vset_taken = true;
            }
            if (state.gen_is_slack[gi]) {
                has_slack = true;
            } else {
                gen_p += state.gen_p_mw[gi];
            }
        }
        pr.p_spec_pu[k] = (gen_p - state.load_p_mw[bi]) / kBaseMva;
        pr.q_spec_pu[k] = -state.load_q_mvar[bi] / kBaseMva;
        pr.v_setpoint[k] = vset;
        if (has_slack) {
            pr.role[k] = NodeRole::slack;
            pr.slack_local = static_cast<int>(k);
        } else if (has_gen) {
            pr.role[k] = NodeRole::pv;
        }
    }

    pr.theta_vars.assign(n, -1);
    pr.v_vars.assign(n, -1);
    int nt = 0;
    int nv = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (pr.role[k] != NodeRole::slack) {
            pr.theta_vars[k] = nt++;
        }
        if (pr.role[k] == NodeRole::pq) {
            pr.v_vars[k] = nv++;
            pr.pq_buses.push_back(pr.buses[k]);
        }
    }
    return pr;
}

struct NewtonOutcome {
    bool converged = false;
    int iterations = 0;
    double max_mismatch = std::numeric_limits<double>::infinity();
    VectorXd v;
    VectorXd theta;
    // Final-iteration Jacobian blocks for the stability index:
    // rows/cols over [theta unknowns | V unknowns].
    MatrixXd j_ptheta;
    MatrixXd j_pv;
    MatrixXd j_qtheta;
    MatrixXd j_qv;
};

// Computes injections for the current voltage estimate.
void calc_injections(const IslandProblem& pr, const VectorXd& v, const VectorXd& theta,
                     VectorXd& p, VectorXd& q) {
    const auto n = static_cast<Eigen::Index>(pr.buses.size());
    p.setZero(n);
    q.setZero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double pi = 0.0;
        double qi = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const cplx y = pr.ybus(i, j);
            if (y == cplx(0.0, 0.0)) {
                continue;
            }
            const double dth = theta[i] - theta[j];
            const double c = std::cos(dth);
            const double s = std::sin(dth);
            pi += v[j] * (y.real() * c + y.imag() * s);
            qi += v[j] * (y.real() * s - y.imag() * c);
        }
        p[i] = v[i] * pi;
        q[i] = v[i] * qi;
    }
}

NewtonOutcome newton_solve(const IslandProblem& pr, VectorXd v, VectorXd theta,
                           const EngineParams& params, bool keep_jacobian) {
    const auto n = static_cast<Eigen::Index>(pr.buses.size());
    int n_theta = 0;
    int n_v = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
        n_theta += pr.theta_vars[k] >= 0 ? 1 : 0;
        n_v += pr.v_vars[k] >= 0 ? 1 : 0;
    }
    NewtonOutcome out;

    VectorXd p_calc(n);
    VectorXd q_calc(n);
    const int n_unknown = n_theta + n_v;
    MatrixXd jac(n_unknown, n_unknown);
    VectorXd rhs(n_unknown);

    const auto assemble_jacobian = [&]() {
        jac.setZero();
        for (Eigen::Index i = 0; i < n; ++i) {
            const int pr_row = pr.theta_vars[i];
            const int qr_row = pr.v_vars[i];
            if (pr_row < 0 && qr_row < 0) {
                continue;
            }
            for (Eigen::Index j = 0; j < n; ++j) {
                const int tc = pr.theta_vars[j];
                const int vc = pr.v_vars[j];
                if (tc < 0 && vc < 0) {
                    continue;
                }
                const cplx y = pr.ybus(i, j);
                double dp_dth;
                double dp_dv;
                double dq_dth;
                double dq_dv;
                if (i == j) {
                    dp_dth = -q_calc[i] - y.imag() * v[i] * v[i];
                    dp_dv = p_calc[i] / v[i] + y.real() * v[i];
                    dq_dth = p_calc[i] - y.real() * v[i] * v[i];
                    dq_dv = q_calc[i] / v[i] - y.imag() * v[i];
                } else {
                    if (y == cplx(0.0, 0.0)) {
                        continue;
                    }
                    const double dth = theta[i] - theta[j];
                    const double c = std::cos(dth);
                    const double s = std::sin(dth);
                    const double gc_bs = y.real() * c + y.imag() * s;
                    const double gs_bc = y.real() * s - y.imag() * c;
                    dp_dth = v[i] * v[j] * gs_bc;
                    dp_dv = v[i] * gc_bs;
                    dq_dth = -v[i] * v[j] * gc_bs;
                    dq_dv = v[i] * gs_bc;
                }
                if (pr_row >= 0 && tc >= 0) {
                    jac(pr_row, tc) = dp_dth;
                }
                if (pr_row >= 0 && vc >= 0) {
                    jac(pr_row, n_theta + vc) = dp_dv;
                }
                if (qr_row >= 0 && tc >= 0) {
                    jac(n_theta + qr_row, tc) = dq_dth;
                }
                if (qr_row >= 0 && vc >= 0) {
                    jac(n_theta + qr_row, n_theta + vc) = dq_dv;
                }
            }
        }
    };

    for (int it = 0; it <= params.max_pf_iterations; ++it) {
        calc_injections(pr, v, theta, p_calc, q_calc);
        double max_mis = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (pr.theta_vars[k] >= 0) {
                const double mis = p_calc[k] - pr.p_spec_pu[k];
                rhs[pr.theta_vars[k]] = mis;
                max_mis = std::max(max_mis, std::abs(mis));
            }
            if (pr.v_vars[k] >= 0) {
                const double mis = q_calc[k] - pr.q_spec_pu[k];
                rhs[n_theta + pr.v_vars[k]] = mis;
                max_mis = std::max(max_mis, std::abs(mis));
            }
        }
        out.max_mismatch = max_mis;
        out.iterations = it;
        if (max_mis < params.pf_tolerance) {
            out.converged = true;
            break;
        }
        if (it == params.max_pf_iterations || n_unknown == 0) {
            break;  // out of budget (or nothing to solve yet mismatch persists)
        }
        assemble_jacobian();
        Eigen::PartialPivLU<MatrixXd> lu(jac);
        const VectorXd dx = lu.solve(-rhs);
        if (!dx.allFinite()) {
            break;  // singular Jacobian
        }
        for (Eigen::Index k = 0; k < n; ++k) {
            if (pr.theta_vars[k] >= 0) {
                theta[k] += dx[pr.theta_vars[k]];
            }
            if (pr.v_vars[k] >= 0) {
                v[k] += dx[n_theta + pr.v_vars[k]];
                if (v[k] < 1e-4) {
                    v[k] = 1e-4;  // keep magnitudes positive; divergence shows as mismatch
                }
            }
        }
    }

    out.v = std::move(v);
    out.theta = std::move(theta);
    if (out.converged && keep_jacobian && n_v > 0) {
        calc_injections(pr, out.v, out.theta, p_calc, q_calc);
        // Re-assemble at the solution and split into the four named blocks.
        v = out.v;
        theta = out.theta;
        assemble_jacobian();
        out.j_ptheta = jac.topLeftCorner(n_theta, n_theta);
        out.j_pv = jac.topRightCorner(n_theta, n_v);
        out.j_qtheta = jac.bottomLeftCorner(n_v, n_theta);
        out.j_qv = jac.bottomRightCorner(n_v, n_v);
    }
    return out;
}

// Splits the solved bus reactive total across the in-service units at the
// bus, weighting by the capability bound on the relevant side.
void allocate_gen_q(const Network& net, const SystemState& state, std::size_t bus_idx,
                    double q_bus_mvar, std::vector<double>& gen_q) {
    std::vector<std::size_t> units;
    for (const std::size_t gi : net.generators_at_bus()[bus_idx]) {
        if (state.gen_in_service[gi]) {
            units.push_back(gi);
        }
    }
    if (units.empty()) {
        return;
    }
    double weight_sum = 0.0;
    std::vector<double> weights(units.size());
    for (std::size_t k = 0; k < units.size(); ++k) {
        const Generator& g = net.generators()[units[k]];
        weights[k] = q_bus_mvar >= 0.0 ? std::max(g.q_max_mvar, 0.0) : std::abs(std::min(g.q_min_mvar, 0.0));
        weight_sum += weights[k];
    }
    for (std::size_t k = 0; k < units.size(); ++k) {
        const double share = weight_sum > 0.0 ? weights[k] / weight_sum : 1.0 / units.size();
        gen_q[units[k]] = q_bus_mvar * share;
    }
}

}  // namespace

double vsi_of_matrix(const MatrixXd& m) {
    if (m.rows() == 0) {
        return std::numeric_limits<double>::infinity();
    }
    Eigen::FullPivLU<MatrixXd> lu(m);
    if (!lu.isInvertible()) {
        return 0.0;
    }
    const MatrixXd inv = lu.inverse();
    double vsi = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double d = inv(i, i);
        if (d == 0.0) {
            return 0.0;
        }
        vsi = std::min(vsi, 1.0 / d);
    }
    return vsi;
}

PowerFlowSolution solve_power_flow(const Network& net, const SystemState& state,
                                   const std::vector<Island>& islands,
                                   const EngineParams& params) {
    PowerFlowSolution sol;
    const std::size_t nb = net.buses().size();
    sol.bus_v_pu.assign(nb, 0.0);
    sol.bus_theta_rad.assign(nb, 0.0);
    sol.bus_energized.assign(nb, false);
    sol.flow_from_mva.assign(net.branches().size(), 0.0);
    sol.flow_to_mva.assign(net.branches().size(), 0.0);
    sol.flow_mva.assign(net.branches().size(), 0.0);
    sol.flow_from_p_mw.assign(net.branches().size(), 0.0);
    sol.gen_p_mw.assign(net.generators().size(), 0.0);
    sol.gen_q_mvar.assign(net.generators().size(), 0.0);
    sol.converged = true;

    // Largest energized island hosts the reported stability index.
    std::size_t vsi_island = islands.size();
    std::size_t vsi_size = 0;
    for (std::size_t k = 0; k < islands.size(); ++k) {
        if (islands[k].energized && islands[k].bus_indices.size() > vsi_size) {
            vsi_size = islands[k].bus_indices.size();
            vsi_island = k;
        }
    }

    for (std::size_t k = 0; k < islands.size(); ++k) {
        const Island& island = islands[k];
        if (!island.energized) {
            continue;
        }
        IslandProblem pr = build_problem(net, state, island);
        const auto n = static_cast<Eigen::Index>(pr.buses.size());

        VectorXd v(n);
        VectorXd theta(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const std::size_t bi = pr.buses[i];
            v[i] = pr.role[i] == NodeRole::pq
                       ? (state.bus_v_pu[bi] > 0.0 ? state.bus_v_pu[bi] : 1.0)
                       : pr.v_setpoint[i];
            theta[i] = state.bus_theta_rad[bi];
        }
        const bool want_jac = k == vsi_island;
        NewtonOutcome nr = newton_solve(pr, v, theta, params, want_jac);
        if (!nr.converged) {
            // Retry once from a flat profile anchored at the slack angle.
            const double ref = pr.slack_local >= 0 ? state.bus_theta_rad[pr.buses[pr.slack_local]] : 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                v[i] = pr.role[i] == NodeRole::pq ? 1.0 : pr.v_setpoint[i];
                theta[i] = ref;
            }
            nr = newton_solve(pr, v, theta, params, want_jac);
        }
        sol.iterations = std::max(sol.iterations, nr.iterations);
        sol.max_mismatch_pu = std::max(sol.max_mismatch_pu, nr.max_mismatch);
        if (!nr.converged) {
            sol.converged = false;
            return sol;
        }

        for (Eigen::Index i = 0; i < n; ++i) {
            const std::size_t bi = pr.buses[i];
            sol.bus_v_pu[bi] = nr.v[i];
            sol.bus_theta_rad[bi] = nr.theta[i];
            sol.bus_energized[bi] = true;
        }

        // Branch flows within this island.
        for (std::size_t li = 0; li < net.branches().size(); ++li) {
            if (!state.branch_in_service[li]) {
                continue;
            }
            const int f = pr.local_of_bus[net.from_index(li)];
            const int t = pr.local_of_bus[net.to_index(li)];
            if (f < 0 || t < 0) {
                continue;
            }
            const Branch& br = net.branches()[li];
            const cplx y = 1.0 / cplx(br.resistance_pu, br.reactance_pu);
            const cplx ysh(0.0, br.charging_pu / 2.0);
            const cplx vf = std::polar(nr.v[f], nr.theta[f]);
            const cplx vt = std::polar(nr.v[t], nr.theta[t]);
            const cplx sf = vf * std::conj((vf - vt) * y + vf * ysh);
            const cplx st = vt * std::conj((vt - vf) * y + vt * ysh);
            sol.flow_from_mva[li] = std::abs(sf) * kBaseMva;
            sol.flow_to_mva[li] = std::abs(st) * kBaseMva;
            sol.flow_mva[li] = std::max(sol.flow_from_mva[li], sol.flow_to_mva[li]);
            sol.flow_from_p_mw[li] = sf.real() * kBaseMva;
        }

        // Bus reactive totals at generator buses; slack active pickup.
        VectorXd p_calc;
        VectorXd q_calc;
        calc_injections(pr, nr.v, nr.theta, p_calc, q_calc);
        for (Eigen::Index i = 0; i < n; ++i) {
            const std::size_t bi = pr.buses[i];
            if (pr.role[i] == NodeRole::pq) {
                continue;
            }
            const double q_gen_bus = q_calc[i] * kBaseMva + state.load_q_mvar[bi];
            allocate_gen_q(net, state, bi, q_gen_bus, sol.gen_q_mvar);
            double setpoint_sum = 0.0;
            std::size_t slack_gi = net.generators().size();
            for (const std::size_t gi : net.generators_at_bus()[bi]) {
                if (!state.gen_in_service[gi]) {
                    continue;
                }
                if (state.gen_is_slack[gi]) {
                    slack_gi = gi;
                } else {
                    sol.gen_p_mw[gi] = state.gen_p_mw[gi];
                    setpoint_sum += state.gen_p_mw[gi];
                }
            }
            if (slack_gi < net.generators().size()) {
                sol.gen_p_mw[slack_gi] =
                    p_calc[i] * kBaseMva + state.load_p_mw[bi] - setpoint_sum;
            }
        }

        if (want_jac) {
            if (pr.pq_buses.empty()) {
                sol.vsi = std::numeric_limits<double>::infinity();
            } else if (nr.j_ptheta.rows() == 0) {
                sol.vsi = 0.0;
            } else {
                Eigen::PartialPivLU<MatrixXd> lu(nr.j_ptheta);
                const MatrixXd solve_pv = lu.solve(nr.j_pv);
                if (!solve_pv.allFinite()) {
                    sol.vsi = 0.0;
                } else {
                    sol.reduced_jacobian = nr.j_qv - nr.j_qtheta * solve_pv;
                    sol.reduced_jacobian_buses = pr.pq_buses;
                    sol.vsi = vsi_of_matrix(sol.reduced_jacobian);
                }
            }
        }
    }
    return sol;
}

}  // namespace cascsim
