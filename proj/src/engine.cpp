#include "cascsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cascsim/geo.hpp"
#include "cascsim/outage.hpp"
#include "cascsim/powerflow.hpp"
#include "cascsim/protection.hpp"
#include "cascsim/rng.hpp"
#include "cascsim/weather.hpp"

namespace cascsim {
namespace {

constexpr double kNever = std::numeric_limits<double>::infinity();

std::string strf(const char* fmt, ...) {
    char buf[256];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    return buf;
}

enum class MarkOrigin { none, accidental, overload };

// Per-element cascade bookkeeping. The accumulator spans the whole run; the
// violation side and the to-fail mark track the current episode. A mark drawn
// from the violation curve clears when the violation clears; an accidental
// (floor-probability) mark stays until the element trips.
struct ElementTracker {
    int violation_side = 0;  // lines: 0 or 1; generators: -1 low, 0 none, +1 high
    MarkOrigin origin = MarkOrigin::none;
    double mark_probability = 0.0;
    double mark_anchor_s = 0.0;
    double o_limit = 0.0;
    double accumulated = 0.0;

    void reset_episode() {
        violation_side = 0;
        origin = MarkOrigin::none;
    }
};

struct PendingEvent {
    double t_s = kNever;
    EventKind kind = EventKind::line_trip;
    int element_id = 0;
    std::size_t index = 0;
};

// Minimum time wins; ties fall back to kind priority (the enum order), then
// to the lowest element id.
bool earlier(const PendingEvent& a, const PendingEvent& b) {
    if (a.t_s != b.t_s) {
        return a.t_s < b.t_s;
    }
    if (a.kind != b.kind) {
        return static_cast<int>(a.kind) < static_cast<int>(b.kind);
    }
    return a.element_id < b.element_id;
}

}  // namespace

std::string event_kind_name(EventKind kind) {
    switch (kind) {
        case EventKind::undervoltage_shed:
            return "undervoltage-shed";
        case EventKind::line_trip:
            return "line-trip";
        case EventKind::generator_trip:
            return "generator-trip";
        case EventKind::redispatch:
            return "redispatch";
        case EventKind::islanding:
            return "islanding";
        case EventKind::divergence:
            return "divergence";
        case EventKind::vsi_collapse:
            return "vsi-collapse";
    }
    return "unknown";
}

double CascadeTrace::shed_fraction() const {
    if (served_start_mw <= 0.0) {
        return 0.0;
    }
    return std::clamp(totals.shed_mw / served_start_mw, 0.0, 1.0);
}

std::string CascadeTrace::to_json_text() const {
    nlohmann::json j;
    j["config_digest"] = config_digest;
    j["termination"] = termination;
    j["events"] = nlohmann::json::array();
    for (const Event& e : events) {
        nlohmann::json je;
        je["t_s"] = e.t_s;
        je["kind"] = event_kind_name(e.kind);
        je["elements"] = e.elements;
        je["detail"] = e.detail;
        j["events"].push_back(std::move(je));
    }
    j["series"]["t_s"] = series.t_s;
    j["series"]["load_mw"] = series.load_mw;
    j["series"]["vsi"] = series.vsi;
    j["totals"]["lines"] = totals.lines;
    j["totals"]["generators"] = totals.generators;
    j["totals"]["shed_mw"] = totals.shed_mw;
    return j.dump(2) + "\n";
}

CascadeTrace run_cascade(const Network& net, const SimParams& params) {
    Rng rng(params.seed);
    CascadeTrace trace;

    // Disturbance center. A random center is the run's first draw so batches
    // with random placement stay reproducible per (seed, index).
    std::size_t center_idx;
    if (params.center_bus < 0) {
        const std::vector<std::size_t> candidates = net.load_bus_indices();
        if (candidates.empty()) {
            throw std::invalid_argument("case has no load buses to center a disturbance on");
        }
        center_idx = candidates[rng.uniform_index(candidates.size())];
    } else {
        center_idx = net.bus_index(params.center_bus);
    }
    trace.center_bus_id = net.buses()[center_idx].id;

    SimParams resolved = params;
    resolved.center_bus = trace.center_bus_id;
    trace.config_digest = strf("%016llx", static_cast<unsigned long long>(resolved.digest()));

    const std::size_t nbus = net.buses().size();
    const std::size_t nbr = net.branches().size();
    const std::size_t ngen = net.generators().size();

    // Pre-disturbance solve: anchors the rating constants and the warm start.
    SystemState state = SystemState::initial(net);
    std::vector<Island> islands = find_islands(net, state);
    PowerFlowSolution sol = solve_power_flow(net, state, islands, params.engine);
    if (!sol.converged) {
        throw std::runtime_error("base case power flow did not converge");
    }
    state.bus_v_pu = sol.bus_v_pu;
    state.bus_theta_rad = sol.bus_theta_rad;

    std::vector<double> v0(nbr, 1.0);
    for (std::size_t li = 0; li < nbr; ++li) {
        v0[li] = 0.5 * (sol.bus_v_pu[net.from_index(li)] + sol.bus_v_pu[net.to_index(li)]);
    }
    const DynamicRatingModel drm(net, v0, params.weather.base_temp_c(),
                                 params.weather.rating_slope_ka_per_c);

    std::vector<double> alpha(nbr, 1.0);
    if (params.weather.alpha_lower < 1.0) {
        for (std::size_t li = 0; li < nbr; ++li) {
            alpha[li] = rng.uniform_in(params.weather.alpha_lower, 1.0);
        }
    }

    // Disturbance: heat up (or cool down) the area, grow the loads, spread
    // the growth across the fleet.
    const GeoRect area =
        build_area(net.buses()[center_idx].position, params.gamma, net.bus_positions());
    const double delta_c = params.weather.scenario_direction == ScenarioDirection::heat
                               ? std::abs(params.delta_t_c)
                               : -std::abs(params.delta_t_c);
    const TemperatureField field =
        TemperatureField::build(net, area, params.weather.base_temp_c(), delta_c);
    const LoadCurve curve = LoadCurve::calibrate(params.weather.load_curve_anchor_ratio);
    const LoadChangeResult load_change = apply_load_change(net, state, field, curve, params.weather);
    redistribute_generation(net, state, load_change.delta_p_mw);

    trace.served_start_mw = total_served_load_mw(net, state, islands);

    std::vector<ElementTracker> ltrack(nbr);
    std::vector<ElementTracker> gtrack(ngen);
    std::vector<double> uv_anchor(nbus, kNever);
    // Set when a shed at the bus comes out vanishingly small: the proportional
    // relay has settled at the threshold voltage and re-arming it would only
    // spin the clock. Cleared when the bus recovers or the system changes.
    std::vector<char> uv_exhausted(nbus, 0);
    double redispatch_anchor = kNever;
    // Set when a re-dispatch event ends with the overload still standing: the
    // operator has used every round and cannot improve on the same system
    // state, so the timer stays disarmed until something else changes.
    bool redispatch_exhausted = false;
    std::vector<double> rating(nbr, 0.0);

    double t = 0.0;

    auto push_event = [&](Event e) {
        trace.totals.shed_mw += e.lost_mw;
        if (e.kind == EventKind::line_trip) {
            trace.totals.lines += static_cast<int>(e.elements.size());
        } else if (e.kind == EventKind::generator_trip) {
            trace.totals.generators += static_cast<int>(e.elements.size());
        }
        trace.events.push_back(std::move(e));
    };

    // Re-derive islands after a topology change: record newly de-energized
    // islands as lost load, retire their bookkeeping, and make sure every
    // surviving island still has a slack unit.
    auto settle_islands = [&](double now) {
        islands = find_islands(net, state);
        std::vector<bool> bus_dead(nbus, false);
        for (const Island& island : islands) {
            if (island.energized) {
                bool has_slack = false;
                for (const std::size_t bi : island.bus_indices) {
                    for (const std::size_t gi : net.generators_at_bus()[bi]) {
                        if (state.gen_in_service[gi] && state.gen_is_slack[gi]) {
                            has_slack = true;
                        }
                    }
                }
                if (!has_slack) {
                    std::size_t pick = ngen;
                    double best_reserve = -1.0;
                    for (const std::size_t bi : island.bus_indices) {
                        for (const std::size_t gi : net.generators_at_bus()[bi]) {
                            if (!state.gen_in_service[gi]) {
                                continue;
                            }
                            const double reserve =
                                net.generators()[gi].p_max_mw - state.gen_p_mw[gi];
                            if (reserve > best_reserve ||
                                (reserve == best_reserve && pick < ngen &&
                                 net.generators()[gi].id < net.generators()[pick].id)) {
                                best_reserve = reserve;
                                pick = gi;
                            }
                        }
                    }
                    if (pick < ngen) {
                        state.gen_is_slack[pick] = true;
                    }
                }
            } else {
                double lost = 0.0;
                for (const std::size_t bi : island.bus_indices) {
                    bus_dead[bi] = true;
                    lost += state.load_p_mw[bi];
                }
                if (lost > 1e-9) {
                    Event e;
                    e.t_s = now;
                    e.kind = EventKind::islanding;
                    e.lost_mw = lost;
                    for (const std::size_t bi : island.bus_indices) {
                        e.elements.push_back(net.buses()[bi].id);
                    }
                    std::sort(e.elements.begin(), e.elements.end());
                    e.detail = strf("island of %zu buses de-energized, %.2f MW unserved",
                                    island.bus_indices.size(), lost);
                    push_event(std::move(e));
                }
                for (const std::size_t bi : island.bus_indices) {
                    state.load_p_mw[bi] = 0.0;
                    state.load_q_mvar[bi] = 0.0;
                    uv_anchor[bi] = kNever;
                }
            }
        }
        for (std::size_t li = 0; li < nbr; ++li) {
            if (bus_dead[net.from_index(li)] || bus_dead[net.to_index(li)]) {
                ltrack[li].reset_episode();
            }
        }
        for (std::size_t gi = 0; gi < ngen; ++gi) {
            if (bus_dead[net.bus_index(net.generators()[gi].bus)]) {
                gtrack[gi].reset_episode();
            }
        }
    };

    auto terminal = [&](EventKind kind, const std::string& why, double lost) {
        Event e;
        e.t_s = t;
        e.kind = kind;
        e.lost_mw = lost;
        e.detail = why;
        push_event(std::move(e));
    };

    int iteration = 0;
    while (true) {
        if (++iteration > params.engine.max_cascade_iterations) {
            trace.termination = "iteration-limit";
            break;
        }

        // Dynamic ratings for lines touching the disturbed area, evaluated at
        // the most recent converged voltages. Untouched lines keep their
        // nameplate limit.
        for (std::size_t li = 0; li < nbr; ++li) {
            if (field.branch_fraction[li] > 0.0 && !net.branches()[li].weather_exempt) {
                const double v =
                    0.5 * (state.bus_v_pu[net.from_index(li)] + state.bus_v_pu[net.to_index(li)]);
                rating[li] = drm.rating_mva(li, field.branch_temp_c[li], v, alpha[li]);
            } else {
                rating[li] = net.branches()[li].rating_initial_mva;
            }
        }

        islands = find_islands(net, state);
        sol = solve_power_flow(net, state, islands, params.engine);
        if (!sol.converged) {
            const double lost = total_served_load_mw(net, state, islands);
            terminal(EventKind::divergence,
                     strf("power flow diverged, %.2f MW unserved", lost), lost);
            trace.termination = "divergence";
            break;
        }
        state.bus_v_pu = sol.bus_v_pu;
        state.bus_theta_rad = sol.bus_theta_rad;

        const double load_now = total_served_load_mw(net, state, islands);
        trace.series.t_s.push_back(t);
        trace.series.load_mw.push_back(load_now);
        trace.series.vsi.push_back(sol.vsi);

        if (sol.vsi <= params.engine.vsi_threshold) {
            terminal(EventKind::vsi_collapse,
                     strf("VSI %.4f at or below %.4f, %.2f MW unserved", sol.vsi,
                          params.engine.vsi_threshold, load_now),
                     load_now);
            trace.termination = "vsi-collapse";
            break;
        }
        if (trace.served_start_mw > 0.0 && load_now <= 1e-9) {
            trace.termination = "blackout";
            break;
        }

        // Undervoltage timers: armed while a served load bus sits below the
        // threshold, cleared the moment it recovers.
        for (std::size_t bi = 0; bi < nbus; ++bi) {
            if (!sol.bus_energized[bi] || state.load_p_mw[bi] <= 0.0 ||
                sol.bus_v_pu[bi] >= params.protection.v_threshold) {
                uv_anchor[bi] = kNever;
                uv_exhausted[bi] = 0;
            } else if (!uv_exhausted[bi] && uv_anchor[bi] == kNever) {
                uv_anchor[bi] = t;
            }
        }

        // Operator timer: armed while any line runs above the re-dispatch
        // basis rating.
        if (params.protection.redispatch_enabled) {
            bool any_above_basis = false;
            for (std::size_t li = 0; li < nbr && !any_above_basis; ++li) {
                if (!state.branch_in_service[li]) {
                    continue;
                }
                const double basis = params.protection.rating_basis == RatingBasis::initial
                                         ? net.branches()[li].rating_initial_mva
                                         : rating[li];
                any_above_basis = sol.flow_mva[li] > basis;
            }
            if (!any_above_basis) {
                redispatch_anchor = kNever;
                redispatch_exhausted = false;
            } else if (!redispatch_exhausted && redispatch_anchor == kNever) {
                redispatch_anchor = t;
            }
        }

        // Violation episodes and trip decisions. Each in-service element gets
        // at most one draw per iteration: at the curve probability when its
        // violation just appeared, at the floor otherwise.
        for (std::size_t li = 0; li < nbr; ++li) {
            if (!state.branch_in_service[li] || !sol.bus_energized[net.from_index(li)]) {
                continue;
            }
            ElementTracker& lt = ltrack[li];
            const double flow = sol.flow_mva[li];
            const double ratio = rating[li] > 0.0
                                     ? flow / rating[li]
                                     : (flow > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
            const int side = ratio > 1.0 ? 1 : 0;
            bool drew = false;
            if (side != lt.violation_side) {
                if (side == 0 && lt.origin == MarkOrigin::overload) {
                    lt.origin = MarkOrigin::none;
                }
                lt.violation_side = side;
                if (side == 1) {
                    lt.o_limit = line_overload_limit(rating[li], params.outage);
                    if (lt.origin == MarkOrigin::none) {
                        const double p = line_trip_probability(ratio, params.outage);
                        drew = true;
                        if (rng.bernoulli(p)) {
                            lt.origin = MarkOrigin::overload;
                            lt.mark_probability = p;
                            lt.mark_anchor_s = t;
                        }
                    }
                }
            }
            if (!drew && lt.origin == MarkOrigin::none && rng.bernoulli(params.outage.p1)) {
                lt.origin = MarkOrigin::accidental;
                lt.mark_probability = params.outage.p1;
                lt.mark_anchor_s = t;
            }
        }
        for (std::size_t gi = 0; gi < ngen; ++gi) {
            const Generator& gen = net.generators()[gi];
            if (!state.gen_in_service[gi] || !sol.bus_energized[net.bus_index(gen.bus)]) {
                continue;
            }
            ElementTracker& gt = gtrack[gi];
            const double q = sol.gen_q_mvar[gi];
            const int side = q < gen.q_min_mvar ? -1 : (q > gen.q_max_mvar ? 1 : 0);
            bool drew = false;
            if (side != gt.violation_side) {
                if (gt.origin == MarkOrigin::overload) {
                    gt.origin = MarkOrigin::none;
                }
                gt.violation_side = side;
                if (side != 0) {
                    const double violated = side < 0 ? gen.q_min_mvar : gen.q_max_mvar;
                    gt.o_limit = gen_overload_limit(violated, params.outage);
                    if (gt.origin == MarkOrigin::none) {
                        const double p = generator_trip_probability(q, gen, params.outage);
                        drew = true;
                        if (rng.bernoulli(p)) {
                            gt.origin = MarkOrigin::overload;
                            gt.mark_probability = p;
                            gt.mark_anchor_s = t;
                        }
                    }
                }
            }
            if (!drew && gt.origin == MarkOrigin::none && rng.bernoulli(params.outage.p4)) {
                gt.origin = MarkOrigin::accidental;
                gt.mark_probability = params.outage.p4;
                gt.mark_anchor_s = t;
            }
        }

        // Gather the pending events and pick the winner.
        PendingEvent best;
        bool found = false;
        auto consider = [&](const PendingEvent& e) {
            if (!found || earlier(e, best)) {
                best = e;
                found = true;
            }
        };

        for (std::size_t bi = 0; bi < nbus; ++bi) {
            if (uv_anchor[bi] != kNever) {
                consider({uv_anchor[bi] + params.protection.shed_delay_s,
                          EventKind::undervoltage_shed, net.buses()[bi].id, bi});
            }
        }
        for (std::size_t li = 0; li < nbr; ++li) {
            const ElementTracker& lt = ltrack[li];
            if (lt.origin == MarkOrigin::none || !state.branch_in_service[li] ||
                !sol.bus_energized[net.from_index(li)]) {
                continue;
            }
            double when;
            if (sol.flow_mva[li] > rating[li]) {
                OverloadTracker ot;
                ot.o_limit = lt.o_limit;
                ot.accumulated = lt.accumulated;
                when = t + line_trip_time_s(sol.flow_mva[li], rating[li], ot);
            } else {
                when = lt.mark_anchor_s + params.outage.accidental_trip_s;
            }
            consider({when, EventKind::line_trip, net.branches()[li].id, li});
        }
        for (std::size_t gi = 0; gi < ngen; ++gi) {
            const ElementTracker& gt = gtrack[gi];
            const Generator& gen = net.generators()[gi];
            if (gt.origin == MarkOrigin::none || !state.gen_in_service[gi] ||
                !sol.bus_energized[net.bus_index(gen.bus)]) {
                continue;
            }
            double when;
            if (gt.violation_side != 0) {
                const double excess = gt.violation_side < 0 ? gen.q_min_mvar - sol.gen_q_mvar[gi]
                                                            : sol.gen_q_mvar[gi] - gen.q_max_mvar;
                OverloadTracker ot;
                ot.o_limit = gt.o_limit;
                ot.accumulated = gt.accumulated;
                when = t + gen_trip_time_s(excess, ot);
            } else {
                when = gt.mark_anchor_s + params.outage.accidental_trip_s;
            }
            consider({when, EventKind::generator_trip, gen.id, gi});
        }
        if (params.protection.redispatch_enabled && redispatch_anchor != kNever) {
            consider({redispatch_anchor + params.protection.redispatch_duration_s,
                      EventKind::redispatch, 0, 0});
        }

        if (!found) {
            trace.termination = "no-event";
            break;
        }

        // Everything overloaded keeps accumulating while the system waits for
        // the winning event, whether or not it is marked to fail.
        const double dt_min = std::max(0.0, best.t_s - t);
        for (std::size_t li = 0; li < nbr; ++li) {
            if (state.branch_in_service[li] && sol.bus_energized[net.from_index(li)]) {
                ltrack[li].accumulated += std::max(sol.flow_mva[li] - rating[li], 0.0) * dt_min;
            }
        }
        for (std::size_t gi = 0; gi < ngen; ++gi) {
            const Generator& gen = net.generators()[gi];
            if (state.gen_in_service[gi] && sol.bus_energized[net.bus_index(gen.bus)]) {
                const double q = sol.gen_q_mvar[gi];
                gtrack[gi].accumulated +=
                    (std::max(gen.q_min_mvar - q, 0.0) + std::max(q - gen.q_max_mvar, 0.0)) *
                    dt_min;
            }
        }

        t = best.t_s;

        switch (best.kind) {
            case EventKind::undervoltage_shed: {
                const std::size_t bi = best.index;
                const ShedAmount amt =
                    undervoltage_shed(state.load_p_mw[bi], state.load_q_mvar[bi],
                                      sol.bus_v_pu[bi], params.protection);
                state.load_p_mw[bi] = std::max(state.load_p_mw[bi] - amt.delta_p_mw, 0.0);
                state.load_q_mvar[bi] -= amt.delta_q_mvar;
                if (std::abs(state.load_q_mvar[bi]) < 1e-12) {
                    state.load_q_mvar[bi] = 0.0;
                }
                uv_anchor[bi] = kNever;  // re-arms if the bus stays low
                if (amt.delta_p_mw < params.protection.shed_min_mw) {
                    uv_exhausted[bi] = 1;
                } else {
                    std::fill(uv_exhausted.begin(), uv_exhausted.end(), 0);
                    redispatch_exhausted = false;
                }
                Event e;
                e.t_s = t;
                e.kind = EventKind::undervoltage_shed;
                e.elements = {net.buses()[bi].id};
                e.lost_mw = amt.delta_p_mw;
                e.detail = strf("bus %d at %.4f pu, shed %.2f MW / %.2f MVAr", net.buses()[bi].id,
                                sol.bus_v_pu[bi], amt.delta_p_mw, amt.delta_q_mvar);
                push_event(std::move(e));
                break;
            }
            case EventKind::line_trip: {
                const std::size_t li = best.index;
                const ElementTracker& lt = ltrack[li];
                Event e;
                e.t_s = t;
                e.kind = EventKind::line_trip;
                e.elements = {net.branches()[li].id};
                if (sol.flow_mva[li] > rating[li]) {
                    e.detail = strf("overload trip, flow %.2f MVA vs rating %.2f, p drawn %.4f",
                                    sol.flow_mva[li], rating[li], lt.mark_probability);
                } else {
                    e.detail = strf("accidental trip, p drawn %.4f", lt.mark_probability);
                }
                state.branch_in_service[li] = false;
                disconnect_coupled_shunts(net, state, li);
                ltrack[li].reset_episode();
                redispatch_exhausted = false;
                std::fill(uv_exhausted.begin(), uv_exhausted.end(), 0);
                push_event(std::move(e));
                settle_islands(t);
                break;
            }
            case EventKind::generator_trip: {
                const std::size_t gi = best.index;
                const ElementTracker& gt = gtrack[gi];
                const Generator& gen = net.generators()[gi];
                Event e;
                e.t_s = t;
                e.kind = EventKind::generator_trip;
                e.elements = {gen.id};
                if (gt.violation_side != 0) {
                    e.detail = strf("reactive limit trip, Q %.2f MVAr outside [%.2f, %.2f], "
                                    "p drawn %.4f",
                                    sol.gen_q_mvar[gi], gen.q_min_mvar, gen.q_max_mvar,
                                    gt.mark_probability);
                } else {
                    e.detail = strf("accidental trip, p drawn %.4f", gt.mark_probability);
                }
                state.gen_in_service[gi] = false;
                state.gen_is_slack[gi] = false;
                gtrack[gi].reset_episode();
                redispatch_exhausted = false;
                std::fill(uv_exhausted.begin(), uv_exhausted.end(), 0);
                push_event(std::move(e));
                settle_islands(t);
                break;
            }
            case EventKind::redispatch: {
                std::vector<double> basis(nbr, 0.0);
                for (std::size_t li = 0; li < nbr; ++li) {
                    basis[li] = params.protection.rating_basis == RatingBasis::initial
                                    ? net.branches()[li].rating_initial_mva
                                    : rating[li];
                }
                Event e;
                e.t_s = t;
                e.kind = EventKind::redispatch;
                for (std::size_t li = 0; li < nbr; ++li) {
                    if (state.branch_in_service[li] && sol.flow_mva[li] > basis[li]) {
                        e.elements.push_back(net.branches()[li].id);
                    }
                }
                PowerFlowSolution cur = sol;
                int rounds = 0;
                double moved = 0.0;
                bool rejected = false;
                while (rounds < params.protection.max_rounds) {
                    bool any = false;
                    for (std::size_t li = 0; li < nbr && !any; ++li) {
                        any = state.branch_in_service[li] && cur.flow_mva[li] > basis[li];
                    }
                    if (!any) {
                        break;
                    }
                    const ShiftFactorTable table = ShiftFactorTable::build(net, state, islands);
                    // A proposed change whose power flow fails to solve is an
                    // infeasible dispatch, not a system collapse: the operator
                    // rejects it and keeps the present setpoints.
                    const std::vector<double> before = state.gen_p_mw;
                    const RedispatchOutcome out =
                        redispatch_round(net, state, cur, basis, table, params.protection);
                    ++rounds;
                    if (out.total_adjustment_mw <= 1e-9) {
                        break;  // no controllable generator can move
                    }
                    const PowerFlowSolution trial = solve_power_flow(net, state, islands, params.engine);
                    if (!trial.converged) {
                        state.gen_p_mw = before;
                        rejected = true;
                        break;
                    }
                    moved += out.total_adjustment_mw;
                    cur = trial;
                    state.bus_v_pu = cur.bus_v_pu;
                    state.bus_theta_rad = cur.bus_theta_rad;
                }
                for (std::size_t li = 0; li < nbr && !redispatch_exhausted; ++li) {
                    redispatch_exhausted =
                        state.branch_in_service[li] && cur.flow_mva[li] > basis[li];
                }
                if (moved > 1e-9) {
                    std::fill(uv_exhausted.begin(), uv_exhausted.end(), 0);
                }
                e.detail = strf("%d round%s, %.2f MW of setpoint changes%s%s", rounds,
                                rounds == 1 ? "" : "s", moved,
                                rejected ? ", last change rejected as unsolvable" : "",
                                redispatch_exhausted ? ", overload not fully relieved" : "");
                push_event(std::move(e));
                redispatch_anchor = kNever;
                break;
            }
            default:
                break;
        }
        if (!trace.termination.empty()) {
            break;
        }
    }

    return trace;
}

}  // namespace cascsim
