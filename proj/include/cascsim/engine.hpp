#pragma once

#include <string>
#include <vector>

#include "cascsim/network.hpp"
#include "cascsim/params.hpp"

namespace cascsim {

// Event kinds double as the tiebreak priority for simultaneous events:
// shedding acts before trips, trips before the operator.
enum class EventKind {
    undervoltage_shed,
    line_trip,
    generator_trip,
    redispatch,
    islanding,
    divergence,
    vsi_collapse,
};

std::string event_kind_name(EventKind kind);

struct Event {
    double t_s = 0.0;
    EventKind kind = EventKind::line_trip;
    std::vector<int> elements;  // bus ids for sheds/islanding, element ids for trips
    std::string detail;
    double lost_mw = 0.0;  // served load removed by this event
};

struct TraceSeries {
    std::vector<double> t_s;
    std::vector<double> load_mw;
    std::vector<double> vsi;
};

struct TraceTotals {
    int lines = 0;
    int generators = 0;
    double shed_mw = 0.0;
};

struct CascadeTrace {
    std::string config_digest;
    std::string termination;  // no-event | vsi-collapse | divergence | blackout | iteration-limit
    std::vector<Event> events;
    TraceSeries series;
    TraceTotals totals;

    // Run context kept for downstream statistics; not part of the serialized
    // trace schema.
    int center_bus_id = 0;
    double served_start_mw = 0.0;  // served load right after the disturbance

    std::string to_json_text() const;
    double shed_fraction() const;
};

// One full quasi-steady-state cascade: disturbance application, then the
// solve / check / schedule / execute loop until no event is pending or the
// system loses voltage stability. Deterministic given (network, params).
CascadeTrace run_cascade(const Network& net, const SimParams& params);

}  // namespace cascsim
