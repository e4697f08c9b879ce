#include "cascsim/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace cascsim {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("case file: " + msg); }

double require_number(const json& obj, const char* key, const std::string& context) {
    if (!obj.contains(key) || !obj[key].is_number()) {
        fail(context + ": missing or non-numeric field '" + key + "'");
    }
    return obj[key].get<double>();
}

int require_int(const json& obj, const char* key, const std::string& context) {
    if (!obj.contains(key) || !obj[key].is_number_integer()) {
        fail(context + ": missing or non-integer field '" + key + "'");
    }
    return obj[key].get<int>();
}

BusKind parse_bus_kind(const std::string& s, const std::string& context) {
    if (s == "load") {
        return BusKind::load;
    }
    if (s == "generator") {
        return BusKind::generator;
    }
    if (s == "slack-capable") {
        return BusKind::slack_capable;
    }
    fail(context + ": unknown bus kind '" + s + "'");
}

const char* bus_kind_name(BusKind k) {
    switch (k) {
        case BusKind::load:
            return "load";
        case BusKind::generator:
            return "generator";
        case BusKind::slack_capable:
            return "slack-capable";
    }
    return "load";
}

}  // namespace

double Bus::pf_nominal() const {
    const double p = p_load_nominal_mw;
    const double q = q_load_nominal_mvar;
    if (p == 0.0 && q == 0.0) {
        return 1.0;
    }
    return p / std::hypot(p, q);
}

Network Network::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        fail("cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

Network Network::from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(std::string("malformed JSON: ") + e.what());
    }

    Network net;
    const double base = doc.value("base_mva", kBaseMva);
    if (std::abs(base - kBaseMva) > 1e-9) {
        fail("base_mva must be 100");
    }

    if (!doc.contains("buses") || !doc["buses"].is_array() || doc["buses"].empty()) {
        fail("missing or empty 'buses' array");
    }
    for (const json& jb : doc["buses"]) {
        Bus b;
        b.id = require_int(jb, "id", "bus");
        const std::string ctx = "bus " + std::to_string(b.id);
        b.kind = parse_bus_kind(jb.value("kind", "load"), ctx);
        b.base_kv = require_number(jb, "base_kv", ctx);
        b.position.lat_deg = require_number(jb, "lat", ctx);
        b.position.lon_deg = require_number(jb, "lon", ctx);
        b.p_load_nominal_mw = jb.value("p_mw", 0.0);
        b.q_load_nominal_mvar = jb.value("q_mvar", 0.0);
        net.buses_.push_back(b);
    }

    if (!doc.contains("branches") || !doc["branches"].is_array()) {
        fail("missing 'branches' array");
    }
    for (const json& jl : doc["branches"]) {
        Branch l;
        l.id = require_int(jl, "id", "branch");
        const std::string ctx = "branch " + std::to_string(l.id);
        l.from_bus = require_int(jl, "from", ctx);
        l.to_bus = require_int(jl, "to", ctx);
        l.resistance_pu = require_number(jl, "r_pu", ctx);
        l.reactance_pu = require_number(jl, "x_pu", ctx);
        l.charging_pu = jl.value("b_pu", 0.0);
        l.rating_initial_mva = require_number(jl, "rating_mva", ctx);
        l.rated_kv = require_number(jl, "rated_kv", ctx);
        l.weather_exempt = jl.value("weather_exempt", false);
        net.branches_.push_back(l);
    }

    if (doc.contains("generators")) {
        for (const json& jg : doc["generators"]) {
            Generator g;
            g.id = require_int(jg, "id", "generator");
            const std::string ctx = "generator " + std::to_string(g.id);
            g.bus = require_int(jg, "bus", ctx);
            g.p_setpoint_mw = require_number(jg, "p_mw", ctx);
            g.p_max_mw = require_number(jg, "p_max_mw", ctx);
            g.q_min_mvar = require_number(jg, "q_min_mvar", ctx);
            g.q_max_mvar = require_number(jg, "q_max_mvar", ctx);
            g.v_setpoint_pu = require_number(jg, "v_pu", ctx);
            g.is_slack = jg.value("slack", false);
            net.generators_.push_back(g);
        }
    }

    if (doc.contains("shunts")) {
        for (const json& js : doc["shunts"]) {
            Shunt s;
            s.id = require_int(js, "id", "shunt");
            const std::string ctx = "shunt " + std::to_string(s.id);
            if (js.contains("attach_bus")) {
                s.attach_bus = require_int(js, "attach_bus", ctx);
            }
            if (js.contains("attach_branch")) {
                s.attach_branch = require_int(js, "attach_branch", ctx);
                const std::string end = js.value("end", "from");
                if (end == "from") {
                    s.end = ShuntAttachEnd::from;
                } else if (end == "to") {
                    s.end = ShuntAttachEnd::to;
                } else {
                    fail(ctx + ": end must be 'from' or 'to'");
                }
            }
            if (s.attach_bus.has_value() == s.attach_branch.has_value()) {
                fail(ctx + ": exactly one of attach_bus / attach_branch required");
            }
            s.q_mvar = require_number(js, "q_mvar", ctx);
            s.auto_disconnect = js.value("auto_disconnect", false);
            net.shunts_.push_back(s);
        }
    }

    net.build_indexes();
    net.validate();
    return net;
}

std::string Network::to_json_text() const {
    json doc;
    doc["base_mva"] = kBaseMva;
    doc["buses"] = json::array();
    for (const Bus& b : buses_) {
        doc["buses"].push_back({{"id", b.id},
                                {"kind", bus_kind_name(b.kind)},
                                {"base_kv", b.base_kv},
                                {"lat", b.position.lat_deg},
                                {"lon", b.position.lon_deg},
                                {"p_mw", b.p_load_nominal_mw},
                                {"q_mvar", b.q_load_nominal_mvar}});
    }
    doc["branches"] = json::array();
    for (const Branch& l : branches_) {
        doc["branches"].push_back({{"id", l.id},
                                   {"from", l.from_bus},
                                   {"to", l.to_bus},
                                   {"r_pu", l.resistance_pu},
                                   {"x_pu", l.reactance_pu},
                                   {"b_pu", l.charging_pu},
                                   {"rating_mva", l.rating_initial_mva},
                                   {"rated_kv", l.rated_kv},
                                   {"weather_exempt", l.weather_exempt}});
    }
    doc["generators"] = json::array();
    for (const Generator& g : generators_) {
        doc["generators"].push_back({{"id", g.id},
                                     {"bus", g.bus},
                                     {"p_mw", g.p_setpoint_mw},
                                     {"p_max_mw", g.p_max_mw},
                                     {"q_min_mvar", g.q_min_mvar},
                                     {"q_max_mvar", g.q_max_mvar},
                                     {"v_pu", g.v_setpoint_pu},
                                     {"slack", g.is_slack}});
    }
    doc["shunts"] = json::array();
    for (const Shunt& s : shunts_) {
        json js{{"id", s.id}, {"q_mvar", s.q_mvar}, {"auto_disconnect", s.auto_disconnect}};
        if (s.attach_bus) {
            js["attach_bus"] = *s.attach_bus;
        } else {
            js["attach_branch"] = *s.attach_branch;
            js["end"] = s.end == ShuntAttachEnd::from ? "from" : "to";
        }
        doc["shunts"].push_back(js);
    }
    return doc.dump(2) + "\n";
}

void Network::build_indexes() {
    std::unordered_map<int, std::size_t> bus_map;
    for (std::size_t i = 0; i < buses_.size(); ++i) {
        if (!bus_map.emplace(buses_[i].id, i).second) {
            fail("duplicate bus id " + std::to_string(buses_[i].id));
        }
    }
    std::unordered_map<int, std::size_t> branch_map;
    branch_from_idx_.resize(branches_.size());
    branch_to_idx_.resize(branches_.size());
    branches_at_bus_.assign(buses_.size(), {});
    for (std::size_t i = 0; i < branches_.size(); ++i) {
        const Branch& l = branches_[i];
        if (!branch_map.emplace(l.id, i).second) {
            fail("duplicate branch id " + std::to_string(l.id));
        }
        const auto fit = bus_map.find(l.from_bus);
        const auto tit = bus_map.find(l.to_bus);
        if (fit == bus_map.end() || tit == bus_map.end()) {
            fail("branch " + std::to_string(l.id) + " references a missing bus");
        }
        branch_from_idx_[i] = fit->second;
        branch_to_idx_[i] = tit->second;
        branches_at_bus_[fit->second].push_back(i);
        branches_at_bus_[tit->second].push_back(i);
    }
    generators_at_bus_.assign(buses_.size(), {});
    std::unordered_map<int, std::size_t> gen_map;
    for (std::size_t i = 0; i < generators_.size(); ++i) {
        const Generator& g = generators_[i];
        if (!gen_map.emplace(g.id, i).second) {
            fail("duplicate generator id " + std::to_string(g.id));
        }
        const auto it = bus_map.find(g.bus);
        if (it == bus_map.end()) {
            fail("generator " + std::to_string(g.id) + " references missing bus " +
                 std::to_string(g.bus));
        }
        generators_at_bus_[it->second].push_back(i);
    }
    shunts_on_branch_.assign(branches_.size(), {});
    shunts_at_bus_.assign(buses_.size(), {});
    shunt_bus_idx_.resize(shunts_.size());
    for (std::size_t i = 0; i < shunts_.size(); ++i) {
        const Shunt& s = shunts_[i];
        if (s.attach_bus) {
            const auto it = bus_map.find(*s.attach_bus);
            if (it == bus_map.end()) {
                fail("shunt " + std::to_string(s.id) + " references missing bus");
            }
            shunts_at_bus_[it->second].push_back(i);
            shunt_bus_idx_[i] = it->second;
        } else {
            const auto it = branch_map.find(*s.attach_branch);
            if (it == branch_map.end()) {
                fail("shunt " + std::to_string(s.id) + " references missing branch");
            }
            shunts_on_branch_[it->second].push_back(i);
            shunt_bus_idx_[i] = s.end == ShuntAttachEnd::from ? branch_from_idx_[it->second]
                                                              : branch_to_idx_[it->second];
        }
    }
    bus_index_map_ = std::move(bus_map);
    branch_index_map_ = std::move(branch_map);
    gen_index_map_ = std::move(gen_map);
}

void Network::validate() const {
    for (const Bus& b : buses_) {
        if (b.position.lat_deg < -90.0 || b.position.lat_deg > 90.0 ||
            b.position.lon_deg < -180.0 || b.position.lon_deg > 180.0) {
            fail("bus " + std::to_string(b.id) + " has out-of-range coordinates");
        }
    }
    for (const Branch& l : branches_) {
        if (l.reactance_pu == 0.0) {
            fail("branch " + std::to_string(l.id) + " has zero reactance");
        }
        if (l.rating_initial_mva <= 0.0) {
            fail("branch " + std::to_string(l.id) + " has nonpositive rating");
        }
        if (l.from_bus == l.to_bus) {
            fail("branch " + std::to_string(l.id) + " is a self-loop");
        }
    }
    int slack_count = 0;
    for (const Generator& g : generators_) {
        if (g.q_min_mvar > g.q_max_mvar) {
            fail("generator " + std::to_string(g.id) + " has q_min > q_max");
        }
        if (g.p_setpoint_mw < 0.0 || g.p_setpoint_mw > g.p_max_mw + 1e-9) {
            fail("generator " + std::to_string(g.id) + " setpoint outside [0, p_max]");
        }
        if (g.is_slack) {
            ++slack_count;
        }
    }
    if (!generators_.empty() && slack_count != 1) {
        fail("exactly one generator must be flagged slack, found " + std::to_string(slack_count));
    }
    // The all-in-service network must be a single connected component.
    const SystemState all_on = SystemState::initial(*this);
    const auto islands = find_islands(*this, all_on);
    if (islands.size() != 1) {
        fail("network is not connected with all branches in service (" +
             std::to_string(islands.size()) + " islands)");
    }
}

std::size_t Network::bus_index(int bus_id) const {
    const auto it = bus_index_map_.find(bus_id);
    if (it == bus_index_map_.end()) {
        fail("unknown bus id " + std::to_string(bus_id));
    }
    return it->second;
}

std::size_t Network::branch_index(int branch_id) const {
    const auto it = branch_index_map_.find(branch_id);
    if (it == branch_index_map_.end()) {
        fail("unknown branch id " + std::to_string(branch_id));
    }
    return it->second;
}

std::size_t Network::generator_index(int gen_id) const {
    const auto it = gen_index_map_.find(gen_id);
    if (it == gen_index_map_.end()) {
        fail("unknown generator id " + std::to_string(gen_id));
    }
    return it->second;
}

std::vector<GeoPoint> Network::bus_positions() const {
    std::vector<GeoPoint> out;
    out.reserve(buses_.size());
    for (const Bus& b : buses_) {
        out.push_back(b.position);
    }
    return out;
}

std::vector<std::size_t> Network::load_bus_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < buses_.size(); ++i) {
        if (buses_[i].p_load_nominal_mw > 0.0) {
            out.push_back(i);
        }
    }
    return out;
}

double Network::total_load_nominal_mw() const {
    double total = 0.0;
    for (const Bus& b : buses_) {
        total += b.p_load_nominal_mw;
    }
    return total;
}

SystemState SystemState::initial(const Network& net) {
    SystemState s;
    s.branch_in_service.assign(net.branches().size(), true);
    s.gen_in_service.assign(net.generators().size(), true);
    s.shunt_in_service.assign(net.shunts().size(), true);
    s.load_p_mw.resize(net.buses().size());
    s.load_q_mvar.resize(net.buses().size());
    for (std::size_t i = 0; i < net.buses().size(); ++i) {
        s.load_p_mw[i] = net.buses()[i].p_load_nominal_mw;
        s.load_q_mvar[i] = net.buses()[i].q_load_nominal_mvar;
    }
    s.gen_p_mw.resize(net.generators().size());
    s.gen_is_slack.resize(net.generators().size());
    for (std::size_t i = 0; i < net.generators().size(); ++i) {
        s.gen_p_mw[i] = net.generators()[i].p_setpoint_mw;
        s.gen_is_slack[i] = net.generators()[i].is_slack;
    }
    s.bus_v_pu.assign(net.buses().size(), 1.0);
    s.bus_theta_rad.assign(net.buses().size(), 0.0);
    return s;
}

std::vector<Island> find_islands(const Network& net, const SystemState& state) {
    const std::size_t n = net.buses().size();
    std::vector<int> label(n, -1);
    std::vector<Island> islands;
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < n; ++start) {
        if (label[start] >= 0) {
            continue;
        }
        const int comp = static_cast<int>(islands.size());
        islands.emplace_back();
        stack.push_back(start);
        label[start] = comp;
        while (!stack.empty()) {
            const std::size_t u = stack.back();
            stack.pop_back();
            islands[comp].bus_indices.push_back(u);
            for (const std::size_t li : net.branches_at_bus()[u]) {
                if (!state.branch_in_service[li]) {
                    continue;
                }
                const std::size_t v =
                    net.from_index(li) == u ? net.to_index(li) : net.from_index(li);
                if (label[v] < 0) {
                    label[v] = comp;
                    stack.push_back(v);
                }
            }
        }
    }
    for (Island& isl : islands) {
        std::sort(isl.bus_indices.begin(), isl.bus_indices.end());
        for (const std::size_t bi : isl.bus_indices) {
            for (const std::size_t gi : net.generators_at_bus()[bi]) {
                if (state.gen_in_service[gi]) {
                    isl.energized = true;
                    break;
                }
            }
            if (isl.energized) {
                break;
            }
        }
    }
    std::sort(islands.begin(), islands.end(), [](const Island& a, const Island& b) {
        return a.bus_indices.front() < b.bus_indices.front();
    });
    return islands;
}

double total_served_load_mw(const Network& net, const SystemState& state,
                            const std::vector<Island>& islands) {
    (void)net;
    double total = 0.0;
    for (const Island& isl : islands) {
        if (!isl.energized) {
            continue;
        }
        for (const std::size_t bi : isl.bus_indices) {
            total += state.load_p_mw[bi];
        }
    }
    return total;
}

}  // namespace cascsim
