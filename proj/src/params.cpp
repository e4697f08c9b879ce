#include "cascsim/params.hpp"

#include <stdexcept>

#include <json.hpp>

#include "cascsim/rng.hpp"

namespace cascsim {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& key, const std::string& why) {
    throw std::runtime_error("config key '" + key + "': " + why);
}

double take_number(const json& j, const std::string& key) {
    if (!j.is_number()) {
        fail(key, "expected a number");
    }
    return j.get<double>();
}

int take_int(const json& j, const std::string& key) {
    if (!j.is_number_integer()) {
        fail(key, "expected an integer");
    }
    return j.get<int>();
}

bool take_bool(const json& j, const std::string& key) {
    if (!j.is_boolean()) {
        fail(key, "expected a boolean");
    }
    return j.get<bool>();
}

void merge_calibration(OutageParams::Calibration& cal, const json& j, const std::string& key) {
    if (!j.is_object()) {
        fail(key, "expected an object with 'percent' and 'seconds'");
    }
    for (const auto& [k, v] : j.items()) {
        if (k == "percent") {
            cal.percent = take_number(v, key + ".percent");
        } else if (k == "seconds") {
            cal.seconds = take_number(v, key + ".seconds");
        } else {
            fail(key + "." + k, "unknown key");
        }
    }
}

}  // namespace

void SimParams::merge_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("config: malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw std::runtime_error("config: top level must be an object");
    }
    for (const auto& [key, value] : doc.items()) {
        if (key == "load_curve_anchor_ratio") {
            weather.load_curve_anchor_ratio = take_number(value, key);
        } else if (key == "pf_slope") {
            weather.pf_slope = take_number(value, key);
        } else if (key == "rating_slope_ka_per_c") {
            weather.rating_slope_ka_per_c = take_number(value, key);
        } else if (key == "alpha_lower") {
            weather.alpha_lower = take_number(value, key);
            if (weather.alpha_lower <= 0.0 || weather.alpha_lower > 1.0) {
                fail(key, "must be in (0, 1]");
            }
        } else if (key == "scenario_direction") {
            const std::string s = value.is_string() ? value.get<std::string>() : "";
            if (s == "heat") {
                weather.scenario_direction = ScenarioDirection::heat;
            } else if (s == "cool") {
                weather.scenario_direction = ScenarioDirection::cool;
            } else {
                fail(key, "must be \"heat\" or \"cool\"");
            }
        } else if (key == "p1") {
            outage.p1 = take_number(value, key);
        } else if (key == "p2") {
            outage.p2 = take_number(value, key);
        } else if (key == "p3") {
            outage.p3 = take_number(value, key);
        } else if (key == "p4") {
            outage.p4 = take_number(value, key);
        } else if (key == "p5") {
            outage.p5 = take_number(value, key);
        } else if (key == "p6") {
            outage.p6 = take_number(value, key);
        } else if (key == "epsilon") {
            outage.epsilon = take_number(value, key);
            if (outage.epsilon <= 0.0) {
                fail(key, "must be positive");
            }
        } else if (key == "K") {
            outage.K = take_number(value, key);
        } else if (key == "k_q_factor") {
            outage.k_q_factor = take_number(value, key);
        } else if (key == "line_overload_calibration") {
            merge_calibration(outage.line_overload_calibration, value, key);
        } else if (key == "gen_overload_calibration") {
            merge_calibration(outage.gen_overload_calibration, value, key);
        } else if (key == "accidental_trip_s") {
            outage.accidental_trip_s = take_number(value, key);
        } else if (key == "v_threshold") {
            protection.v_threshold = take_number(value, key);
        } else if (key == "k_shed_mw_per_pu") {
            protection.k_shed_mw_per_pu = take_number(value, key);
        } else if (key == "shed_delay_s") {
            protection.shed_delay_s = take_number(value, key);
        } else if (key == "shed_min_mw") {
            protection.shed_min_mw = take_number(value, key);
        } else if (key == "eta") {
            protection.eta = take_number(value, key);
        } else if (key == "redispatch_duration_s") {
            protection.redispatch_duration_s = take_number(value, key);
        } else if (key == "max_rounds") {
            protection.max_rounds = take_int(value, key);
            if (protection.max_rounds < 1) {
                fail(key, "must be >= 1");
            }
        } else if (key == "min_shift_factor") {
            protection.min_shift_factor = take_number(value, key);
        } else if (key == "rating_basis") {
            const std::string s = value.is_string() ? value.get<std::string>() : "";
            if (s == "initial") {
                protection.rating_basis = RatingBasis::initial;
            } else if (s == "dynamic") {
                protection.rating_basis = RatingBasis::dynamic;
            } else {
                fail(key, "must be \"initial\" or \"dynamic\"");
            }
        } else if (key == "redispatch_enabled") {
            protection.redispatch_enabled = take_bool(value, key);
        } else if (key == "vsi_threshold") {
            engine.vsi_threshold = take_number(value, key);
        } else if (key == "max_pf_iterations") {
            engine.max_pf_iterations = take_int(value, key);
        } else if (key == "pf_tolerance") {
            engine.pf_tolerance = take_number(value, key);
        } else if (key == "max_cascade_iterations") {
            engine.max_cascade_iterations = take_int(value, key);
        } else if (key == "gamma") {
            gamma = take_number(value, key);
            if (gamma <= 0.0 || gamma > 1.0) {
                fail(key, "must be in (0, 1]");
            }
        } else if (key == "delta_t") {
            delta_t_c = take_number(value, key);
        } else if (key == "center_bus") {
            center_bus = take_int(value, key);
        } else if (key == "seed") {
            if (!value.is_number_unsigned() && !value.is_number_integer()) {
                fail(key, "expected an integer");
            }
            seed = value.get<std::uint64_t>();
        } else {
            fail(key, "unknown key");
        }
    }
    // A zero floor is allowed (it disables accidental failures); the chain
    // ordering and the unit upper bound still hold.
    if (outage.p1 < 0.0 || outage.p1 > outage.p2 || outage.p2 > outage.p3 || outage.p3 > 1.0) {
        throw std::runtime_error("config: need 0 <= p1 <= p2 <= p3 <= 1");
    }
    if (outage.p4 < 0.0 || outage.p4 > outage.p5 || outage.p5 > outage.p6 || outage.p6 > 1.0) {
        throw std::runtime_error("config: need 0 <= p4 <= p5 <= p6 <= 1");
    }
    if (outage.K <= 1.0 + outage.epsilon) {
        throw std::runtime_error("config: need K > 1 + epsilon");
    }
}

SimParams SimParams::from_json_text(const std::string& text) {
    SimParams p;
    p.merge_json_text(text);
    return p;
}

std::string SimParams::to_json_text() const {
    json doc;
    doc["load_curve_anchor_ratio"] = weather.load_curve_anchor_ratio;
    doc["pf_slope"] = weather.pf_slope;
    doc["rating_slope_ka_per_c"] = weather.rating_slope_ka_per_c;
    doc["alpha_lower"] = weather.alpha_lower;
    doc["scenario_direction"] =
        weather.scenario_direction == ScenarioDirection::heat ? "heat" : "cool";
    doc["p1"] = outage.p1;
    doc["p2"] = outage.p2;
    doc["p3"] = outage.p3;
    doc["p4"] = outage.p4;
    doc["p5"] = outage.p5;
    doc["p6"] = outage.p6;
    doc["epsilon"] = outage.epsilon;
    doc["K"] = outage.K;
    doc["k_q_factor"] = outage.k_q_factor;
    doc["line_overload_calibration"] = {{"percent", outage.line_overload_calibration.percent},
                                        {"seconds", outage.line_overload_calibration.seconds}};
    doc["gen_overload_calibration"] = {{"percent", outage.gen_overload_calibration.percent},
                                       {"seconds", outage.gen_overload_calibration.seconds}};
    doc["accidental_trip_s"] = outage.accidental_trip_s;
    doc["v_threshold"] = protection.v_threshold;
    doc["k_shed_mw_per_pu"] = protection.k_shed_mw_per_pu;
    doc["shed_delay_s"] = protection.shed_delay_s;
    doc["shed_min_mw"] = protection.shed_min_mw;
    doc["eta"] = protection.eta;
    doc["redispatch_duration_s"] = protection.redispatch_duration_s;
    doc["max_rounds"] = protection.max_rounds;
    doc["min_shift_factor"] = protection.min_shift_factor;
    doc["rating_basis"] = protection.rating_basis == RatingBasis::initial ? "initial" : "dynamic";
    doc["redispatch_enabled"] = protection.redispatch_enabled;
    doc["vsi_threshold"] = engine.vsi_threshold;
    doc["max_pf_iterations"] = engine.max_pf_iterations;
    doc["pf_tolerance"] = engine.pf_tolerance;
    doc["max_cascade_iterations"] = engine.max_cascade_iterations;
    doc["gamma"] = gamma;
    doc["delta_t"] = delta_t_c;
    doc["center_bus"] = center_bus;
    doc["seed"] = seed;
    return doc.dump(2) + "\n";
}

std::uint64_t SimParams::digest() const {
    // FNV-1a over the canonical JSON rendering.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : to_json_text()) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace cascsim
