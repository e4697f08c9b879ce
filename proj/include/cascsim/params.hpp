#pragma once

#include <cstdint>
#include <string>

namespace cascsim {

enum class ScenarioDirection { heat, cool };
enum class RatingBasis { initial, dynamic };

// Reference temperatures of the load-temperature curve. The two unit-load
// crossings and the location of the minimum are fixed properties of the
// normalized demand data the curve reproduces.
inline constexpr double kTempRefHighC = 24.21;
inline constexpr double kTempRefLowC = 9.91;
inline constexpr double kTempMinC = 18.5;

struct WeatherParams {
    double load_curve_anchor_ratio = 1.5183;  // load multiplier 10 C above the high reference
    double pf_slope = 0.001;                  // per degree C
    double rating_slope_ka_per_c = 0.02;
    double alpha_lower = 1.0;  // vegetation factor lower bound; 1 = deterministic ratings
    ScenarioDirection scenario_direction = ScenarioDirection::heat;

    double base_temp_c() const {
        return scenario_direction == ScenarioDirection::heat ? kTempRefHighC : kTempRefLowC;
    }
};

struct OutageParams {
    double p1 = 0.001;  // line floor probability
    double p2 = 0.3;
    double p3 = 1.0;
    double p4 = 0.001;  // generator floor probability
    double p5 = 0.3;
    double p6 = 1.0;
    double epsilon = 0.01;  // line ratio margin where probability ramps to p2
    double K = 1.5;         // line ratio where probability saturates at p3
    double k_q_factor = 1.5;
    struct Calibration {
        double percent = 50.0;
        double seconds = 20.0;
    };
    Calibration line_overload_calibration{50.0, 20.0};
    Calibration gen_overload_calibration{20.0, 1800.0};
    double accidental_trip_s = 0.2;
};

struct ProtectionParams {
    double v_threshold = 0.9;
    double k_shed_mw_per_pu = 600.0;
    double shed_delay_s = 3.0;
    // A shed below this size means the proportional controller has reached
    // its equilibrium at the threshold voltage; the bus relay then stands
    // down until some other event changes the system.
    double shed_min_mw = 0.05;
    double eta = 1.05;
    double redispatch_duration_s = 60.0;
    int max_rounds = 10;
    // Eligibility floor on the shift factor, mirroring the 5% distribution
    // factor rule used for transmission loading relief: a generator with
    // less leverage than this moves a lot of power for almost no relief.
    double min_shift_factor = 0.05;
    RatingBasis rating_basis = RatingBasis::initial;
    bool redispatch_enabled = true;
};

struct EngineParams {
    double vsi_threshold = 0.0;
    int max_pf_iterations = 30;
    double pf_tolerance = 1e-8;
    int max_cascade_iterations = 20000;  // safety valve, never the intended stop
};

struct SimParams {
    WeatherParams weather;
    OutageParams outage;
    ProtectionParams protection;
    EngineParams engine;

    // Disturbance description for a single run.
    double gamma = 0.07;
    double delta_t_c = 11.0;
    int center_bus = -1;  // -1 = draw a load bus uniformly from the run's stream
    std::uint64_t seed = 1;

    // Resolved configuration as canonical JSON (for print-config and the
    // trace digest).
    std::string to_json_text() const;
    std::uint64_t digest() const;

    // Layered construction: defaults, then file overrides, then caller
    // overrides applied by the CLI. Unknown keys are rejected.
    static SimParams from_json_text(const std::string& text);
    void merge_json_text(const std::string& text);
};

}  // namespace cascsim
