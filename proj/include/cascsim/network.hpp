#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cascsim/geo.hpp"

namespace cascsim {

inline constexpr double kBaseMva = 100.0;

enum class BusKind { load, generator, slack_capable };

struct Bus {
    int id = 0;
    BusKind kind = BusKind::load;
    double base_kv = 0.0;
    GeoPoint position;
    double p_load_nominal_mw = 0.0;
    double q_load_nominal_mvar = 0.0;

    // Initial power factor; 1 when the bus carries no load.
    double pf_nominal() const;
};

struct Branch {
    int id = 0;
    int from_bus = 0;  // external bus ids
    int to_bus = 0;
    double resistance_pu = 0.0;
    double reactance_pu = 0.0;
    double charging_pu = 0.0;  // total line charging susceptance
    double rating_initial_mva = 0.0;
    double rated_kv = 0.0;
    // Underground cables and transformers keep their nameplate rating; only
    // overhead conductors respond to ambient-temperature rating adjustment.
    bool weather_exempt = false;
};

struct Generator {
    int id = 0;
    int bus = 0;
    double p_setpoint_mw = 0.0;  // also the nominal dispatch P_i^0
    double p_max_mw = 0.0;
    double q_min_mvar = 0.0;
    double q_max_mvar = 0.0;
    double v_setpoint_pu = 1.0;
    bool is_slack = false;
};

enum class ShuntAttachEnd { from, to };

struct Shunt {
    int id = 0;
    // Exactly one attachment: a bus, or one end of a branch.
    std::optional<int> attach_bus;
    std::optional<int> attach_branch;
    ShuntAttachEnd end = ShuntAttachEnd::from;
    double q_mvar = 0.0;  // injection at 1.0 pu voltage; reactors are negative
    bool auto_disconnect = false;
};

// Immutable grid description. Index-based lookups are precomputed so the
// simulation hot path never touches the id maps.
class Network {
  public:
    static Network from_json_text(const std::string& text);
    static Network from_json_file(const std::string& path);

    std::string to_json_text() const;

    const std::vector<Bus>& buses() const { return buses_; }
    const std::vector<Branch>& branches() const { return branches_; }
    const std::vector<Generator>& generators() const { return generators_; }
    const std::vector<Shunt>& shunts() const { return shunts_; }

    std::size_t bus_index(int bus_id) const;
    std::size_t branch_index(int branch_id) const;
    std::size_t generator_index(int gen_id) const;

    // Precomputed adjacency: branch indices per bus index, generator indices
    // per bus index, shunt indices per branch index.
    const std::vector<std::vector<std::size_t>>& branches_at_bus() const { return branches_at_bus_; }
    const std::vector<std::vector<std::size_t>>& generators_at_bus() const {
        return generators_at_bus_;
    }
    const std::vector<std::vector<std::size_t>>& shunts_on_branch() const {
        return shunts_on_branch_;
    }
    const std::vector<std::vector<std::size_t>>& shunts_at_bus() const { return shunts_at_bus_; }

    std::size_t from_index(std::size_t branch_idx) const { return branch_from_idx_[branch_idx]; }
    std::size_t to_index(std::size_t branch_idx) const { return branch_to_idx_[branch_idx]; }

    // Bus a shunt electrically connects to (the branch end for branch-end
    // shunts). Attachment is independent of branch status; the engine flips
    // auto_disconnect shunts out of service together with their branch.
    std::size_t shunt_bus(std::size_t shunt_idx) const { return shunt_bus_idx_[shunt_idx]; }

    std::vector<GeoPoint> bus_positions() const;
    std::vector<std::size_t> load_bus_indices() const;  // buses with nominal load > 0
    double total_load_nominal_mw() const;

  private:
    void build_indexes();
    void validate() const;

    std::vector<Bus> buses_;
    std::vector<Branch> branches_;
    std::vector<Generator> generators_;
    std::vector<Shunt> shunts_;

    std::vector<std::size_t> branch_from_idx_;
    std::vector<std::size_t> branch_to_idx_;
    std::vector<std::vector<std::size_t>> branches_at_bus_;
    std::vector<std::vector<std::size_t>> generators_at_bus_;
    std::vector<std::vector<std::size_t>> shunts_on_branch_;
    std::vector<std::vector<std::size_t>> shunts_at_bus_;
    std::vector<std::size_t> shunt_bus_idx_;
    std::unordered_map<int, std::size_t> bus_index_map_;
    std::unordered_map<int, std::size_t> branch_index_map_;
    std::unordered_map<int, std::size_t> gen_index_map_;
};

// Mutable per-run operating state. Everything is indexed positionally,
// parallel to the Network vectors.
struct SystemState {
    std::vector<bool> branch_in_service;
    std::vector<bool> gen_in_service;
    std::vector<bool> shunt_in_service;

    std::vector<double> load_p_mw;   // current load, after temperature scaling and shedding
    std::vector<double> load_q_mvar;
    std::vector<double> gen_p_mw;    // current setpoints
    std::vector<bool> gen_is_slack;  // island slack roles, maintained by the engine

    // Warm-start voltage estimate carried between solves.
    std::vector<double> bus_v_pu;
    std::vector<double> bus_theta_rad;

    static SystemState initial(const Network& net);
};

struct Island {
    std::vector<std::size_t> bus_indices;
    bool energized = false;  // has at least one in-service generator
};

// Connected components over in-service branches, ordered by smallest
// contained bus index so the decomposition is deterministic.
std::vector<Island> find_islands(const Network& net, const SystemState& state);

// Sum of current active load over buses in energized islands.
double total_served_load_mw(const Network& net, const SystemState& state,
                            const std::vector<Island>& islands);

}  // namespace cascsim
