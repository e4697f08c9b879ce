#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cascsim/engine.hpp"
#include "cascsim/network.hpp"
#include "cascsim/params.hpp"

namespace cascsim {

// One row of a batch: the per-run identity plus the trace totals.
struct RunRecord {
    std::uint64_t seed = 0;
    int center_bus = 0;
    double gamma = 0.0;
    double delta_t = 0.0;
    int lines_tripped = 0;
    int gens_tripped = 0;
    double shed_mw = 0.0;
    double shed_fraction = 0.0;
    std::string termination;
};

struct Histogram {
    double bin_width_mw = 100.0;
    std::vector<std::size_t> counts;  // bin i covers [i*w, (i+1)*w)
};

struct MetricStats {
    double mean = 0.0;
    double std_dev = 0.0;  // unbiased, n-1 denominator; 0 for a single sample
};

struct BatchStats {
    std::size_t runs = 0;
    MetricStats lines;
    MetricStats generators;
    MetricStats total_outages;
    MetricStats shed_mw;
    double mean_shed_fraction = 0.0;
    Histogram shed_histogram;
    std::vector<RunRecord> records;  // run-index order
};

// Streaming observer for the batch drivers: receives each finished chunk of
// run records in index order. Returning false stops the driver, which then
// raises Interrupted so callers can finish with partial outputs intact.
class ProgressSink {
  public:
    virtual ~ProgressSink() = default;
    virtual bool on_records(const std::vector<RunRecord>& chunk, const std::string& stage) = 0;
};

struct Interrupted {};

// Runs [first_run, first_run + count) with per-run seeds derived from
// (master_seed, absolute run index). The slot a result lands in depends only
// on its index, so worker count and scheduling cannot change the output.
std::vector<RunRecord> run_many(const Network& net, const SimParams& base, std::size_t first_run,
                                std::size_t count, std::uint64_t master_seed, unsigned workers);

BatchStats summarize(std::vector<RunRecord> records, double shed_bin_mw = 100.0);

BatchStats run_batch(const Network& net, const SimParams& base, std::size_t n_runs,
                     std::uint64_t master_seed, unsigned workers, ProgressSink* sink = nullptr,
                     const std::string& stage = "");

enum class SweepParameter { delta_t, gamma };

struct SweepPoint {
    double value = 0.0;
    BatchStats stats;
};

struct SweepResult {
    SweepParameter parameter = SweepParameter::delta_t;
    std::vector<SweepPoint> points;
    // Grid value with the largest discrete second difference of the mean
    // outage curve; NaN when the grid has fewer than three points.
    double knee_value = 0.0;
};

// Same master seed at every grid value: common random numbers keep the
// mean-outage curve comparable across values at moderate run counts.
SweepResult sweep(const Network& net, const SimParams& base, SweepParameter parameter,
                  const std::vector<double>& values, std::size_t n_per_value,
                  std::uint64_t master_seed, unsigned workers, ProgressSink* sink = nullptr);

struct BusVulnerability {
    int bus_id = 0;
    double mean_outages = 0.0;
    double mean_shed_fraction = 0.0;
};

struct VulnerabilityRanking {
    std::vector<BusVulnerability> by_outages;        // descending mean outage count
    std::vector<BusVulnerability> by_shed_fraction;  // descending mean shed fraction
};

// Centers the disturbance grid on every load bus in turn and averages the
// outage count and shed fraction over all (delta_t, gamma) cells.
VulnerabilityRanking vulnerability_scan(const Network& net, const SimParams& base,
                                        const std::vector<double>& dt_values,
                                        const std::vector<double>& gamma_values,
                                        std::size_t n_per_cell, std::uint64_t master_seed,
                                        unsigned workers, ProgressSink* sink = nullptr);

std::string records_to_csv(const std::vector<RunRecord>& records, bool header);
std::string stats_to_json_text(const BatchStats& stats);
std::string sweep_to_json_text(const SweepResult& result);
std::string ranking_to_json_text(const VulnerabilityRanking& ranking);

}  // namespace cascsim
