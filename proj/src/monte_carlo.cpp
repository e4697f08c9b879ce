#include "cascsim/monte_carlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "cascsim/rng.hpp"

namespace cascsim {
namespace {

MetricStats metric_of(const std::vector<double>& xs) {
    MetricStats m;
    if (xs.empty()) {
        return m;
    }
    double sum = 0.0;
    for (const double x : xs) {
        sum += x;
    }
    m.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (const double x : xs) {
            ss += (x - m.mean) * (x - m.mean);
        }
        m.std_dev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return m;
}

nlohmann::json metric_json(const MetricStats& m) {
    return {{"mean", m.mean}, {"std", m.std_dev}};
}

}  // namespace

std::vector<RunRecord> run_many(const Network& net, const SimParams& base, std::size_t first_run,
                                std::size_t count, std::uint64_t master_seed, unsigned workers) {
    std::vector<RunRecord> records(count);
    if (count == 0) {
        return records;
    }
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count)));

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;

    auto work = [&]() {
        for (;;) {
            const std::size_t slot = next.fetch_add(1);
            if (slot >= count) {
                return;
            }
            try {
                SimParams p = base;
                p.seed = derive_run_seed(master_seed, first_run + slot);
                const CascadeTrace trace = run_cascade(net, p);
                RunRecord& r = records[slot];
                r.seed = p.seed;
                r.center_bus = trace.center_bus_id;
                r.gamma = p.gamma;
                r.delta_t = p.delta_t_c;
                r.lines_tripped = trace.totals.lines;
                r.gens_tripped = trace.totals.generators;
                r.shed_mw = trace.totals.shed_mw;
                r.shed_fraction = trace.shed_fraction();
                r.termination = trace.termination;
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
                return;
            }
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
        for (std::thread& th : pool) {
            th.join();
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }
    return records;
}

BatchStats summarize(std::vector<RunRecord> records, double shed_bin_mw) {
    if (records.empty()) {
        throw std::invalid_argument("summarize requires at least one run record");
    }
    BatchStats stats;
    stats.runs = records.size();

    std::vector<double> lines;
    std::vector<double> gens;
    std::vector<double> totals;
    std::vector<double> shed;
    lines.reserve(records.size());
    gens.reserve(records.size());
    totals.reserve(records.size());
    shed.reserve(records.size());
    double frac_sum = 0.0;
    for (const RunRecord& r : records) {
        lines.push_back(r.lines_tripped);
        gens.push_back(r.gens_tripped);
        totals.push_back(r.lines_tripped + r.gens_tripped);
        shed.push_back(r.shed_mw);
        frac_sum += r.shed_fraction;
    }
    stats.lines = metric_of(lines);
    stats.generators = metric_of(gens);
    stats.total_outages = metric_of(totals);
    stats.shed_mw = metric_of(shed);
    stats.mean_shed_fraction = frac_sum / static_cast<double>(records.size());

    stats.shed_histogram.bin_width_mw = shed_bin_mw;
    for (const double s : shed) {
        const auto bin = static_cast<std::size_t>(std::max(s, 0.0) / shed_bin_mw);
        if (stats.shed_histogram.counts.size() <= bin) {
            stats.shed_histogram.counts.resize(bin + 1, 0);
        }
        ++stats.shed_histogram.counts[bin];
    }
    stats.records = std::move(records);
    return stats;
}

BatchStats run_batch(const Network& net, const SimParams& base, std::size_t n_runs,
                     std::uint64_t master_seed, unsigned workers, ProgressSink* sink,
                     const std::string& stage) {
    if (n_runs == 0) {
        throw std::invalid_argument("batch needs at least one run");
    }
    // Chunk size is fixed (not worker-dependent) so streamed output is
    // byte-identical across parallelism degrees.
    constexpr std::size_t kChunk = 100;
    std::vector<RunRecord> records;
    records.reserve(n_runs);
    for (std::size_t first = 0; first < n_runs; first += kChunk) {
        const std::size_t count = std::min(kChunk, n_runs - first);
        std::vector<RunRecord> chunk = run_many(net, base, first, count, master_seed, workers);
        if (sink && !sink->on_records(chunk, stage)) {
            throw Interrupted{};
        }
        records.insert(records.end(), std::make_move_iterator(chunk.begin()),
                       std::make_move_iterator(chunk.end()));
    }
    return summarize(std::move(records));
}

SweepResult sweep(const Network& net, const SimParams& base, SweepParameter parameter,
                  const std::vector<double>& values, std::size_t n_per_value,
                  std::uint64_t master_seed, unsigned workers, ProgressSink* sink) {
    if (values.empty()) {
        throw std::invalid_argument("sweep needs a nonempty value grid");
    }
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] <= values[i - 1]) {
            throw std::invalid_argument("sweep grid must be strictly increasing");
        }
    }
    SweepResult result;
    result.parameter = parameter;
    for (const double v : values) {
        SimParams p = base;
        if (parameter == SweepParameter::delta_t) {
            p.delta_t_c = v;
        } else {
            p.gamma = v;
        }
        char stage[64];
        std::snprintf(stage, sizeof stage, "%s=%g",
                      parameter == SweepParameter::delta_t ? "delta_t" : "gamma", v);
        SweepPoint point;
        point.value = v;
        point.stats = run_batch(net, p, n_per_value, master_seed, workers, sink, stage);
        result.points.push_back(std::move(point));
    }

    result.knee_value = std::numeric_limits<double>::quiet_NaN();
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < result.points.size(); ++i) {
        const double second_diff = result.points[i + 1].stats.total_outages.mean -
                                   2.0 * result.points[i].stats.total_outages.mean +
                                   result.points[i - 1].stats.total_outages.mean;
        if (second_diff > best) {
            best = second_diff;
            result.knee_value = result.points[i].value;
        }
    }
    return result;
}

VulnerabilityRanking vulnerability_scan(const Network& net, const SimParams& base,
                                        const std::vector<double>& dt_values,
                                        const std::vector<double>& gamma_values,
                                        std::size_t n_per_cell, std::uint64_t master_seed,
                                        unsigned workers, ProgressSink* sink) {
    if (dt_values.empty() || gamma_values.empty()) {
        throw std::invalid_argument("vulnerability scan needs nonempty grids");
    }
    VulnerabilityRanking ranking;
    std::vector<BusVulnerability> scores;
    for (const std::size_t bi : net.load_bus_indices()) {
        BusVulnerability score;
        score.bus_id = net.buses()[bi].id;
        double outage_sum = 0.0;
        double frac_sum = 0.0;
        std::size_t cells = 0;
        for (const double dt : dt_values) {
            for (const double g : gamma_values) {
                SimParams p = base;
                p.center_bus = score.bus_id;
                p.delta_t_c = dt;
                p.gamma = g;
                char stage[96];
                std::snprintf(stage, sizeof stage, "bus=%d delta_t=%g gamma=%g", score.bus_id,
                              dt, g);
                const BatchStats stats =
                    run_batch(net, p, n_per_cell, master_seed, workers, sink, stage);
                outage_sum += stats.total_outages.mean;
                frac_sum += stats.mean_shed_fraction;
                ++cells;
            }
        }
        score.mean_outages = outage_sum / static_cast<double>(cells);
        score.mean_shed_fraction = frac_sum / static_cast<double>(cells);
        scores.push_back(score);
    }

    ranking.by_outages = scores;
    std::sort(ranking.by_outages.begin(), ranking.by_outages.end(),
              [](const BusVulnerability& a, const BusVulnerability& b) {
                  if (a.mean_outages != b.mean_outages) {
                      return a.mean_outages > b.mean_outages;
                  }
                  return a.bus_id < b.bus_id;
              });
    ranking.by_shed_fraction = std::move(scores);
    std::sort(ranking.by_shed_fraction.begin(), ranking.by_shed_fraction.end(),
              [](const BusVulnerability& a, const BusVulnerability& b) {
                  if (a.mean_shed_fraction != b.mean_shed_fraction) {
                      return a.mean_shed_fraction > b.mean_shed_fraction;
                  }
                  return a.bus_id < b.bus_id;
              });
    return ranking;
}

std::string records_to_csv(const std::vector<RunRecord>& records, bool header) {
    std::string out;
    if (header) {
        out += "seed,center_bus,gamma,delta_t,lines_tripped,gens_tripped,shed_mw,termination\n";
    }
    char buf[256];
    for (const RunRecord& r : records) {
        std::snprintf(buf, sizeof buf, "%llu,%d,%.17g,%.17g,%d,%d,%.17g,%s\n",
                      static_cast<unsigned long long>(r.seed), r.center_bus, r.gamma, r.delta_t,
                      r.lines_tripped, r.gens_tripped, r.shed_mw, r.termination.c_str());
        out += buf;
    }
    return out;
}

std::string stats_to_json_text(const BatchStats& stats) {
    nlohmann::json j;
    j["runs"] = stats.runs;
    j["lines"] = metric_json(stats.lines);
    j["generators"] = metric_json(stats.generators);
    j["total_outages"] = metric_json(stats.total_outages);
    j["shed_mw"] = metric_json(stats.shed_mw);
    j["shed_mw"]["histogram"] = {{"bin_width_mw", stats.shed_histogram.bin_width_mw},
                                 {"counts", stats.shed_histogram.counts}};
    j["shed_fraction_mean"] = stats.mean_shed_fraction;
    std::map<std::string, std::size_t> terminations;
    for (const RunRecord& r : stats.records) {
        ++terminations[r.termination];
    }
    j["terminations"] = terminations;
    return j.dump(2) + "\n";
}

std::string sweep_to_json_text(const SweepResult& result) {
    nlohmann::json j;
    j["parameter"] = result.parameter == SweepParameter::delta_t ? "delta_t" : "gamma";
    if (std::isnan(result.knee_value)) {
        j["knee"] = nullptr;
    } else {
        j["knee"] = result.knee_value;
    }
    j["points"] = nlohmann::json::array();
    for (const SweepPoint& p : result.points) {
        nlohmann::json jp;
        jp["value"] = p.value;
        jp["runs"] = p.stats.runs;
        jp["lines"] = metric_json(p.stats.lines);
        jp["generators"] = metric_json(p.stats.generators);
        jp["total_outages"] = metric_json(p.stats.total_outages);
        jp["shed_mw"] = metric_json(p.stats.shed_mw);
        jp["shed_fraction_mean"] = p.stats.mean_shed_fraction;
        j["points"].push_back(std::move(jp));
    }
    return j.dump(2) + "\n";
}

std::string ranking_to_json_text(const VulnerabilityRanking& ranking) {
    auto entries = [](const std::vector<BusVulnerability>& xs) {
        nlohmann::json arr = nlohmann::json::array();
        for (const BusVulnerability& x : xs) {
            arr.push_back({{"bus", x.bus_id},
                           {"mean_outages", x.mean_outages},
                           {"mean_shed_fraction", x.mean_shed_fraction}});
        }
        return arr;
    };
    nlohmann::json j;
    j["by_outages"] = entries(ranking.by_outages);
    j["by_shed_fraction"] = entries(ranking.by_shed_fraction);
    return j.dump(2) + "\n";
}

}  // namespace cascsim
