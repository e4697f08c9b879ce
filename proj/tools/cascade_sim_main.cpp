// cascade-sim: command-line front end for the cascading-failure simulator.
// Subcommands: simulate, batch, sweep, rank, validate-case, print-config.
// Human-readable summaries go to stdout, machine outputs to files, progress
// to stderr. Exit codes: 0 success, 2 configuration or input error, 130 on
// interrupt (partial CSV output is kept intact).

#include <algorithm>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cascsim/engine.hpp"
#include "cascsim/monte_carlo.hpp"
#include "cascsim/network.hpp"
#include "cascsim/params.hpp"
#include "cascsim/powerflow.hpp"

namespace {

volatile std::sig_atomic_t g_interrupted = 0;

void handle_sigint(int) { g_interrupted = 1; }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + path);
    }
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
}

unsigned default_workers() {
    if (const char* env = std::getenv("CASCADE_SIM_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) {
            return static_cast<unsigned>(v);
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// Flag overrides shared by every command that runs simulations. Values are
// funneled through the same JSON merge as --config so one code path validates
// everything and names the offending key on error.
struct CommonOpts {
    std::string case_path;
    std::string config_path;
    std::uint64_t seed = 1;
    int center_bus = 0;
    bool random_center = false;
    double gamma = 0.0;
    double delta_t = 0.0;
    bool no_redispatch = false;
    double p_floor = 0.0;
    unsigned workers = default_workers();

    CLI::Option* seed_opt = nullptr;
    CLI::Option* center_opt = nullptr;
    CLI::Option* random_opt = nullptr;
    CLI::Option* gamma_opt = nullptr;
    CLI::Option* delta_opt = nullptr;
    CLI::Option* p_floor_opt = nullptr;

    void attach(CLI::App* cmd, bool with_case, bool with_disturbance = true) {
        if (with_case) {
            cmd->add_option("--case", case_path, "grid case file (JSON)")->required();
        }
        cmd->add_option("--config", config_path, "parameter file (JSON), overrides defaults");
        seed_opt = cmd->add_option("--seed", seed, "random seed (single run) or master seed");
        if (with_disturbance) {
            center_opt = cmd->add_option("--center-bus", center_bus, "disturbance center bus id");
            random_opt = cmd->add_flag("--random-center", random_center,
                                       "draw the center uniformly among load buses");
            random_opt->excludes(center_opt);
            gamma_opt = cmd->add_option("--gamma", gamma, "disturbance area size factor");
            delta_opt =
                cmd->add_option("--delta-t", delta_t, "temperature disturbance magnitude, C");
        }
        cmd->add_flag("--no-redispatch", no_redispatch, "disable operator re-dispatch");
        p_floor_opt = cmd->add_option("--p-floor", p_floor,
                                      "override both accidental floor probabilities (p1, p4)");
        cmd->add_option("--workers", workers,
                        "worker threads (default: CASCADE_SIM_WORKERS or hardware)");
    }

    cascsim::SimParams resolve() const {
        cascsim::SimParams params;
        if (!config_path.empty()) {
            params.merge_json_text(read_file(config_path));
        }
        nlohmann::json overrides = nlohmann::json::object();
        if (seed_opt && seed_opt->count() > 0) {
            overrides["seed"] = seed;
        }
        if (center_opt && center_opt->count() > 0) {
            overrides["center_bus"] = center_bus;
        }
        if (random_opt && random_opt->count() > 0) {
            overrides["center_bus"] = -1;
        }
        if (gamma_opt && gamma_opt->count() > 0) {
            overrides["gamma"] = gamma;
        }
        if (delta_opt && delta_opt->count() > 0) {
            overrides["delta_t"] = delta_t;
        }
        if (no_redispatch) {
            overrides["redispatch_enabled"] = false;
        }
        if (p_floor_opt && p_floor_opt->count() > 0) {
            overrides["p1"] = p_floor;
            overrides["p4"] = p_floor;
        }
        if (!overrides.empty()) {
            params.merge_json_text(overrides.dump());
        }
        return params;
    }
};

// Streams finished runs into the CSV file and reports progress on stderr.
class CsvSink : public cascsim::ProgressSink {
  public:
    CsvSink(const std::string& path, std::size_t total)
        : path_(path), out_(path, std::ios::binary | std::ios::trunc), total_(total) {
        if (!out_) {
            throw std::runtime_error("cannot write " + path);
        }
        out_ << cascsim::records_to_csv({}, true);
        out_.flush();
    }

    bool on_records(const std::vector<cascsim::RunRecord>& chunk,
                    const std::string& stage) override {
        out_ << cascsim::records_to_csv(chunk, false);
        out_.flush();
        done_ += chunk.size();
        std::cerr << "cascade-sim: " << done_ << "/" << total_ << " runs";
        if (!stage.empty()) {
            std::cerr << " (" << stage << ")";
        }
        std::cerr << "\n";
        return g_interrupted == 0;
    }

    const std::string& path() const { return path_; }

  private:
    std::string path_;
    std::ofstream out_;
    std::size_t total_ = 0;
    std::size_t done_ = 0;
};

int cmd_simulate(const CommonOpts& opts, const std::string& trace_path) {
    const cascsim::SimParams params = opts.resolve();
    const cascsim::Network net = cascsim::Network::from_json_file(opts.case_path);
    const cascsim::CascadeTrace trace = cascsim::run_cascade(net, params);
    write_file(trace_path, trace.to_json_text());
    const double t_end = trace.events.empty() ? 0.0 : trace.events.back().t_s;
    std::printf(
        "termination=%s events=%zu lines=%d generators=%d shed_mw=%.2f t_end_s=%.2f "
        "center_bus=%d trace=%s\n",
        trace.termination.c_str(), trace.events.size(), trace.totals.lines,
        trace.totals.generators, trace.totals.shed_mw, t_end, trace.center_bus_id,
        trace_path.c_str());
    return 0;
}

int cmd_batch(const CommonOpts& opts, std::size_t runs, const std::string& csv_path,
              const std::string& summary_path) {
    const cascsim::SimParams params = opts.resolve();
    const cascsim::Network net = cascsim::Network::from_json_file(opts.case_path);
    CsvSink sink(csv_path, runs);
    cascsim::BatchStats stats;
    try {
        stats = cascsim::run_batch(net, params, runs, params.seed, opts.workers, &sink);
    } catch (const cascsim::Interrupted&) {
        std::cerr << "cascade-sim: interrupted, partial results in " << csv_path << "\n";
        return 130;
    }
    write_file(summary_path, cascsim::stats_to_json_text(stats));
    std::printf(
        "runs=%zu mean_outages=%.4f std_outages=%.4f mean_shed_mw=%.2f csv=%s summary=%s\n",
        stats.runs, stats.total_outages.mean, stats.total_outages.std_dev, stats.shed_mw.mean,
        csv_path.c_str(), summary_path.c_str());
    return 0;
}

int cmd_sweep(const CommonOpts& opts, const std::string& param_name,
              const std::vector<double>& values, std::size_t runs, const std::string& csv_path,
              const std::string& out_path) {
    cascsim::SweepParameter parameter;
    if (param_name == "delta-t" || param_name == "delta_t") {
        parameter = cascsim::SweepParameter::delta_t;
    } else if (param_name == "gamma") {
        parameter = cascsim::SweepParameter::gamma;
    } else {
        throw std::runtime_error("config key '--param': must be delta-t or gamma");
    }
    const cascsim::SimParams params = opts.resolve();
    const cascsim::Network net = cascsim::Network::from_json_file(opts.case_path);
    CsvSink sink(csv_path, runs * values.size());
    cascsim::SweepResult result;
    try {
        result = cascsim::sweep(net, params, parameter, values, runs, params.seed, opts.workers,
                                &sink);
    } catch (const cascsim::Interrupted&) {
        std::cerr << "cascade-sim: interrupted, partial results in " << csv_path << "\n";
        return 130;
    }
    write_file(out_path, cascsim::sweep_to_json_text(result));
    for (const cascsim::SweepPoint& p : result.points) {
        std::printf("%s=%-8g mean_outages=%.4f mean_shed_mw=%.2f\n", param_name.c_str(), p.value,
                    p.stats.total_outages.mean, p.stats.shed_mw.mean);
    }
    if (!std::isnan(result.knee_value)) {
        std::printf("knee=%g\n", result.knee_value);
    }
    std::printf("csv=%s summary=%s\n", csv_path.c_str(), out_path.c_str());
    return 0;
}

int cmd_rank(const CommonOpts& opts, const std::vector<double>& dt_values,
             const std::vector<double>& gamma_values, std::size_t runs,
             const std::string& csv_path, const std::string& out_path) {
    const cascsim::SimParams params = opts.resolve();
    const cascsim::Network net = cascsim::Network::from_json_file(opts.case_path);
    const std::size_t total =
        runs * dt_values.size() * gamma_values.size() * net.load_bus_indices().size();
    CsvSink sink(csv_path, total);
    cascsim::VulnerabilityRanking ranking;
    try {
        ranking = cascsim::vulnerability_scan(net, params, dt_values, gamma_values, runs,
                                              params.seed, opts.workers, &sink);
    } catch (const cascsim::Interrupted&) {
        std::cerr << "cascade-sim: interrupted, partial results in " << csv_path << "\n";
        return 130;
    }
    write_file(out_path, cascsim::ranking_to_json_text(ranking));
    const std::size_t top = std::min<std::size_t>(10, ranking.by_outages.size());
    std::printf("top load buses by mean outage count:\n");
    for (std::size_t i = 0; i < top; ++i) {
        const cascsim::BusVulnerability& v = ranking.by_outages[i];
        std::printf("  %2zu. bus %-4d mean_outages=%.4f mean_shed_fraction=%.4f\n", i + 1,
                    v.bus_id, v.mean_outages, v.mean_shed_fraction);
    }
    std::printf("csv=%s ranking=%s\n", csv_path.c_str(), out_path.c_str());
    return 0;
}

int cmd_validate_case(const std::string& case_path) {
    const cascsim::Network net = cascsim::Network::from_json_file(case_path);
    cascsim::SystemState state = cascsim::SystemState::initial(net);
    const std::vector<cascsim::Island> islands = cascsim::find_islands(net, state);
    cascsim::EngineParams engine;
    const cascsim::PowerFlowSolution sol = cascsim::solve_power_flow(net, state, islands, engine);
    if (!sol.converged) {
        throw std::runtime_error("base case power flow did not converge");
    }
    double v_min = 10.0;
    double v_max = 0.0;
    for (std::size_t bi = 0; bi < net.buses().size(); ++bi) {
        if (sol.bus_energized[bi]) {
            v_min = std::min(v_min, sol.bus_v_pu[bi]);
            v_max = std::max(v_max, sol.bus_v_pu[bi]);
        }
    }
    double slack_p = 0.0;
    double total_gen = 0.0;
    for (std::size_t gi = 0; gi < net.generators().size(); ++gi) {
        total_gen += sol.gen_p_mw[gi];
        if (state.gen_is_slack[gi]) {
            slack_p = sol.gen_p_mw[gi];
        }
    }
    std::printf(
        "case ok: %zu buses, %zu branches, %zu generators, %zu shunts\n"
        "base solve: %.2f MW served, mismatch %.3e pu, V in [%.4f, %.4f], VSI %.4f\n"
        "dispatch: %.2f MW total generation, slack unit at %.2f MW, losses %.2f MW\n",
        net.buses().size(), net.branches().size(), net.generators().size(), net.shunts().size(),
        net.total_load_nominal_mw(), sol.max_mismatch_pu, v_min, v_max, sol.vsi, total_gen,
        slack_p, total_gen - net.total_load_nominal_mw());

    std::vector<std::size_t> order(net.branches().size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    auto loading = [&](std::size_t li) {
        const double r = net.branches()[li].rating_initial_mva;
        return r > 0.0 ? sol.flow_mva[li] / r : 0.0;
    };
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return loading(a) > loading(b); });
    std::printf("most loaded branches:\n");
    for (std::size_t i = 0; i < std::min<std::size_t>(5, order.size()); ++i) {
        const cascsim::Branch& l = net.branches()[order[i]];
        std::printf("  %d-%d (id %d): %.1f / %.0f MVA (%.1f%%)\n", l.from_bus, l.to_bus, l.id,
                    sol.flow_mva[order[i]], l.rating_initial_mva, 100.0 * loading(order[i]));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    std::signal(SIGINT, handle_sigint);

    CLI::App app{"cascading-failure simulator for temperature-disturbed transmission grids"};
    app.require_subcommand(1);

    // simulate
    auto* simulate = app.add_subcommand("simulate", "run one cascade and write its trace");
    CommonOpts sim_opts;
    sim_opts.attach(simulate, true);
    std::string trace_path = "trace.json";
    simulate->add_option("--out", trace_path, "trace output path (JSON)");

    // batch
    auto* batch = app.add_subcommand("batch", "run many cascades and aggregate statistics");
    CommonOpts batch_opts;
    batch_opts.attach(batch, true);
    std::size_t batch_runs = 1000;
    std::string batch_csv = "batch_runs.csv";
    std::string batch_summary = "batch_summary.json";
    batch->add_option("--runs", batch_runs, "number of runs");
    batch->add_option("--csv", batch_csv, "per-run CSV output path");
    batch->add_option("--summary", batch_summary, "summary JSON output path");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "batch at each value of a parameter grid");
    CommonOpts sweep_opts;
    sweep_opts.attach(sweep_cmd, true);
    std::string sweep_param;
    std::vector<double> sweep_values;
    std::size_t sweep_runs = 200;
    std::string sweep_csv = "sweep_runs.csv";
    std::string sweep_out = "sweep.json";
    sweep_cmd->add_option("--param", sweep_param, "swept parameter: delta-t or gamma")
        ->required();
    sweep_cmd->add_option("--values", sweep_values, "comma-separated grid values")
        ->required()
        ->delimiter(',');
    sweep_cmd->add_option("--runs", sweep_runs, "runs per grid value");
    sweep_cmd->add_option("--csv", sweep_csv, "per-run CSV output path");
    sweep_cmd->add_option("--out", sweep_out, "sweep summary JSON output path");

    // rank
    auto* rank = app.add_subcommand("rank", "vulnerability scan over every load bus");
    CommonOpts rank_opts;
    rank_opts.attach(rank, true, false);
    std::vector<double> rank_dt{8.0, 10.0, 11.0, 15.0};
    std::vector<double> rank_gamma{0.05, 0.06, 0.07, 0.08};
    std::size_t rank_runs = 50;
    std::string rank_csv = "rank_runs.csv";
    std::string rank_out = "rank.json";
    rank->add_option("--dt", rank_dt, "comma-separated temperature grid")->delimiter(',');
    rank->add_option("--gamma", rank_gamma, "comma-separated area size grid")->delimiter(',');
    rank->add_option("--runs", rank_runs, "runs per (bus, delta-t, gamma) cell");
    rank->add_option("--csv", rank_csv, "per-run CSV output path");
    rank->add_option("--out", rank_out, "ranking JSON output path");

    // validate-case
    auto* validate = app.add_subcommand("validate-case", "check a case file and its base solve");
    std::string validate_path;
    validate->add_option("--case", validate_path, "grid case file (JSON)")->required();

    // print-config
    auto* print_config = app.add_subcommand("print-config", "print the resolved configuration");
    CommonOpts print_opts;
    print_opts.attach(print_config, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);  // --help
        }
        app.exit(e);
        return 2;
    }

    try {
        if (simulate->parsed()) {
            return cmd_simulate(sim_opts, trace_path);
        }
        if (batch->parsed()) {
            return cmd_batch(batch_opts, batch_runs, batch_csv, batch_summary);
        }
        if (sweep_cmd->parsed()) {
            return cmd_sweep(sweep_opts, sweep_param, sweep_values, sweep_runs, sweep_csv,
                             sweep_out);
        }
        if (rank->parsed()) {
            return cmd_rank(rank_opts, rank_dt, rank_gamma, rank_runs, rank_csv, rank_out);
        }
        if (validate->parsed()) {
            return cmd_validate_case(validate_path);
        }
        if (print_config->parsed()) {
            std::fputs(print_opts.resolve().to_json_text().c_str(), stdout);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "cascade-sim: error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
