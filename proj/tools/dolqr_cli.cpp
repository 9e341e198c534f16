// Command-line driver: `run` executes one experiment config, `sweep` compares
// network topologies under common random numbers, `table1` reproduces the
// horizon sweep of the averaged regret.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dolqr/config.hpp"
#include "dolqr/harness.hpp"

namespace {

using dolqr::ExperimentConfig;
using dolqr::McAggregate;
using dolqr::NetworkSpec;

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<int> horizon;
    bool full = false;
    bool debug_dumps = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON experiment config");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "master seed override");
    cmd->add_option("--trials", args.trials, "Monte-Carlo trial count override");
    cmd->add_option("--horizon", args.horizon, "horizon T override");
    cmd->add_flag("--full", args.full, "full-scale profile (longer horizons, 50 trials)");
    cmd->add_flag("--debug-dumps", args.debug_dumps, "write per-round diagnostic CSVs");
}

ExperimentConfig resolve_config(const CommonArgs& args) {
    ExperimentConfig cfg;
    if (!args.config_path.empty()) cfg = dolqr::load_config_file(args.config_path);
    if (args.seed) cfg.seed = *args.seed;
    if (args.trials) cfg.trials = *args.trials;
    if (args.horizon) cfg.T = *args.horizon;
    if (args.debug_dumps) {
        cfg.debug_dumps = true;
        cfg.debug_dir = args.out_dir;
        std::filesystem::create_directories(args.out_dir);
    }
    dolqr::validate_config(cfg);
    return cfg;
}

void print_summary(const std::string& label, const McAggregate& agg) {
    std::printf("%s: averaged regret %.6e", label.c_str(), agg.averaged_regret_mean);
    if (agg.trials > 1) std::printf(" (stderr %.3e)", agg.averaged_regret_stderr);
    std::printf(", window %.6e, late spread %.4f, trials %d\n",
                agg.averaged_regret_window_mean, agg.late_spread_mean, agg.trials);
    if (agg.flagged_trials > 0)
        std::printf("  note: %d flagged trial(s)\n", agg.flagged_trials);
}

int cmd_run(const CommonArgs& args) {
    ExperimentConfig cfg = resolve_config(args);
    auto start = std::chrono::steady_clock::now();
    McAggregate agg = dolqr::monte_carlo(cfg);
    auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    dolqr::export_results(cfg, agg, args.out_dir);
    print_summary("run T=" + std::to_string(cfg.T), agg);
    std::printf("wall time %.1f s, outputs in %s\n", secs, args.out_dir.c_str());
    return 0;
}

std::vector<NetworkSpec> default_topologies(int m) {
    NetworkSpec a;  // cycle, two neighbors
    a.kind = NetworkSpec::Kind::Cycle;
    a.m = m;
    a.neighbors_per_side = 1;
    a.self_weight = 0.6;
    NetworkSpec b = a;  // cycle, six neighbors
    b.neighbors_per_side = 3;
    NetworkSpec c;
    c.kind = NetworkSpec::Kind::Complete;
    c.m = m;
    return {a, b, c};
}

int cmd_sweep(const CommonArgs& args) {
    ExperimentConfig cfg = resolve_config(args);
    auto topologies = default_topologies(cfg.network.m);
    auto results = dolqr::topology_comparison(cfg, topologies);
    std::filesystem::create_directories(args.out_dir);
    std::ofstream f(args.out_dir + "/sweep_summary.csv");
    f << "topology,beta,averaged_regret,stderr,late_spread,trials\n";
    for (const auto& r : results) {
        dolqr::export_results(cfg, r.aggregate, args.out_dir + "/" + r.name);
        f << r.name << ',' << dolqr::build_network(r.spec).beta() << ','
          << r.aggregate.averaged_regret_mean << ',' << r.aggregate.averaged_regret_stderr << ','
          << r.aggregate.late_spread_mean << ',' << r.aggregate.trials << '\n';
        print_summary(r.name, r.aggregate);
    }
    return 0;
}

int cmd_table1(const CommonArgs& args) {
    ExperimentConfig cfg = resolve_config(args);
    std::vector<int> horizons;
    if (args.full) {
        horizons = {20000, 30000, 40000, 50000, 60000};
        if (!args.trials) cfg.trials = 50;
        if (cfg.export_stride == 1) cfg.export_stride = 100;
    } else {
        horizons = {5000, 10000, 20000};
        if (!args.trials) cfg.trials = 10;
    }
    if (args.horizon) horizons = {*args.horizon};

    std::filesystem::create_directories(args.out_dir);
    std::ofstream f(args.out_dir + "/table1.csv");
    f << "horizon,averaged_regret_mean,averaged_regret_stderr,trials\n";
    for (int T : horizons) {
        ExperimentConfig c = cfg;
        c.T = T;
        auto start = std::chrono::steady_clock::now();
        McAggregate agg = dolqr::monte_carlo(c);
        auto secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        dolqr::export_results(c, agg, args.out_dir + "/T" + std::to_string(T));
        f << T << ',' << agg.averaged_regret_mean << ',' << agg.averaged_regret_stderr << ','
          << agg.trials << '\n';
        print_summary("T=" + std::to_string(T), agg);
        std::printf("  wall time %.1f s\n", secs);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed online LQR simulation for LTI agent networks"};
    app.require_subcommand(1);

    CommonArgs run_args, sweep_args, table_args;
    CLI::App* run = app.add_subcommand("run", "run one experiment config");
    add_common(run, run_args);
    CLI::App* sweep = app.add_subcommand("sweep", "compare network topologies");
    add_common(sweep, sweep_args);
    CLI::App* table1 = app.add_subcommand("table1", "averaged regret across horizons");
    add_common(table1, table_args);

    CLI11_PARSE(app, argc, argv);
    try {
        if (run->parsed()) return cmd_run(run_args);
        if (sweep->parsed()) return cmd_sweep(sweep_args);
        if (table1->parsed()) return cmd_table1(table_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
