#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dolqr/config.hpp"
#include "dolqr/costs.hpp"

namespace dolqr {

struct PhaseDefaults {
    int T0 = 0;
    bool capped = false;  // the T/2 cap was binding
};

// T0 = ceil(T^{2/3} log(T / delta)), capped at T / 2.
PhaseDefaults default_phases(int T, double delta);

// Self-tuning knobs for the identification stage at horizon T.
double extra_spread_tolerance(int T);  // T^{-1/3} / 10
double extra_cap_scale(int T);         // 10 log(T^{1/3}); cap = scale / (-log tau_hat)

// Four-term minimum-horizon diagnostic; never used as a gate.
double minimum_horizon(const ExperimentConfig& cfg);

struct RegretSeries {
    int stride = 1;
    std::vector<int> rounds;   // recorded rounds (stride multiples plus the final round)
    MatrixXd cum_alg;          // recorded rows x agents
    MatrixXd cum_bench;
};

struct TrialResult {
    RegretSeries series;
    VectorXd regret_final;      // per agent, under the configured accounting
    double averaged_regret = 0.0;       // mean_j regret_j(T) / T
    double averaged_regret_window = 0.0;  // same, with rounds 1..Ts-1 excluded from both sides
    double alg_total_mean = 0.0;
    double bench_total_mean = 0.0;
    double late_spread_mean = 0.0;  // mean consensus spread over the last quarter of rounds
    VectorXd surrogate;             // per-agent sum_t L_t . (Sigma_{j,t} - Sigma^s)
    long rho_failures = 0;
    long knorm_failures = 0;
    long state_flags = 0;
    long policy_count = 0;
    double dykstra_cycles_mean = 0.0;
    double max_feasibility_gap = 0.0;
    double estimation_error_max = 0.0;
    double estimate_spread = 0.0;
    int T0 = 0, T1 = 0, Ts = 0;
    double alpha = 0.0, tau_hat = 0.0;
    bool flagged = false;
    std::string flag_reason;
};

TrialResult run_trial(const ExperimentConfig& cfg, int trial_index);
TrialResult run_trial(const ExperimentConfig& cfg, const CostSchedule& schedule, int trial_index);

struct McAggregate {
    int trials = 0;
    double averaged_regret_mean = 0.0;
    double averaged_regret_stderr = 0.0;  // NaN when trials == 1
    double averaged_regret_window_mean = 0.0;
    double averaged_regret_window_stderr = 0.0;
    double late_spread_mean = 0.0;
    double alg_total_mean = 0.0;
    double bench_total_mean = 0.0;
    double knorm_failure_rate = 0.0;
    double rho_failure_rate = 0.0;
    long state_flags = 0;
    int flagged_trials = 0;
    std::vector<TrialResult> per_trial;
};

McAggregate monte_carlo(const ExperimentConfig& cfg);

struct TopologyResult {
    std::string name;
    NetworkSpec spec;
    McAggregate aggregate;
};

// Same schedule and noise seeds across topologies (common random numbers).
std::vector<TopologyResult> topology_comparison(const ExperimentConfig& cfg,
                                                const std::vector<NetworkSpec>& topologies);

// Writes regret_series.csv, summary.csv and run_meta.json under out_dir.
void export_results(const ExperimentConfig& cfg, const McAggregate& agg,
                    const std::string& out_dir);

}  // namespace dolqr
