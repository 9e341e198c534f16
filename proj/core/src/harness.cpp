#include "dolqr/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <thread>

#include <json.hpp>

#include "dolqr/controller.hpp"
#include "dolqr/errors.hpp"
#include "dolqr/matops.hpp"
#include "dolqr/sysid.hpp"

namespace dolqr {

namespace {

// Stream roles for seed derivation.
constexpr std::uint64_t kScheduleRole = 0x5c4ed;
constexpr std::uint64_t kPlantRole = 0x9a17;
constexpr std::uint64_t kActionRole = 0xac71;
constexpr std::uint64_t kExtraInitRole = 0xe17a;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

PhaseDefaults default_phases(int T, double delta) {
    if (T < 2 || delta <= 0.0 || delta >= 1.0)
        throw ContractViolation("default_phases: need T >= 2 and delta in (0, 1)");
    PhaseDefaults out;
    double raw = std::ceil(std::pow(static_cast<double>(T), 2.0 / 3.0) *
                           std::log(static_cast<double>(T) / delta));
    double cap = static_cast<double>(T) / 2.0;
    if (raw > cap) {
        out.T0 = static_cast<int>(cap);
        out.capped = true;
    } else {
        out.T0 = static_cast<int>(raw);
    }
    return out;
}

double extra_spread_tolerance(int T) {
    return std::pow(static_cast<double>(T), -1.0 / 3.0) / 10.0;
}

double extra_cap_scale(int T) {
    return 10.0 * std::log(std::pow(static_cast<double>(T), 1.0 / 3.0));
}

double minimum_horizon(const ExperimentConfig& cfg) {
    const LtiSystem sys = build_system(cfg);
    const MixingMatrix net = build_network(cfg.network);
    const int m = net.size();
    const int n = sys.n();
    const double lambda2 = sys.W().trace();
    const double nu = cfg.nu ? *cfg.nu
                             : 2.0 * std::pow(cfg.kappa, 4) * lambda2 / cfg.gamma;
    const double sigma2 = sys.sigma2();
    const double kbar2 = nu / sigma2;                    // kappa_bar^2
    const double gbar = 1.0 / (2.0 * kbar2);             // gamma_bar
    const double eps_coeff = 1.0 + 38.0 * std::sqrt(2.0) * n / std::sqrt(double(m));

    const double term1 = std::pow(eps_coeff * 4.0 * kbar2 / gbar, 3.0);
    double term2 = std::numeric_limits<double>::infinity();
    if (net.beta() < 1.0) {
        term2 = std::pow(3.0 * std::sqrt(double(m)) / (1.0 - net.beta()) *
                             (2.0 * cfg.zeta + 4.0 * cfg.C) * 2.0 / (gbar * sigma2),
                         3.0);
    }
    const double term3 =
        std::pow(200.0 * (n * std::log(12.0) + std::log(3.0 * m / cfg.delta)), 1.5);
    const double rho = m * 144.0 * cfg.theta * cfg.theta * std::pow(cfg.kappa0, 4) /
                       (cfg.gamma0 * cfg.gamma0) *
                       (1.0 + cfg.theta * cfg.theta * cfg.kappa0 * cfg.kappa0);
    const double term4 = std::pow(4.0 * rho + 6.0 * m + 3.0 * cfg.d, 1.5);
    return std::max(std::max(term1, term2), std::max(term3, term4));
}

namespace {

struct TrialContext {
    LtiSystem sys;
    MixingMatrix net;
    Benchmark bench;
    PriorController prior;
    double nu;
    double eta;
    double lambda2;
};

TrialContext make_context(const ExperimentConfig& cfg) {
    LtiSystem sys = build_system(cfg);
    MixingMatrix net = build_network(cfg.network);
    if (!net.connected())
        throw ContractViolation("run_trial: network is not connected (beta >= 1)");
    Benchmark bench = benchmark_policy(sys, cfg.kappa, cfg.gamma);
    MatrixXd K0 = cfg.K0 ? cfg.K0->materialize(cfg.k, cfg.d) : bench.K;
    PriorController prior = make_prior_controller(sys, std::move(K0), cfg.kappa0, cfg.gamma0);
    const double lambda2 = sys.W().trace();
    const double nu = cfg.nu ? *cfg.nu : 2.0 * std::pow(cfg.kappa, 4) * lambda2 / cfg.gamma;
    const double eta = cfg.eta ? *cfg.eta : std::pow(static_cast<double>(cfg.T), -1.0 / 3.0);
    return TrialContext{std::move(sys), std::move(net), std::move(bench), std::move(prior),
                        nu, eta, lambda2};
}

MatrixXd benchmark_sigma(const TrialContext& ctx) {
    const MatrixXd X = steady_state_covariance(ctx.sys, ctx.bench.K);
    const int d = ctx.sys.d(), k = ctx.sys.k();
    MatrixXd S(d + k, d + k);
    S.topLeftCorner(d, d) = X;
    S.topRightCorner(d, k) = X * ctx.bench.K.transpose();
    S.bottomLeftCorner(k, d) = ctx.bench.K * X;
    S.bottomRightCorner(k, k) = ctx.bench.K * X * ctx.bench.K.transpose();
    return S;
}

}  // namespace

TrialResult run_trial(const ExperimentConfig& cfg, int trial_index) {
    const int m = build_network(cfg.network).size();
    CostSchedule schedule = CostSchedule::uniform_diagonal(
        m, cfg.T, cfg.d, cfg.k, cfg.C, derive_seed(cfg.seed, {kScheduleRole}));
    return run_trial(cfg, schedule, trial_index);
}

TrialResult run_trial(const ExperimentConfig& cfg, const CostSchedule& schedule,
                      int trial_index) {
    validate_config(cfg);
    TrialContext ctx = make_context(cfg);
    const int m = ctx.net.size();
    const int d = ctx.sys.d();
    const int k = ctx.sys.k();
    const int T = cfg.T;

    // Independent streams per (trial, agent, role). The benchmark re-derives the
    // plant-noise seeds so both trajectories see identical disturbance draws.
    std::vector<RngStream> plant, action, bench_noise;
    for (int i = 0; i < m; ++i) {
        plant.emplace_back(derive_seed(cfg.seed, {kPlantRole, (std::uint64_t)trial_index,
                                                  (std::uint64_t)i}));
        action.emplace_back(derive_seed(cfg.seed, {kActionRole, (std::uint64_t)trial_index,
                                                   (std::uint64_t)i}));
        bench_noise.emplace_back(derive_seed(cfg.seed, {kPlantRole, (std::uint64_t)trial_index,
                                                        (std::uint64_t)i}));
    }

    TrialResult res;

    // Phase 1: exploration under the prior controller.
    PhaseDefaults phases;
    if (cfg.T0) {
        phases.T0 = *cfg.T0;
    } else {
        phases = default_phases(T, cfg.delta);
    }
    const int T0 = phases.T0;
    ExplorationLog log =
        explore(ctx.sys, ctx.prior, m, T0 + 1, T0, cfg.sigma2, plant, action);

    // Phase 2: decentralized least squares via EXTRA on the collected data.
    std::vector<MatrixXd> estimates;
    int T1 = 0;
    if (cfg.known_dynamics) {
        estimates.assign(m, ctx.sys.dynamics());
        T1 = cfg.T1 ? *cfg.T1 : 0;
        res.alpha = 0.0;
    } else {
        res.alpha = default_extra_step(log);
        std::vector<MatrixXd> init;
        if (cfg.random_extra_init) {
            RngStream ir(derive_seed(cfg.seed, {kExtraInitRole, (std::uint64_t)trial_index}));
            init.reserve(m);
            for (int i = 0; i < m; ++i) {
                MatrixXd D(d, d + k);
                for (int r = 0; r < d; ++r)
                    for (int c = 0; c < d + k; ++c) D(r, c) = 0.1 * ir.gauss();
                init.push_back(std::move(D));
            }
        }
        if (cfg.T1) {
            T1 = *cfg.T1;
            estimates = extra_solve(log, ctx.net, res.alpha, T1, init);
        } else {
            ExtraStop stop;
            stop.spread_tol = extra_spread_tolerance(T);
            stop.cap_scale = extra_cap_scale(T);
            stop.hard_cap = std::max(50, T / 4);
            ExtraResult er = extra_solve_autotuned(log, ctx.net, res.alpha, stop, init);
            estimates = std::move(er.estimates);
            T1 = er.iterations;
            res.tau_hat = er.tau_hat;
        }
    }
    const int Ts = T0 + T1 + 2;
    if (Ts >= T)
        throw ContractViolation("run_trial: T must exceed T0 + T1 + 2 (got Ts = " +
                                std::to_string(Ts) + ")");
    res.T0 = T0;
    res.T1 = T1;
    res.Ts = Ts;

    for (int i = 0; i < m; ++i) {
        res.estimation_error_max =
            std::max(res.estimation_error_max, estimation_error(estimates[i], ctx.sys));
        for (int j = i + 1; j < m; ++j)
            res.estimate_spread =
                std::max(res.estimate_spread, (estimates[i] - estimates[j]).norm());
    }

    // The plant keeps running while EXTRA iterates exchange estimates; agents
    // hold the prior policy for those T1 rounds (plus the round consumed by the
    // estimate hand-off).
    const int filler_rounds = Ts - 1 - (T0 + 1);
    ExplorationLog filler = explore(ctx.sys, ctx.prior, m, filler_rounds, 0, cfg.sigma2, plant,
                                    action, final_states(log));

    // Phase 3.
    ExploitationOptions opts;
    opts.eta = ctx.eta;
    opts.nu = ctx.nu;
    opts.W = ctx.sys.W();
    opts.Ts = Ts;
    opts.T = T;
    opts.dykstra = cfg.dykstra;
    opts.sqrt_nu_over_sigma =
        ctx.sys.sigma2() > 0.0 ? std::sqrt(ctx.nu) / std::sqrt(ctx.sys.sigma2()) : 0.0;
    opts.state_bound = 50.0 * ctx.nu;
    const MatrixXd sigma_ref = benchmark_sigma(ctx);
    opts.surrogate_reference = &sigma_ref;

    std::ofstream trace;
    if (cfg.debug_dumps && trial_index == 0) {
        trace.open(cfg.debug_dir + "/controller_trace.csv");
        trace << "round,agent,psd_gap,trace_gap,affine_gap,knorm,spread\n";
        opts.trace_sink = &trace;
        opts.trace_stride = std::max(1, (T - Ts) / 2000);
    }

    ExploitationResult exp = run_exploitation(ctx.sys, estimates, ctx.net, schedule, ctx.prior,
                                              final_states(filler_rounds > 0 ? filler : log),
                                              opts, plant, action);

    // Benchmark trajectories: same disturbances, K^s from round 1.
    MatrixXd bench_cost(T, m);
    for (int i = 0; i < m; ++i) {
        VectorXd x = VectorXd::Zero(d);
        for (int t = 1; t <= T; ++t) {
            VectorXd u = ctx.bench.K * x;
            bench_cost(t - 1, i) = schedule.global_cost(t, x, u);
            x = ctx.sys.step(x, u, bench_noise[i]);
        }
    }

    // Realized per-round algorithm costs: exploration, filler, exploitation.
    MatrixXd alg_cost = MatrixXd::Zero(T, m);
    for (int i = 0; i < m; ++i) {
        const auto& a = log.agents[i];
        for (int t = 1; t <= T0 + 1; ++t)
            alg_cost(t - 1, i) =
                schedule.global_cost(t, a.Z.col(t - 1).head(d), a.Z.col(t - 1).tail(k));
        if (filler_rounds > 0) {
            const auto& f = filler.agents[i];
            for (int t = T0 + 2; t <= Ts - 1; ++t)
                alg_cost(t - 1, i) = schedule.global_cost(t, f.Z.col(t - T0 - 2).head(d),
                                                          f.Z.col(t - T0 - 2).tail(k));
        }
        for (int t = Ts; t <= T; ++t) alg_cost(t - 1, i) = exp.agent_cost(t - Ts, i);
    }

    // Cumulative series under the configured accounting.
    const int start_round = cfg.charge_exploration ? 1 : Ts;
    res.series.stride = std::max(1, cfg.export_stride);
    VectorXd cum_alg = VectorXd::Zero(m), cum_bench = VectorXd::Zero(m);
    VectorXd window_alg = VectorXd::Zero(m), window_bench = VectorXd::Zero(m);
    std::vector<int> recorded;
    std::vector<VectorXd> rec_alg, rec_bench;
    for (int t = 1; t <= T; ++t) {
        if (t >= start_round) {
            cum_alg += alg_cost.row(t - 1).transpose();
            cum_bench += bench_cost.row(t - 1).transpose();
        }
        if (t >= Ts) {
            window_alg += alg_cost.row(t - 1).transpose();
            window_bench += bench_cost.row(t - 1).transpose();
        }
        if (t % res.series.stride == 0 || t == T) {
            recorded.push_back(t);
            rec_alg.push_back(cum_alg);
            rec_bench.push_back(cum_bench);
        }
    }
    res.series.rounds = std::move(recorded);
    res.series.cum_alg.resize(res.series.rounds.size(), m);
    res.series.cum_bench.resize(res.series.rounds.size(), m);
    for (std::size_t r = 0; r < res.series.rounds.size(); ++r) {
        res.series.cum_alg.row(r) = rec_alg[r].transpose();
        res.series.cum_bench.row(r) = rec_bench[r].transpose();
    }

    res.regret_final = cum_alg - cum_bench;
    res.averaged_regret = res.regret_final.mean() / static_cast<double>(T);
    res.averaged_regret_window =
        (window_alg - window_bench).mean() / static_cast<double>(T);
    res.alg_total_mean = cum_alg.mean();
    res.bench_total_mean = cum_bench.mean();

    const int rounds = T - Ts + 1;
    const int late_start = rounds - rounds / 4;
    double late = 0.0;
    for (int r = late_start; r < rounds; ++r) late += exp.spread[r];
    res.late_spread_mean = late / std::max(1, rounds - late_start);

    res.surrogate = exp.surrogate;
    res.rho_failures = exp.rho_failures;
    res.knorm_failures = exp.knorm_failures;
    res.state_flags = exp.state_flags;
    res.policy_count = exp.policy_count;
    res.dykstra_cycles_mean = exp.dykstra_cycles_mean;
    res.max_feasibility_gap = exp.max_feasibility_gap;
    if (exp.rho_failures > 0) {
        res.flagged = true;
        res.flag_reason = "closed-loop spectral radius >= 1 in " +
                          std::to_string(exp.rho_failures) + " rounds";
    }

    if (cfg.debug_dumps && trial_index == 0 && !cfg.known_dynamics) {
        std::ofstream ex(cfg.debug_dir + "/extra_errors.csv");
        dump_extra_errors(log, ctx.net, res.alpha, std::max(1, T1), ex);
    }
    return res;
}

McAggregate monte_carlo(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const int m = build_network(cfg.network).size();
    CostSchedule schedule = CostSchedule::uniform_diagonal(
        m, cfg.T, cfg.d, cfg.k, cfg.C, derive_seed(cfg.seed, {kScheduleRole}));

    McAggregate agg;
    agg.trials = cfg.trials;
    agg.per_trial.resize(cfg.trials);

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned workers = std::min<unsigned>(hw, cfg.trials);
    if (workers <= 1) {
        for (int t = 0; t < cfg.trials; ++t) agg.per_trial[t] = run_trial(cfg, schedule, t);
    } else {
        std::vector<std::future<TrialResult>> futs;
        futs.reserve(cfg.trials);
        for (int t = 0; t < cfg.trials; ++t)
            futs.push_back(std::async(std::launch::async | std::launch::deferred,
                                      [&cfg, &schedule, t] { return run_trial(cfg, schedule, t); }));
        for (int t = 0; t < cfg.trials; ++t) agg.per_trial[t] = futs[t].get();
    }

    auto mean_stderr = [&](auto getter, double& mean_out, double& se_out) {
        double s = 0.0;
        for (const auto& tr : agg.per_trial) s += getter(tr);
        mean_out = s / agg.trials;
        if (agg.trials < 2) {
            se_out = std::numeric_limits<double>::quiet_NaN();
            return;
        }
        double ss = 0.0;
        for (const auto& tr : agg.per_trial) {
            double dlt = getter(tr) - mean_out;
            ss += dlt * dlt;
        }
        se_out = std::sqrt(ss / (agg.trials - 1)) / std::sqrt(double(agg.trials));
    };

    mean_stderr([](const TrialResult& t) { return t.averaged_regret; },
                agg.averaged_regret_mean, agg.averaged_regret_stderr);
    mean_stderr([](const TrialResult& t) { return t.averaged_regret_window; },
                agg.averaged_regret_window_mean, agg.averaged_regret_window_stderr);

    long policies = 0, knorm = 0, rho = 0;
    for (const auto& tr : agg.per_trial) {
        agg.late_spread_mean += tr.late_spread_mean / agg.trials;
        agg.alg_total_mean += tr.alg_total_mean / agg.trials;
        agg.bench_total_mean += tr.bench_total_mean / agg.trials;
        policies += tr.policy_count;
        knorm += tr.knorm_failures;
        rho += tr.rho_failures;
        agg.state_flags += tr.state_flags;
        if (tr.flagged) ++agg.flagged_trials;
    }
    agg.knorm_failure_rate = policies > 0 ? double(knorm) / policies : 0.0;
    agg.rho_failure_rate = policies > 0 ? double(rho) / policies : 0.0;
    return agg;
}

std::vector<TopologyResult> topology_comparison(const ExperimentConfig& cfg,
                                                const std::vector<NetworkSpec>& topologies) {
    if (topologies.size() < 2)
        throw ContractViolation("topology_comparison: need at least two topologies");
    std::vector<TopologyResult> out;
    out.reserve(topologies.size());
    for (const auto& topo : topologies) {
        ExperimentConfig c = cfg;
        c.network = topo;
        TopologyResult tr;
        tr.name = topo.name();
        tr.spec = topo;
        tr.aggregate = monte_carlo(c);
        out.push_back(std::move(tr));
    }
    return out;
}

void export_results(const ExperimentConfig& cfg, const McAggregate& agg,
                    const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec)
        throw std::runtime_error("export_results: cannot create " + out_dir + ": " +
                                 ec.message());

    {
        const std::string path = out_dir + "/regret_series.csv";
        std::ofstream f(path);
        if (!f) throw std::runtime_error("export_results: cannot open " + path);
        f << "trial,round,agent,cum_cost_alg,cum_cost_bench,regret,avg_regret\n";
        for (std::size_t tr = 0; tr < agg.per_trial.size(); ++tr) {
            const RegretSeries& s = agg.per_trial[tr].series;
            for (std::size_t r = 0; r < s.rounds.size(); ++r) {
                for (Eigen::Index a = 0; a < s.cum_alg.cols(); ++a) {
                    const double ca = s.cum_alg(r, a);
                    const double cb = s.cum_bench(r, a);
                    const double reg = ca - cb;
                    f << tr << ',' << s.rounds[r] << ',' << a << ',' << fmt(ca) << ',' << fmt(cb)
                      << ',' << fmt(reg) << ',' << fmt(reg / s.rounds[r]) << '\n';
                }
            }
        }
    }
    {
        const std::string path = out_dir + "/summary.csv";
        std::ofstream f(path);
        if (!f) throw std::runtime_error("export_results: cannot open " + path);
        f << "metric,mean,stderr,trials\n";
        auto row = [&](const std::string& name, double mean, double se) {
            f << name << ',' << fmt(mean) << ',' << (std::isnan(se) ? std::string() : fmt(se))
              << ',' << agg.trials << '\n';
        };
        row("averaged_regret", agg.averaged_regret_mean, agg.averaged_regret_stderr);
        row("averaged_regret_window", agg.averaged_regret_window_mean,
            agg.averaged_regret_window_stderr);
        row("alg_cost_total", agg.alg_total_mean, std::numeric_limits<double>::quiet_NaN());
        row("bench_cost_total", agg.bench_total_mean, std::numeric_limits<double>::quiet_NaN());
        row("late_consensus_spread", agg.late_spread_mean,
            std::numeric_limits<double>::quiet_NaN());
        row("knorm_failure_rate", agg.knorm_failure_rate,
            std::numeric_limits<double>::quiet_NaN());
        row("rho_failure_rate", agg.rho_failure_rate, std::numeric_limits<double>::quiet_NaN());
        row("state_flags", static_cast<double>(agg.state_flags),
            std::numeric_limits<double>::quiet_NaN());
    }
    {
        const std::string path = out_dir + "/run_meta.json";
        std::ofstream f(path);
        if (!f) throw std::runtime_error("export_results: cannot open " + path);
        nlohmann::json meta;
        meta["config"] = nlohmann::json::parse(config_to_json_text(cfg));
        const double lambda2 = build_system(cfg).W().trace();
        meta["derived"]["lambda2"] = lambda2;
        meta["derived"]["nu"] =
            cfg.nu ? *cfg.nu : 2.0 * std::pow(cfg.kappa, 4) * lambda2 / cfg.gamma;
        meta["derived"]["eta"] =
            cfg.eta ? *cfg.eta : std::pow(static_cast<double>(cfg.T), -1.0 / 3.0);
        meta["derived"]["beta"] = build_network(cfg.network).beta();
        meta["derived"]["minimum_horizon"] = minimum_horizon(cfg);
        meta["derived"]["schedule_seed"] = derive_seed(cfg.seed, {kScheduleRole});
        nlohmann::json trials = nlohmann::json::array();
        for (const auto& tr : agg.per_trial) {
            trials.push_back({{"T0", tr.T0},
                              {"T1", tr.T1},
                              {"Ts", tr.Ts},
                              {"alpha", tr.alpha},
                              {"tau_hat", tr.tau_hat},
                              {"flagged", tr.flagged}});
        }
        meta["trials"] = trials;
        f << meta.dump(2) << '\n';
    }
}

}  // namespace dolqr
