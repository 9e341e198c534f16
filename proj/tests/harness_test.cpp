#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dolqr/config.hpp"
#include "dolqr/errors.hpp"
#include "dolqr/harness.hpp"

using namespace dolqr;

namespace {

// Small configuration that exercises all three phases quickly.
ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.network.kind = NetworkSpec::Kind::Cycle;
    cfg.network.m = 4;
    cfg.network.neighbors_per_side = 1;
    cfg.network.self_weight = 0.5;
    cfg.T = 400;
    cfg.T0 = 120;
    cfg.trials = 2;
    cfg.seed = 7;
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("default_phases matches direct arithmetic and caps at T/2") {
    PhaseDefaults p = default_phases(60000, 0.1);
    const double expect = std::ceil(std::pow(60000.0, 2.0 / 3.0) * std::log(60000.0 / 0.1));
    CHECK(p.T0 == static_cast<int>(expect));
    CHECK(p.T0 == 20392);
    CHECK(!p.capped);

    // delta -> 1 limit: T0 ~ T^{2/3} log T.
    PhaseDefaults loose = default_phases(60000, 0.999999);
    CHECK(std::abs(loose.T0 - std::ceil(std::pow(60000.0, 2.0 / 3.0) * std::log(60000.0))) <=
          2.0);

    PhaseDefaults capped = default_phases(200, 0.1);
    CHECK(capped.capped);
    CHECK(capped.T0 == 100);
}

TEST_CASE("minimum_horizon third term matches independent arithmetic") {
    ExperimentConfig cfg;  // defaults: n = 6, m = 20, delta = 0.1
    const double term3 =
        std::pow(200.0 * (std::log(std::pow(12.0, 6.0)) + std::log(3.0 * 20.0 / 0.1)), 1.5);
    const double mh = minimum_horizon(cfg);
    CHECK(mh >= term3);

    // The experiment configuration sits far below the theoretical threshold.
    CHECK(mh > cfg.T);
}

TEST_CASE("minimum_horizon collapses to the counting term as theta -> 0") {
    ExperimentConfig cfg;
    cfg.theta = 1e-9;
    cfg.A = MatrixSpec::scaled_identity(0.0);
    cfg.B = MatrixSpec::scaled_identity(0.0);
    // rho -> 0, so the fourth term approaches (6m + 3d)^{3/2}.
    const double term4 = std::pow(6.0 * 20 + 3.0 * 3, 1.5);
    ExperimentConfig wide = cfg;
    wide.zeta = 0.0;
    wide.C = 0.0;
    // With zeta = C = 0 the second term vanishes; term3 still dominates here,
    // so check the fourth term in isolation via the formula pieces.
    const double rho = 20 * 144.0 * cfg.theta * cfg.theta * std::pow(cfg.kappa0, 4) /
                       (cfg.gamma0 * cfg.gamma0) *
                       (1.0 + cfg.theta * cfg.theta * cfg.kappa0 * cfg.kappa0);
    CHECK(std::pow(4.0 * rho + 6.0 * 20 + 3.0 * 3, 1.5) ==
          doctest::Approx(term4).epsilon(1e-9));
}

TEST_CASE("config JSON round trip and unknown-key rejection") {
    ExperimentConfig cfg = small_config();
    std::string text = config_to_json_text(cfg);
    ExperimentConfig back = config_from_json_text(text);
    CHECK(back.T == cfg.T);
    CHECK(back.network.m == 4);
    CHECK(back.seed == cfg.seed);
    CHECK(back.T0.has_value());
    CHECK(*back.T0 == 120);

    CHECK_THROWS_AS(config_from_json_text(R"({"Tmax": 5})"), ContractViolation);
    CHECK_THROWS_AS(config_from_json_text(R"({"plant": {"dd": 5}})"), ContractViolation);
    CHECK_THROWS_AS(config_from_json_text(R"({"trials": 0})"), ContractViolation);
    CHECK_THROWS_AS(config_from_json_text(R"({"delta": 1.5})"), ContractViolation);
}

TEST_CASE("run_trial produces nondecreasing cumulative costs and sane phases") {
    ExperimentConfig cfg = small_config();
    TrialResult tr = run_trial(cfg, 0);
    CHECK(tr.T0 == 120);
    CHECK(tr.T1 >= 1);
    CHECK(tr.Ts == tr.T0 + tr.T1 + 2);
    CHECK(tr.Ts < cfg.T);
    for (Eigen::Index a = 0; a < tr.series.cum_alg.cols(); ++a)
        for (std::size_t r = 1; r < tr.series.rounds.size(); ++r) {
            CHECK(tr.series.cum_alg(r, a) >= tr.series.cum_alg(r - 1, a));
            CHECK(tr.series.cum_bench(r, a) >= tr.series.cum_bench(r - 1, a));
        }
    CHECK(tr.max_feasibility_gap <= 1e-6);
    CHECK(tr.knorm_failures == 0);
}

TEST_CASE("zero noise and zero costs give identically zero regret") {
    ExperimentConfig cfg = small_config();
    cfg.W = MatrixSpec::scaled_identity(0.0);
    cfg.sigma2 = 0.0;
    cfg.C = 0.0;
    cfg.nu = 5.0;  // the default 2 kappa^4 Tr(W) / gamma would vanish with W = 0
    cfg.known_dynamics = true;
    cfg.T = 200;
    cfg.T0 = 60;
    TrialResult tr = run_trial(cfg, 0);
    CHECK(tr.regret_final.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("known-system single-agent run reduces to centralized online LQR") {
    ExperimentConfig cfg;
    cfg.network.kind = NetworkSpec::Kind::Custom;
    cfg.network.custom = (MatrixXd(1, 1) << 1.0).finished();
    cfg.network.m = 1;
    cfg.known_dynamics = true;
    cfg.T = 600;
    cfg.T0 = 0;
    cfg.T1 = 0;
    cfg.trials = 1;
    TrialResult tr = run_trial(cfg, 0);
    CHECK(tr.Ts == 2);
    CHECK(tr.estimation_error_max == 0.0);
    // Averaged regret over the exploitation window settles (finite, not blown up).
    CHECK(std::isfinite(tr.averaged_regret));
}

TEST_CASE("monte_carlo aggregates trials deterministically") {
    ExperimentConfig cfg = small_config();
    McAggregate a = monte_carlo(cfg);
    McAggregate b = monte_carlo(cfg);
    CHECK(a.trials == 2);
    CHECK(a.averaged_regret_mean == b.averaged_regret_mean);
    CHECK(a.averaged_regret_stderr == b.averaged_regret_stderr);
    CHECK(a.per_trial[0].averaged_regret != a.per_trial[1].averaged_regret);

    ExperimentConfig one = cfg;
    one.trials = 1;
    McAggregate c = monte_carlo(one);
    CHECK(std::isnan(c.averaged_regret_stderr));
}

TEST_CASE("topology comparison under common random numbers") {
    ExperimentConfig cfg = small_config();
    cfg.trials = 1;
    NetworkSpec ring = cfg.network;
    NetworkSpec complete;
    complete.kind = NetworkSpec::Kind::Complete;
    complete.m = 4;
    auto results = topology_comparison(cfg, {ring, ring, complete});
    REQUIRE(results.size() == 3);
    // Identical topologies give identical aggregates.
    CHECK(results[0].aggregate.averaged_regret_mean ==
          results[1].aggregate.averaged_regret_mean);
    CHECK_THROWS_AS(topology_comparison(cfg, {ring}), ContractViolation);
}

TEST_CASE("export writes the three artifacts bit-identically across runs") {
    ExperimentConfig cfg = small_config();
    cfg.T = 300;
    cfg.T0 = 80;
    cfg.export_stride = 10;
    McAggregate agg = monte_carlo(cfg);

    namespace fs = std::filesystem;
    const std::string dir1 = "export_check_a", dir2 = "export_check_b";
    export_results(cfg, agg, dir1);
    McAggregate agg2 = monte_carlo(cfg);
    export_results(cfg, agg2, dir2);

    for (const char* name : {"regret_series.csv", "summary.csv", "run_meta.json"}) {
        std::string p1 = dir1 + std::string("/") + name;
        std::string p2 = dir2 + std::string("/") + name;
        REQUIRE(fs::exists(p1));
        CHECK(slurp(p1) == slurp(p2));
    }
    CHECK(slurp(dir1 + "/regret_series.csv")
              .starts_with("trial,round,agent,cum_cost_alg,cum_cost_bench,regret,avg_regret"));
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST_CASE("SDP surrogate regret grows sublinearly in the horizon") {
    // slope of log |surrogate sum| vs log T stays below 0.9 (checked at desk scale).
    ExperimentConfig cfg = small_config();
    cfg.trials = 1;
    std::vector<double> xs, ys;
    for (int T : {300, 600, 1200}) {
        ExperimentConfig c = cfg;
        c.T = T;
        c.T0 = 80;
        TrialResult tr = run_trial(c, 0);
        double g = std::abs(tr.surrogate.mean());
        xs.push_back(std::log(static_cast<double>(T)));
        ys.push_back(std::log(std::max(g, 1e-12)));
    }
    const double slope =
        (ys.back() - ys.front()) / (xs.back() - xs.front());
    CHECK(slope < 0.9);
}

TEST_CASE("invalid configurations are rejected") {
    ExperimentConfig cfg;
    cfg.trials = 0;
    CHECK_THROWS_AS(validate_config(cfg), ContractViolation);
    cfg = ExperimentConfig{};
    cfg.network.m = 0;
    CHECK_THROWS_AS(validate_config(cfg), ContractViolation);
    cfg = ExperimentConfig{};
    cfg.T0 = 100;
    cfg.T1 = 100;
    cfg.T = 150;
    CHECK_THROWS_AS(validate_config(cfg), ContractViolation);
}
