#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "dolqr/errors.hpp"
#include "dolqr/lti.hpp"
#include "dolqr/matops.hpp"
#include "dolqr/network.hpp"
#include "dolqr/sysid.hpp"
#include "support.hpp"

using namespace dolqr;

namespace {

LtiSystem experiment_plant() {
    return LtiSystem(0.2 * MatrixXd::Identity(3, 3), (0.4 / 1.5) * MatrixXd::Identity(3, 3),
                     MatrixXd::Identity(3, 3), 1.0, 1.0);
}

std::vector<RngStream> streams(std::uint64_t base, int m) {
    std::vector<RngStream> out;
    for (int i = 0; i < m; ++i) out.emplace_back(derive_seed(base, {static_cast<std::uint64_t>(i)}));
    return out;
}

// Synthetic per-agent regression data with no plant in the loop.
ExplorationLog synthetic_log(std::mt19937_64& gen, int m, int d, int k, int rounds,
                             double sigma2 = 1.0, double theta = 1.0) {
    ExplorationLog log;
    log.T0 = rounds;
    log.d = d;
    log.k = k;
    log.sigma2 = sigma2;
    log.theta = theta;
    log.agents.resize(m);
    for (int i = 0; i < m; ++i) {
        auto& a = log.agents[i];
        a.Z = testsup::random_matrix(gen, d + k, rounds);
        a.Xnext = testsup::random_matrix(gen, d, rounds);
        a.stat_rounds = rounds;
        a.Szz = a.Z * a.Z.transpose();
        a.Sxz = a.Xnext * a.Z.transpose();
    }
    return log;
}

}  // namespace

TEST_CASE("explore with zero prior and noiseless plant records x2 = B u") {
    LtiSystem sys(0.2 * MatrixXd::Identity(3, 3), (0.4 / 1.5) * MatrixXd::Identity(3, 3),
                  MatrixXd::Zero(3, 3), 0.0, 1.0);
    PriorController prior{MatrixXd::Zero(3, 3), 1.0, 0.8};
    auto plant = streams(1, 2);
    auto action = streams(2, 2);
    ExplorationLog log = explore(sys, prior, 2, 1, 1, 1.0, plant, action);
    for (const auto& a : log.agents) {
        CHECK(a.Z.col(0).head(3).norm() == 0.0);           // x1 = 0
        VectorXd u = a.Z.col(0).tail(3);
        CHECK(u.norm() > 0.0);                             // excitation present
        CHECK((a.Xnext.col(0) - sys.B() * u).norm() < 1e-14);
    }
}

TEST_CASE("explore keeps states within the strong-stability covariance envelope") {
    LtiSystem sys = experiment_plant();
    PriorController prior =
        make_prior_controller(sys, -0.015 * MatrixXd::Identity(3, 3), 1.5, 0.4);
    auto plant = streams(10, 20);
    auto action = streams(11, 20);
    ExplorationLog log = explore(sys, prior, 20, 1000, 1000, 1.0, plant, action);
    const double bound =
        1000.0 * sys.W().trace() * std::pow(prior.kappa0, 4) / prior.gamma0;
    for (const auto& a : log.agents)
        for (int t = 0; t < 1000; ++t)
            CHECK(a.Z.col(t).head(3).squaredNorm() < bound);
}

TEST_CASE("excitation grows the minimum eigenvalue of the regressor Gram linearly") {
    LtiSystem sys = experiment_plant();
    PriorController prior =
        make_prior_controller(sys, -0.015 * MatrixXd::Identity(3, 3), 1.5, 0.4);
    double lmin_small, lmin_big;
    {
        auto plant = streams(20, 4);
        auto action = streams(21, 4);
        ExplorationLog log = explore(sys, prior, 4, 400, 400, 1.0, plant, action);
        MatrixXd V = MatrixXd::Zero(6, 6);
        for (const auto& a : log.agents) V += a.Szz;
        lmin_small = min_eigenvalue(V);
    }
    {
        auto plant = streams(20, 8);
        auto action = streams(21, 8);
        ExplorationLog log = explore(sys, prior, 8, 800, 800, 1.0, plant, action);
        MatrixXd V = MatrixXd::Zero(6, 6);
        for (const auto& a : log.agents) V += a.Szz;
        lmin_big = min_eigenvalue(V);
    }
    // Quadrupling the data budget should roughly quadruple lambda_min.
    CHECK(lmin_big > 2.0 * lmin_small);
}

TEST_CASE("explore raises DivergenceError for an unstable prior") {
    LtiSystem sys(1.05 * MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2),
                  MatrixXd::Identity(2, 2), 1.0, 2.5);
    PriorController prior{MatrixXd::Zero(2, 2), 1.0, 0.5};  // built unchecked on purpose
    auto plant = streams(30, 1);
    auto action = streams(31, 1);
    CHECK_THROWS_AS(explore(sys, prior, 1, 100000, 0, 40.0, plant, action), DivergenceError);
}

TEST_CASE("local_cost_gradient vanishes at the closed-form local minimizer") {
    std::mt19937_64 gen(3);
    ExplorationLog log = synthetic_log(gen, 1, 2, 2, 30);
    const auto& a = log.agents[0];
    const int n = 4;
    MatrixXd V = a.Szz + (log.sigma2 / (log.theta * log.theta)) * MatrixXd::Identity(n, n);
    MatrixXd Dstar = V.ldlt().solve(a.Sxz.transpose()).transpose();
    CHECK(local_cost_gradient(a, Dstar, log.sigma2, log.theta, 1).norm() < 1e-8);
}

TEST_CASE("local_cost_gradient on empty data at D = 0 is zero") {
    ExplorationLog log;
    log.d = 2;
    log.k = 1;
    log.agents.resize(1);
    auto& a = log.agents[0];
    a.Z = MatrixXd::Zero(3, 4);
    a.Xnext = MatrixXd::Zero(2, 4);
    a.Szz = MatrixXd::Zero(3, 3);
    a.Sxz = MatrixXd::Zero(2, 3);
    a.stat_rounds = 4;
    CHECK(local_cost_gradient(a, MatrixXd::Zero(2, 3), 1.0, 1.0, 1).norm() == 0.0);
}

TEST_CASE("local_cost_gradient matches central finite differences") {
    std::mt19937_64 gen(5);
    ExplorationLog log = synthetic_log(gen, 3, 2, 2, 25);
    const auto& a = log.agents[1];
    MatrixXd D = testsup::random_matrix(gen, 2, 4);
    MatrixXd G = local_cost_gradient(a, D, log.sigma2, log.theta, 3);
    const double h = 1e-6;
    for (int trial = 0; trial < 5; ++trial) {
        MatrixXd E = testsup::random_matrix(gen, 2, 4);
        E /= E.norm();
        double fp = local_cost(a, D + h * E, log.sigma2, log.theta, 3);
        double fm = local_cost(a, D - h * E, log.sigma2, log.theta, 3);
        double fd = (fp - fm) / (2.0 * h);
        double an = (G.transpose() * E).trace();
        CHECK(std::abs(fd - an) <= 1e-5 * std::max(1.0, std::abs(an)));
    }
}

TEST_CASE("gradients of local costs sum to the gradient of the global cost") {
    std::mt19937_64 gen(7);
    ExplorationLog log = synthetic_log(gen, 4, 2, 2, 15);
    MatrixXd D = testsup::random_matrix(gen, 2, 4);
    MatrixXd sum = MatrixXd::Zero(2, 4);
    for (const auto& a : log.agents)
        sum += local_cost_gradient(a, D, log.sigma2, log.theta, log.m());
    // Global gradient: 2 (D sum Szz - sum Sxz) + 2 sigma^2 theta^-2 D.
    MatrixXd Szz = MatrixXd::Zero(4, 4), Sxz = MatrixXd::Zero(2, 4);
    for (const auto& a : log.agents) {
        Szz += a.Szz;
        Sxz += a.Sxz;
    }
    MatrixXd global = 2.0 * (D * Szz - Sxz) + 2.0 * log.sigma2 / (log.theta * log.theta) * D;
    CHECK((sum - global).norm() < 1e-9);
}

TEST_CASE("centralized_ridge_oracle edge cases") {
    std::mt19937_64 gen(9);
    // No data: pure ridge, minimized at zero.
    ExplorationLog empty = synthetic_log(gen, 2, 2, 2, 5);
    for (auto& a : empty.agents) {
        a.Szz.setZero();
        a.Sxz.setZero();
        a.stat_rounds = 0;
    }
    CHECK(centralized_ridge_oracle(empty).norm() == 0.0);

    // Noiseless spanning trajectory: recovery up to the ridge bias.
    LtiSystem sys(0.3 * MatrixXd::Identity(2, 2), 0.5 * MatrixXd::Identity(2, 2),
                  MatrixXd::Zero(2, 2), 0.0, 1.1);
    PriorController prior{MatrixXd::Zero(2, 2), 1.0, 0.7};
    auto plant = streams(40, 1);
    auto action = streams(41, 1);
    ExplorationLog log = explore(sys, prior, 1, 300, 300, 1.0, plant, action);
    MatrixXd D = centralized_ridge_oracle(log);
    MatrixXd V = log.agents[0].Szz + MatrixXd::Identity(4, 4);
    double ridge_bias = sys.dynamics().norm() / min_eigenvalue(V);
    CHECK(estimation_error(D, sys) <= 1e-6 + ridge_bias);

    // First-order optimality of the oracle output for the global cost.
    ExplorationLog rnd = synthetic_log(gen, 3, 2, 2, 20);
    MatrixXd Dstar = centralized_ridge_oracle(rnd);
    MatrixXd g = MatrixXd::Zero(2, 4);
    for (const auto& a : rnd.agents)
        g += local_cost_gradient(a, Dstar, rnd.sigma2, rnd.theta, rnd.m());
    CHECK(g.norm() < 1e-8);
}

TEST_CASE("EXTRA reduces to gradient descent for a single agent") {
    std::mt19937_64 gen(11);
    ExplorationLog log = synthetic_log(gen, 1, 2, 2, 20);
    MixingMatrix net = MixingMatrix::build_custom((MatrixXd(1, 1) << 1.0).finished());
    double alpha = default_extra_step(log);
    auto estimates = extra_solve(log, net, alpha, 4000, {});
    MatrixXd oracle = centralized_ridge_oracle(log);
    CHECK((estimates[0] - oracle).norm() < 1e-8);
}

TEST_CASE("EXTRA with identical data keeps agents identical by symmetry") {
    std::mt19937_64 gen(13);
    ExplorationLog log = synthetic_log(gen, 1, 1, 1, 10);
    log.agents.push_back(log.agents[0]);  // duplicate the data at agent 2
    MixingMatrix net = MixingMatrix::build_complete(2);
    auto estimates = extra_solve(log, net, default_extra_step(log), 50, {});
    CHECK((estimates[0] - estimates[1]).norm() < 1e-13);
}

TEST_CASE("EXTRA converges to the centralized oracle on a ring") {
    std::mt19937_64 gen(17);
    ExplorationLog log = synthetic_log(gen, 3, 1, 1, 12);
    MixingMatrix net = MixingMatrix::build_cycle(3, 1, 0.5);
    MatrixXd oracle = centralized_ridge_oracle(log);
    ExtraStop stop;
    stop.spread_tol = 1e-10;
    stop.hard_cap = 20000;
    ExtraResult res = extra_solve_autotuned(log, net, default_extra_step(log), stop);
    for (const auto& D : res.estimates) CHECK((D - oracle).norm() < 1e-6);

    // Cross-agent spread is at most twice the worst agent-to-oracle gap.
    double worst = 0.0, spread = 0.0;
    for (const auto& D : res.estimates) worst = std::max(worst, (D - oracle).norm());
    for (std::size_t i = 0; i < res.estimates.size(); ++i)
        for (std::size_t j = i + 1; j < res.estimates.size(); ++j)
            spread = std::max(spread, (res.estimates[i] - res.estimates[j]).norm());
    CHECK(spread <= 2.0 * worst + 1e-15);
}

TEST_CASE("EXTRA error decays geometrically (log-linear fit)") {
    std::mt19937_64 gen(19);
    ExplorationLog log = synthetic_log(gen, 3, 2, 2, 15);
    MixingMatrix net = MixingMatrix::build_cycle(3, 1, 0.5);
    MatrixXd oracle = centralized_ridge_oracle(log);
    double alpha = default_extra_step(log);

    std::vector<double> xs, ys;
    for (int T1 = 10; T1 <= 400; T1 += 30) {
        auto est = extra_solve(log, net, alpha, T1, {});
        double err = 0.0;
        for (const auto& D : est) err = std::max(err, (D - oracle).norm());
        if (err <= 1e-12) break;  // double-precision floor
        xs.push_back(T1);
        ys.push_back(std::log(err));
    }
    REQUIRE(xs.size() >= 5);
    for (std::size_t i = 1; i < ys.size(); ++i) CHECK(ys[i] < ys[i - 1] + 1e-12);
    CHECK(testsup::fit_slope(xs, ys) < 0.0);
}

TEST_CASE("EXTRA diverges with a reckless step size") {
    std::mt19937_64 gen(23);
    ExplorationLog log = synthetic_log(gen, 2, 2, 2, 30);
    MixingMatrix net = MixingMatrix::build_complete(2);
    double alpha = 50.0 / std::max(1.0, max_eigenvalue(log.agents[0].Szz));
    CHECK_THROWS_AS(extra_solve(log, net, 1000.0 * alpha, 4000, {}), DivergenceError);
}

TEST_CASE("estimation error shrinks with a 4x data budget (rate oracle)") {
    LtiSystem sys = experiment_plant();
    PriorController prior =
        make_prior_controller(sys, -0.015 * MatrixXd::Identity(3, 3), 1.5, 0.4);
    double err_small = 0.0, err_big = 0.0;
    const int seeds = 20;
    for (int s = 0; s < seeds; ++s) {
        auto plant = streams(100 + s, 4);
        auto action = streams(200 + s, 4);
        ExplorationLog log = explore(sys, prior, 4, 250, 250, 1.0, plant, action);
        err_small += estimation_error(centralized_ridge_oracle(log), sys) / seeds;

        auto plant4 = streams(300 + s, 4);
        auto action4 = streams(400 + s, 4);
        ExplorationLog log4 = explore(sys, prior, 4, 1000, 1000, 1.0, plant4, action4);
        err_big += estimation_error(centralized_ridge_oracle(log4), sys) / seeds;
    }
    CHECK(err_big <= 0.6 * err_small);
}

TEST_CASE("desk-scale estimate precision stays within the theory envelope") {
    // Per-agent error <= (1 + 38 sqrt(2) n / sqrt(m)) T^{-1/3} and pairwise
    // spread <= 2 T^{-1/3}, each with a 2x safety factor.
    LtiSystem sys(0.3 * MatrixXd::Identity(2, 2), 0.5 * MatrixXd::Identity(2, 2),
                  MatrixXd::Identity(2, 2), 1.0, 1.2);
    PriorController prior = make_prior_controller(sys, MatrixXd::Zero(2, 2), 1.0, 0.7);
    const int m = 3, T = 3000;
    const double Tpow = std::pow(static_cast<double>(T), -1.0 / 3.0);
    const int n = 4;
    const double err_bound = 2.0 * (1.0 + 38.0 * std::sqrt(2.0) * n / std::sqrt(double(m))) * Tpow;
    const double spread_bound = 2.0 * 2.0 * Tpow;
    MixingMatrix net = MixingMatrix::build_cycle(3, 1, 0.5);
    int err_ok = 0, spread_ok = 0;
    const int seeds = 20;
    for (int s = 0; s < seeds; ++s) {
        auto plant = streams(500 + s, m);
        auto action = streams(600 + s, m);
        ExplorationLog log = explore(sys, prior, m, 1000, 1000, 1.0, plant, action);
        ExtraStop stop;
        stop.spread_tol = Tpow / 10.0;
        stop.hard_cap = 2000;
        ExtraResult res = extra_solve_autotuned(log, net, default_extra_step(log), stop);
        double err = 0.0, spread = 0.0;
        for (const auto& D : res.estimates) err = std::max(err, estimation_error(D, sys));
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j)
                spread = std::max(spread, (res.estimates[i] - res.estimates[j]).norm());
        if (err <= err_bound) ++err_ok;
        if (spread <= spread_bound) ++spread_ok;
    }
    CHECK(err_ok == seeds);
    CHECK(spread_ok == seeds);
}

TEST_CASE("make_prior_controller rejects uncertifiable priors") {
    LtiSystem sys = experiment_plant();
    CHECK_THROWS_AS(
        make_prior_controller(sys, 3.0 * MatrixXd::Identity(3, 3), 1.5, 0.4),
        ContractViolation);
}
