#include <benchmark/benchmark.h>

#include <random>

#include "dolqr/controller.hpp"
#include "dolqr/feasible_set.hpp"
#include "dolqr/matops.hpp"
#include "dolqr/network.hpp"

using namespace dolqr;

namespace {

MatrixXd random_symmetric(std::mt19937_64& gen, int n, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, 1.0);
    MatrixXd M(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) M(r, c) = scale * g(gen);
    return 0.5 * (M + M.transpose());
}

FeasibleSet experiment_set() {
    MatrixXd Chat(3, 6);
    Chat << 0.2 * MatrixXd::Identity(3, 3), (0.4 / 1.5) * MatrixXd::Identity(3, 3);
    return FeasibleSet(Chat, MatrixXd::Identity(3, 3), 75.9375);
}

}  // namespace

static void BM_PsdProject6(benchmark::State& state) {
    std::mt19937_64 gen(1);
    MatrixXd M = random_symmetric(gen, 6, 2.0);
    for (auto _ : state) benchmark::DoNotOptimize(psd_project(M));
}
BENCHMARK(BM_PsdProject6);

static void BM_AffineProject(benchmark::State& state) {
    FeasibleSet set = experiment_set();
    std::mt19937_64 gen(2);
    MatrixXd M = random_symmetric(gen, 6, 2.0);
    for (auto _ : state) benchmark::DoNotOptimize(set.project_affine(M));
}
BENCHMARK(BM_AffineProject);

static void BM_DykstraColdStart(benchmark::State& state) {
    FeasibleSet set = experiment_set();
    std::mt19937_64 gen(3);
    MatrixXd M = random_symmetric(gen, 6, 2.0);
    for (auto _ : state) benchmark::DoNotOptimize(set.dykstra_project(M));
}
BENCHMARK(BM_DykstraColdStart);

static void BM_DykstraNearFeasible(benchmark::State& state) {
    // The online-loop case: input within O(eta * C) of the set.
    FeasibleSet set = experiment_set();
    std::mt19937_64 gen(4);
    MatrixXd F = set.dykstra_project(random_symmetric(gen, 6, 2.0));
    MatrixXd M = F + random_symmetric(gen, 6, 0.05);
    for (auto _ : state) benchmark::DoNotOptimize(set.dykstra_project(M));
}
BENCHMARK(BM_DykstraNearFeasible);

static void BM_OdgdRound20(benchmark::State& state) {
    const int m = 20;
    MixingMatrix net = MixingMatrix::build_cycle(m, 1, 0.6);
    std::vector<FeasibleSet> sets;
    std::vector<MatrixXd> sigmas;
    std::mt19937_64 gen(5);
    for (int i = 0; i < m; ++i) {
        sets.push_back(experiment_set());
        sigmas.push_back(sets[i].dykstra_project(random_symmetric(gen, 6, 1.0)));
    }
    std::vector<CostPair> costs;
    std::uniform_real_distribution<double> u(0.0, 100.0);
    for (int i = 0; i < m; ++i) {
        VectorXd q(3), r(3);
        for (int e = 0; e < 3; ++e) {
            q(e) = u(gen);
            r(e) = u(gen);
        }
        costs.push_back({q.asDiagonal().toDenseMatrix(), r.asDiagonal().toDenseMatrix()});
    }
    const double eta = std::pow(20000.0, -1.0 / 3.0);
    for (auto _ : state) {
        odgd_round(sigmas, sets, costs, net, eta, DykstraOptions{});
        benchmark::ClobberMemory();
    }
}
BENCHMARK(BM_OdgdRound20);

BENCHMARK_MAIN();
