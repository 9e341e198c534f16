#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <ostream>

#include "dolqr/lti.hpp"

namespace dolqr {

struct CostPair {
    MatrixXd Q;
    MatrixXd R;
};

// Per-round, per-agent diagonal cost pairs (Q_{i,t}, R_{i,t}) drawn uniformly
// from [0, C/d] and [0, C/k]. Deterministic per seed; generated round-major so
// a longer schedule with the same seed extends a shorter one.
class CostSchedule {
public:
    static CostSchedule uniform_diagonal(int m, int T, int d, int k, double C,
                                         std::uint64_t seed);

    int m() const { return m_; }
    int T() const { return T_; }
    int d() const { return d_; }
    int k() const { return k_; }
    double C() const { return C_; }
    std::uint64_t seed() const { return seed_; }

    // t is 1-based, agent is 0-based.
    VectorXd q_diag(int t, int agent) const;
    VectorXd r_diag(int t, int agent) const;
    CostPair pair(int t, int agent) const;

    VectorXd global_q_diag(int t) const;  // sum over agents
    VectorXd global_r_diag(int t) const;

    // x^T Q_t x + u^T R_t u with Q_t, R_t the network-wide sums.
    double global_cost(int t, const VectorXd& x, const VectorXd& u) const;

    void dump_csv(std::ostream& out) const;

private:
    int m_ = 0, T_ = 0, d_ = 0, k_ = 0;
    double C_ = 0.0;
    std::uint64_t seed_ = 0;
    MatrixXd q_;        // (m*d) x T
    MatrixXd r_;        // (m*k) x T
    MatrixXd qsum_;     // d x T
    MatrixXd rsum_;     // k x T
};

struct Benchmark {
    MatrixXd K;
    StabilityCert cert;
};

// K^s = -kappa * 1e-2 * I certified (kappa, gamma)-strongly stable for sys.
Benchmark benchmark_policy(const LtiSystem& sys, double kappa, double gamma);

// Best scalar gain K = c*I over a grid, judged by steady-state expected cost
// under mean cost weights. A pragmatic stand-in for the best fixed policy on
// scalar-multiple plants.
double best_scalar_gain(const LtiSystem& sys, const VectorXd& qbar_diag,
                        const VectorXd& rbar_diag, double lo, double hi, int points);

}  // namespace dolqr
