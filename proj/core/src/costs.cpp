#include "dolqr/costs.hpp"

#include <cmath>
#include <limits>

#include "dolqr/errors.hpp"
#include "dolqr/matops.hpp"
#include "dolqr/rng.hpp"

namespace dolqr {

CostSchedule CostSchedule::uniform_diagonal(int m, int T, int d, int k, double C,
                                            std::uint64_t seed) {
    if (m < 1 || T < 1 || d < 1 || k < 1)
        throw ContractViolation("CostSchedule: m, T, d, k must be positive");
    if (C < 0.0) throw ContractViolation("CostSchedule: C must be nonnegative");

    CostSchedule s;
    s.m_ = m;
    s.T_ = T;
    s.d_ = d;
    s.k_ = k;
    s.C_ = C;
    s.seed_ = seed;
    s.q_.resize(m * d, T);
    s.r_.resize(m * k, T);
    s.qsum_.resize(d, T);
    s.rsum_.resize(k, T);

    RngStream rng(seed);
    const double qmax = C / d;
    const double rmax = C / k;
    for (int t = 0; t < T; ++t) {
        for (int i = 0; i < m; ++i) {
            for (int e = 0; e < d; ++e) s.q_(i * d + e, t) = qmax * rng.uniform();
            for (int e = 0; e < k; ++e) s.r_(i * k + e, t) = rmax * rng.uniform();
        }
        for (int e = 0; e < d; ++e) {
            double acc = 0.0;
            for (int i = 0; i < m; ++i) acc += s.q_(i * d + e, t);
            s.qsum_(e, t) = acc;
        }
        for (int e = 0; e < k; ++e) {
            double acc = 0.0;
            for (int i = 0; i < m; ++i) acc += s.r_(i * k + e, t);
            s.rsum_(e, t) = acc;
        }
    }
    return s;
}

VectorXd CostSchedule::q_diag(int t, int agent) const {
    return q_.block(agent * d_, t - 1, d_, 1);
}

VectorXd CostSchedule::r_diag(int t, int agent) const {
    return r_.block(agent * k_, t - 1, k_, 1);
}

CostPair CostSchedule::pair(int t, int agent) const {
    return CostPair{q_diag(t, agent).asDiagonal().toDenseMatrix(),
                    r_diag(t, agent).asDiagonal().toDenseMatrix()};
}

VectorXd CostSchedule::global_q_diag(int t) const { return qsum_.col(t - 1); }

VectorXd CostSchedule::global_r_diag(int t) const { return rsum_.col(t - 1); }

double CostSchedule::global_cost(int t, const VectorXd& x, const VectorXd& u) const {
    if (t < 1 || t > T_) throw ContractViolation("CostSchedule::global_cost: round out of range");
    return qsum_.col(t - 1).dot(x.cwiseAbs2()) + rsum_.col(t - 1).dot(u.cwiseAbs2());
}

void CostSchedule::dump_csv(std::ostream& out) const {
    out << "round,agent,block,index,value\n";
    for (int t = 1; t <= T_; ++t) {
        for (int i = 0; i < m_; ++i) {
            for (int e = 0; e < d_; ++e)
                out << t << ',' << i << ",Q," << e << ',' << q_(i * d_ + e, t - 1) << '\n';
            for (int e = 0; e < k_; ++e)
                out << t << ',' << i << ",R," << e << ',' << r_(i * k_ + e, t - 1) << '\n';
        }
    }
}

Benchmark benchmark_policy(const LtiSystem& sys, double kappa, double gamma) {
    MatrixXd K = MatrixXd::Zero(sys.k(), sys.d());
    const int diag = std::min(sys.k(), sys.d());
    for (int i = 0; i < diag; ++i) K(i, i) = -kappa * 1e-2;
    std::string why;
    auto cert = certify_strong_stability(sys, K, kappa, gamma, &why);
    if (!cert)
        throw ContractViolation("benchmark_policy: K^s failed certification: " + why);
    return Benchmark{std::move(K), std::move(*cert)};
}

double best_scalar_gain(const LtiSystem& sys, const VectorXd& qbar_diag,
                        const VectorXd& rbar_diag, double lo, double hi, int points) {
    if (points < 2 || hi <= lo) throw ContractViolation("best_scalar_gain: bad grid");
    double best_c = lo, best_cost = std::numeric_limits<double>::infinity();
    const MatrixXd Qbar = qbar_diag.asDiagonal();
    const MatrixXd Rbar = rbar_diag.asDiagonal();
    for (int i = 0; i < points; ++i) {
        const double c = lo + (hi - lo) * i / (points - 1);
        MatrixXd K = MatrixXd::Zero(sys.k(), sys.d());
        const int diag = std::min(sys.k(), sys.d());
        for (int j = 0; j < diag; ++j) K(j, j) = c;
        MatrixXd M = sys.A() + sys.B() * K;
        if (spectral_radius(M) >= 1.0 - 1e-9) continue;
        MatrixXd X = steady_state_covariance(M, sys.W());
        double cost = (Qbar * X).trace() + (Rbar * K * X * K.transpose()).trace();
        if (cost < best_cost) {
            best_cost = cost;
            best_c = c;
        }
    }
    return best_c;
}

}  // namespace dolqr
