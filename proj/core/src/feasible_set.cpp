#include "dolqr/feasible_set.hpp"

#include <cmath>

#include "dolqr/errors.hpp"
#include "dolqr/matops.hpp"

namespace dolqr {

MatrixXd dykstra(const MatrixXd& x0,
                 const std::vector<std::function<MatrixXd(const MatrixXd&)>>& projections,
                 double tol, int max_iters, int* iters_used) {
    const std::size_t c = projections.size();
    MatrixXd x = x0;
    std::vector<MatrixXd> corr(c, MatrixXd::Zero(x0.rows(), x0.cols()));
    for (int cycle = 1; cycle <= max_iters; ++cycle) {
        MatrixXd before = x;
        for (std::size_t s = 0; s < c; ++s) {
            MatrixXd y = projections[s](x + corr[s]);
            corr[s] = x + corr[s] - y;
            x = std::move(y);
        }
        // Small per-cycle movement alone is not enough: the x sequence can stall
        // transiently away from the intersection, so require near-membership of
        // every set before accepting.
        if ((x - before).norm() <= tol) {
            bool member = true;
            for (std::size_t s = 0; s < c && member; ++s)
                member = (projections[s](x) - x).norm() <= 10.0 * tol;
            if (member) {
                if (iters_used) *iters_used = cycle;
                return x;
            }
        }
    }
    if (iters_used) *iters_used = max_iters;
    throw ProjectionFailure("dykstra: no convergence within iteration budget", x,
                            FeasibilityGaps{}, max_iters);
}

FeasibleSet::FeasibleSet(MatrixXd Chat, MatrixXd W, double nu)
    : Chat_(std::move(Chat)), W_(std::move(W)), nu_(nu) {
    d_ = static_cast<int>(Chat_.rows());
    n_ = static_cast<int>(Chat_.cols());
    k_ = n_ - d_;
    if (k_ < 1) throw ContractViolation("FeasibleSet: Chat must be d x (d + k) with k >= 1");
    if (W_.rows() != d_ || W_.cols() != d_)
        throw ContractViolation("FeasibleSet: W must be d x d");
    if (nu_ <= 0.0) throw ContractViolation("FeasibleSet: nu must be positive");
    W_ = require_symmetric(W_, 1e-9);
    if (min_eigenvalue(W_) < -1e-10) throw ContractViolation("FeasibleSet: W must be PSD");

    MatrixXd D = MatrixXd::Zero(d_, n_);
    D.leftCols(d_) = MatrixXd::Identity(d_, d_);
    E_ = kron(D, D) - kron(Chat_, Chat_);
    w_ = vec(W_);

    MatrixXd G = E_ * E_.transpose();  // d^2 x d^2
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(G);
    const double lmin = es.eigenvalues().minCoeff();
    const double lmax = es.eigenvalues().maxCoeff();
    if (lmin <= 0.0 || lmax / lmin > 1e10)
        throw ContractViolation(
            "FeasibleSet: affine operator is rank deficient (degenerate estimate)");
    correction_ = E_.transpose() * G.ldlt().solve(MatrixXd::Identity(G.rows(), G.cols()));
}

MatrixXd FeasibleSet::project_affine(const MatrixXd& S) const {
    VectorXd p = vec(S);
    VectorXd residual = E_ * p - w_;
    VectorXd projected = p - correction_ * residual;
    return symmetrized(unvec(projected, n_, n_));
}

FeasibilityGaps FeasibleSet::violation(const MatrixXd& S) const {
    FeasibilityGaps g;
    g.psd = std::max(0.0, -min_eigenvalue(S));
    g.trace = std::max(0.0, S.trace() - nu_);
    MatrixXd Sxx = S.topLeftCorner(d_, d_);
    g.affine = (Sxx - Chat_ * S * Chat_.transpose() - W_).norm();
    return g;
}

MatrixXd FeasibleSet::dykstra_project(const MatrixXd& S, const DykstraOptions& opts,
                                      int* iters_used) const {
    MatrixXd x = require_symmetric(S, 1e-9);
    MatrixXd corr_psd = MatrixXd::Zero(n_, n_);
    MatrixXd corr_tr = MatrixXd::Zero(n_, n_);
    MatrixXd corr_aff = MatrixXd::Zero(n_, n_);
    for (int cycle = 1; cycle <= opts.max_iters; ++cycle) {
        MatrixXd before = x;

        MatrixXd y = psd_project(x + corr_psd);
        corr_psd = x + corr_psd - y;
        x = std::move(y);

        y = trace_halfspace_project(x + corr_tr, nu_);
        corr_tr = x + corr_tr - y;
        x = std::move(y);

        y = project_affine(x + corr_aff);
        corr_aff = x + corr_aff - y;
        x = std::move(y);

        if ((x - before).norm() <= opts.tol && violation(x).max() <= 10.0 * opts.tol) {
            if (iters_used) *iters_used = cycle;
            return x;
        }
    }
    if (iters_used) *iters_used = opts.max_iters;
    throw ProjectionFailure("FeasibleSet::dykstra_project: no convergence within budget", x,
                            violation(x), opts.max_iters);
}

double cross_set_distance(const FeasibleSet& s1, const FeasibleSet& s2, const MatrixXd& S,
                          const DykstraOptions& opts) {
    if (s1.violation(S).max() > 1e-6)
        throw ContractViolation("cross_set_distance: input is not feasible for the first set");
    return (S - s2.dykstra_project(S, opts)).norm();
}

}  // namespace dolqr
