#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dolqr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct FeasibilityGaps {
    double psd = 0.0;    // max(0, -lambda_min)
    double trace = 0.0;  // max(0, Tr - nu)
    double affine = 0.0; // ||Sigma_xx - C Sigma C^T - W||_F
    double max() const { return std::max(psd, std::max(trace, affine)); }
};

struct DykstraOptions {
    double tol = 1e-9;
    int max_iters = 50000;
};

// Dykstra's cycle over the given convex-set projections failed to settle
// within the iteration budget; carries the last iterate and its gaps.
struct ProjectionFailure : std::runtime_error {
    ProjectionFailure(const std::string& msg, MatrixXd iterate, FeasibilityGaps g, int iters)
        : std::runtime_error(msg), last_iterate(std::move(iterate)), gaps(g), iterations(iters) {}
    MatrixXd last_iterate;
    FeasibilityGaps gaps;
    int iterations = 0;
};

// Exact projection onto the intersection of closed convex sets via Dykstra's
// alternating algorithm with per-set correction terms.
MatrixXd dykstra(const MatrixXd& x0,
                 const std::vector<std::function<MatrixXd(const MatrixXd&)>>& projections,
                 double tol, int max_iters, int* iters_used = nullptr);

// Per-agent constraint region {Sigma >= 0, Tr(Sigma) <= nu,
// Sigma_xx = Chat Sigma Chat^T + W} for Chat = [Ahat Bhat].
class FeasibleSet {
public:
    // Builds the vectorized affine operator E = D (x) D - Chat (x) Chat and caches
    // the correction map E^T (E E^T)^{-1}. Throws when E E^T is conditioned worse
    // than 1e10 (degenerate estimate).
    FeasibleSet(MatrixXd Chat, MatrixXd W, double nu);

    const MatrixXd& Chat() const { return Chat_; }
    const MatrixXd& W() const { return W_; }
    double nu() const { return nu_; }
    int d() const { return d_; }
    int k() const { return k_; }
    int n() const { return n_; }
    const MatrixXd& E() const { return E_; }
    const VectorXd& w() const { return w_; }

    MatrixXd project_affine(const MatrixXd& S) const;
    MatrixXd dykstra_project(const MatrixXd& S, const DykstraOptions& opts = {},
                             int* iters_used = nullptr) const;
    FeasibilityGaps violation(const MatrixXd& S) const;

private:
    MatrixXd Chat_, W_, E_, correction_;
    VectorXd w_;
    double nu_ = 0.0;
    int d_ = 0, k_ = 0, n_ = 0;
};

// ||S - Pi_{s2}(S)||_F for S feasible in s1 (within 1e-6).
double cross_set_distance(const FeasibleSet& s1, const FeasibleSet& s2, const MatrixXd& S,
                          const DykstraOptions& opts = {});

}  // namespace dolqr
