#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "dolqr/rng.hpp"

namespace dolqr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// The true plant x_{t+1} = A x + B u + w, w ~ N(0, W), identical for all agents.
class LtiSystem {
public:
    // Requires W >= sigma2 * I (up to 1e-10) and ||[A B]||_F <= theta.
    LtiSystem(MatrixXd A, MatrixXd B, MatrixXd W, double sigma2, double theta);

    const MatrixXd& A() const { return A_; }
    const MatrixXd& B() const { return B_; }
    const MatrixXd& W() const { return W_; }
    MatrixXd dynamics() const;  // [A B], d x n

    int d() const { return d_; }
    int k() const { return k_; }
    int n() const { return d_ + k_; }
    double sigma2() const { return sigma2_; }
    double theta() const { return theta_; }

    VectorXd step(const VectorXd& x, const VectorXd& u, RngStream& noise) const;
    VectorXd draw_noise(RngStream& noise) const;

private:
    MatrixXd A_, B_, W_, noise_factor_;
    double sigma2_, theta_;
    int d_, k_;
};

struct StabilityCert {
    MatrixXd H;
    MatrixXd L;
    double kappa = 0.0;
    double gamma = 0.0;
};

// Searches for (H, L) with A+BK = H L H^{-1}, ||L|| <= 1-gamma, ||H||*||H^-1|| <= kappa.
// Tries H = I first, then the real block-diagonalization of A+BK. Rejection does not
// prove instability; the reason string says which stage failed.
std::optional<StabilityCert> certify_strong_stability(const LtiSystem& sys, const MatrixXd& K,
                                                      double kappa, double gamma,
                                                      std::string* rejection = nullptr);

// Fixed point of X = M X M^T + W, solved by iteration to Frobenius residual 1e-10.
MatrixXd steady_state_covariance(const MatrixXd& M, const MatrixXd& W);
MatrixXd steady_state_covariance(const LtiSystem& sys, const MatrixXd& K);

// xi * eps with xi = Tr(W) * 4 kappa^6 / gamma^2; requires eps <= gamma / (4 kappa^2).
double covariance_gap_bound(double kappa, double gamma, const MatrixXd& W, double eps);

struct CovarianceTrack {
    std::vector<MatrixXd> propagated;  // Xhat_t
    std::vector<MatrixXd> steady;      // X_t, steady state of policy t
};

CovarianceTrack sequential_covariance_tracking(const LtiSystem& sys,
                                               const std::vector<MatrixXd>& policies,
                                               const MatrixXd& Xhat1);

}  // namespace dolqr
