#include "dolqr/lti.hpp"

#include <cmath>
#include <complex>

#include "dolqr/errors.hpp"
#include "dolqr/matops.hpp"

namespace dolqr {

LtiSystem::LtiSystem(MatrixXd A, MatrixXd B, MatrixXd W, double sigma2, double theta)
    : A_(std::move(A)), B_(std::move(B)), W_(std::move(W)), sigma2_(sigma2), theta_(theta) {
    d_ = static_cast<int>(A_.rows());
    k_ = static_cast<int>(B_.cols());
    if (A_.cols() != d_ || B_.rows() != d_ || W_.rows() != d_ || W_.cols() != d_)
        throw ContractViolation("LtiSystem: inconsistent dimensions");
    if (sigma2_ < 0.0) throw ContractViolation("LtiSystem: sigma2 must be nonnegative");
    W_ = require_symmetric(W_, 1e-9);

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(W_);
    if (es.eigenvalues().minCoeff() < sigma2_ - 1e-10)
        throw ContractViolation("LtiSystem: W is not >= sigma2 * I");
    double fro = std::sqrt(A_.squaredNorm() + B_.squaredNorm());
    if (fro > theta_ + 1e-12)
        throw ContractViolation("LtiSystem: ||[A B]||_F exceeds theta");

    noise_factor_ = es.eigenvectors() *
                    es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                    es.eigenvectors().transpose();
}

MatrixXd LtiSystem::dynamics() const {
    MatrixXd C(d_, n());
    C << A_, B_;
    return C;
}

VectorXd LtiSystem::draw_noise(RngStream& noise) const {
    return noise_factor_ * noise.gauss_vec(d_);
}

VectorXd LtiSystem::step(const VectorXd& x, const VectorXd& u, RngStream& noise) const {
    if (x.size() != d_ || u.size() != k_)
        throw ContractViolation("LtiSystem::step: dimension mismatch");
    return A_ * x + B_ * u + draw_noise(noise);
}

namespace {

// Real block diagonalization M = H L H^{-1}: real eigenvectors for real
// eigenvalues, [Re v, Im v] column pairs and 2x2 rotation-scale blocks for
// complex pairs. ||L|| is then max_j |lambda_j|.
bool real_block_diagonalize(const MatrixXd& M, MatrixXd& H, MatrixXd& L) {
    const int n = static_cast<int>(M.rows());
    Eigen::EigenSolver<MatrixXd> es(M);
    if (es.info() != Eigen::Success) return false;
    const auto& vals = es.eigenvalues();
    const auto& vecs = es.eigenvectors();

    H = MatrixXd::Zero(n, n);
    L = MatrixXd::Zero(n, n);
    int col = 0;
    while (col < n) {
        std::complex<double> lam = vals(col);
        if (std::abs(lam.imag()) < 1e-14) {
            VectorXd v = vecs.col(col).real();
            double nv = v.norm();
            if (nv < 1e-300) return false;
            H.col(col) = v / nv;
            L(col, col) = lam.real();
            ++col;
        } else {
            if (col + 1 >= n) return false;
            VectorXd vr = vecs.col(col).real();
            VectorXd vi = vecs.col(col).imag();
            double nv = std::sqrt(vr.squaredNorm() + vi.squaredNorm());
            if (nv < 1e-300) return false;
            H.col(col) = vr / nv;
            H.col(col + 1) = vi / nv;
            L(col, col) = lam.real();
            L(col, col + 1) = lam.imag();
            L(col + 1, col) = -lam.imag();
            L(col + 1, col + 1) = lam.real();
            col += 2;
        }
    }
    return true;
}

bool check_certificate(const MatrixXd& M, const MatrixXd& H, const MatrixXd& L,
                       double kappa, double gamma, std::string* rejection) {
    Eigen::FullPivLU<MatrixXd> lu(H);
    if (!lu.isInvertible()) {
        if (rejection) *rejection = "similarity transform is singular";
        return false;
    }
    MatrixXd Hinv = lu.inverse();
    double cond = spectral_norm(H) * spectral_norm(Hinv);
    if (cond > kappa + 1e-9) {
        if (rejection)
            *rejection = "condition number " + std::to_string(cond) + " exceeds kappa";
        return false;
    }
    double ln = spectral_norm(L);
    if (ln > 1.0 - gamma + 1e-9) {
        if (rejection)
            *rejection = "||L|| = " + std::to_string(ln) + " exceeds 1 - gamma";
        return false;
    }
    MatrixXd rebuilt = H * L * Hinv;
    double rel = (rebuilt - M).norm() / std::max(1.0, M.norm());
    if (rel > 1e-8) {
        if (rejection) *rejection = "similarity reconstruction residual too large";
        return false;
    }
    return true;
}

}  // namespace

std::optional<StabilityCert> certify_strong_stability(const LtiSystem& sys, const MatrixXd& K,
                                                      double kappa, double gamma,
                                                      std::string* rejection) {
    if (kappa < 1.0 || gamma <= 0.0 || gamma > 1.0)
        throw ContractViolation("certify_strong_stability: need kappa >= 1 and gamma in (0, 1]");
    if (K.rows() != sys.k() || K.cols() != sys.d())
        throw ContractViolation("certify_strong_stability: K has wrong shape");

    if (spectral_norm(K) > kappa + 1e-12) {
        if (rejection) *rejection = "||K|| exceeds kappa";
        return std::nullopt;
    }

    const MatrixXd M = sys.A() + sys.B() * K;

    // Stage 1: H = I suffices whenever ||M|| <= 1 - gamma.
    if (spectral_norm(M) <= 1.0 - gamma + 1e-9) {
        StabilityCert cert;
        cert.H = MatrixXd::Identity(sys.d(), sys.d());
        cert.L = M;
        cert.kappa = kappa;
        cert.gamma = gamma;
        return cert;
    }

    // Stage 2: eigenvector similarity. Sound but incomplete: a rejection here
    // does not prove that no certificate exists.
    MatrixXd H, L;
    std::string why;
    if (real_block_diagonalize(M, H, L) && check_certificate(M, H, L, kappa, gamma, &why)) {
        StabilityCert cert;
        cert.H = H;
        cert.L = L;
        cert.kappa = kappa;
        cert.gamma = gamma;
        return cert;
    }
    if (rejection) {
        *rejection = "no certificate found by the two-stage construction (" +
                     (why.empty() ? std::string("diagonalization failed") : why) +
                     "); rejection does not prove instability";
    }
    return std::nullopt;
}

MatrixXd steady_state_covariance(const MatrixXd& M, const MatrixXd& W) {
    if (spectral_radius(M) >= 1.0)
        throw DivergenceError("steady_state_covariance: closed loop is not stable");
    MatrixXd Wsym = require_symmetric(W, 1e-9);
    MatrixXd X = Wsym;
    constexpr int kMaxIters = 1000000;
    for (int it = 0; it < kMaxIters; ++it) {
        MatrixXd next = M * X * M.transpose() + Wsym;
        double resid = (next - X).norm();
        X = std::move(next);
        if (resid <= 1e-10) return symmetrized(X);
        if (!X.allFinite() || X.norm() > 1e14)
            throw DivergenceError("steady_state_covariance: iteration diverged");
    }
    throw DivergenceError("steady_state_covariance: residual did not reach 1e-10");
}

MatrixXd steady_state_covariance(const LtiSystem& sys, const MatrixXd& K) {
    return steady_state_covariance(sys.A() + sys.B() * K, sys.W());
}

double covariance_gap_bound(double kappa, double gamma, const MatrixXd& W, double eps) {
    if (kappa < 1.0 || gamma <= 0.0 || gamma > 1.0)
        throw ContractViolation("covariance_gap_bound: need kappa >= 1 and gamma in (0, 1]");
    if (eps > gamma / (4.0 * kappa * kappa))
        throw ContractViolation("covariance_gap_bound: eps exceeds gamma / (4 kappa^2)");
    const double xi = W.trace() * 4.0 * std::pow(kappa, 6) / (gamma * gamma);
    return xi * eps;
}

CovarianceTrack sequential_covariance_tracking(const LtiSystem& sys,
                                               const std::vector<MatrixXd>& policies,
                                               const MatrixXd& Xhat1) {
    CovarianceTrack track;
    track.propagated.reserve(policies.size() + 1);
    track.steady.reserve(policies.size());
    MatrixXd X = require_symmetric(Xhat1, 1e-9);
    track.propagated.push_back(X);
    for (const MatrixXd& K : policies) {
        MatrixXd M = sys.A() + sys.B() * K;
        track.steady.push_back(steady_state_covariance(M, sys.W()));
        X = symmetrized(M * X * M.transpose() + sys.W());
        track.propagated.push_back(X);
    }
    return track;
}

}  // namespace dolqr
