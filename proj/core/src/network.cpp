#include "dolqr/network.hpp"

#include <cmath>

#include "dolqr/errors.hpp"

namespace dolqr {

namespace {

void validate_mixing(const MatrixXd& P) {
    const auto m = P.rows();
    if (m < 1 || P.cols() != m) throw ContractViolation("MixingMatrix: P must be square");
    if ((P.array() < -1e-15).any()) throw ContractViolation("MixingMatrix: negative entry");
    if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw ContractViolation("MixingMatrix: P must be symmetric");
    for (Eigen::Index i = 0; i < m; ++i) {
        if (std::abs(P.row(i).sum() - 1.0) > 1e-12)
            throw ContractViolation("MixingMatrix: row sums must equal 1");
        if (std::abs(P.col(i).sum() - 1.0) > 1e-12)
            throw ContractViolation("MixingMatrix: column sums must equal 1");
        if (P(i, i) <= 0.0) throw ContractViolation("MixingMatrix: diagonal must be positive");
    }
}

}  // namespace

double second_singular_value(const MatrixXd& P) {
    Eigen::JacobiSVD<MatrixXd> svd(P);
    if (svd.singularValues().size() < 2) return 0.0;
    return svd.singularValues()(1);
}

MixingMatrix::MixingMatrix(MatrixXd P) : P_(std::move(P)) {
    validate_mixing(P_);
    beta_ = second_singular_value(P_);
}

MixingMatrix MixingMatrix::build_cycle(int m, int neighbors_per_side, double self_weight) {
    if (m < 3) throw ContractViolation("build_cycle: need m >= 3");
    if (neighbors_per_side < 1 || 2 * neighbors_per_side >= m)
        throw ContractViolation("build_cycle: need 2 * neighbors_per_side < m");
    if (self_weight <= 0.0 || self_weight >= 1.0)
        throw ContractViolation("build_cycle: self_weight must lie in (0, 1)");
    const double w = (1.0 - self_weight) / (2.0 * neighbors_per_side);
    MatrixXd P = MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        P(i, i) = self_weight;
        for (int s = 1; s <= neighbors_per_side; ++s) {
            P(i, (i + s) % m) += w;
            P(i, (i - s + m) % m) += w;
        }
    }
    return MixingMatrix(std::move(P));
}

MixingMatrix MixingMatrix::build_complete(int m) {
    if (m < 2) throw ContractViolation("build_complete: need m >= 2");
    MatrixXd P = MatrixXd::Constant(m, m, 1.0 / m);
    return MixingMatrix(std::move(P));
}

MixingMatrix MixingMatrix::build_custom(MatrixXd P) {
    return MixingMatrix(std::move(P));
}

double MixingMatrix::mixing_error(int k) const {
    if (k < 0) throw ContractViolation("mixing_error: k must be nonnegative");
    const auto m = P_.rows();
    MatrixXd Pk = MatrixXd::Identity(m, m);
    for (int i = 0; i < k; ++i) Pk = Pk * P_;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        double s = (Pk.col(i).array() - 1.0 / static_cast<double>(m)).abs().sum();
        worst = std::max(worst, s);
    }
    return worst;
}

}  // namespace dolqr
