#include "dolqr/matops.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>

#include "dolqr/errors.hpp"

namespace dolqr {

bool is_symmetric(const MatrixXd& M, double tol) {
    if (M.rows() != M.cols()) return false;
    return (M - M.transpose()).cwiseAbs().maxCoeff() <= tol;
}

MatrixXd require_symmetric(const MatrixXd& M, double tol) {
    if (M.rows() != M.cols()) throw ContractViolation("require_symmetric: matrix is not square");
    double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
    if (asym > tol) {
        throw ContractViolation("require_symmetric: asymmetry " + std::to_string(asym) +
                                " exceeds tolerance " + std::to_string(tol));
    }
    return symmetrized(M);
}

MatrixXd psd_project(const MatrixXd& M) {
    MatrixXd S = require_symmetric(M);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
    VectorXd lam = es.eigenvalues().cwiseMax(0.0);
    MatrixXd R = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
    return symmetrized(R);
}

MatrixXd trace_halfspace_project(const MatrixXd& M, double nu) {
    if (nu <= 0.0) throw ContractViolation("trace_halfspace_project: nu must be positive");
    MatrixXd S = require_symmetric(M);
    double tr = S.trace();
    if (tr <= nu) return S;
    const double shift = (tr - nu) / static_cast<double>(S.rows());
    S.diagonal().array() -= shift;
    return S;
}

MatrixXd kron(const MatrixXd& A, const MatrixXd& B) {
    return Eigen::kroneckerProduct(A, B).eval();
}

double spectral_norm(const MatrixXd& M) {
    if (M.size() == 0) return 0.0;
    Eigen::JacobiSVD<MatrixXd> svd(M);
    return svd.singularValues()(0);
}

double min_eigenvalue(const MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(require_symmetric(sym, 1e-9));
    return es.eigenvalues().minCoeff();
}

double max_eigenvalue(const MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(require_symmetric(sym, 1e-9));
    return es.eigenvalues().maxCoeff();
}

double spectral_radius(const MatrixXd& M) {
    Eigen::EigenSolver<MatrixXd> es(M, /*computeEigenvectors=*/false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

VectorXd vec(const MatrixXd& M) {
    return Eigen::Map<const VectorXd>(M.data(), M.size());
}

MatrixXd unvec(const VectorXd& v, int rows, int cols) {
    if (v.size() != static_cast<Eigen::Index>(rows) * cols)
        throw ContractViolation("unvec: length does not match rows*cols");
    return Eigen::Map<const MatrixXd>(v.data(), rows, cols);
}

}  // namespace dolqr
