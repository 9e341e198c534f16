#pragma once

#include <Eigen/Dense>

namespace dolqr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

bool is_symmetric(const MatrixXd& M, double tol = 1e-12);

inline MatrixXd symmetrized(const MatrixXd& M) { return 0.5 * (M + M.transpose()); }

// Resymmetrizes inputs that are symmetric within `tol`; throws ContractViolation otherwise.
MatrixXd require_symmetric(const MatrixXd& M, double tol = 1e-12);

/// Frobenius-nearest positive semidefinite matrix (eigenvalues clamped at 0).
MatrixXd psd_project(const MatrixXd& M);

/// Projection onto {Tr(X) <= nu}: uniform diagonal shift when the cap is exceeded.
MatrixXd trace_halfspace_project(const MatrixXd& M, double nu);

MatrixXd kron(const MatrixXd& A, const MatrixXd& B);

/// Largest singular value.
double spectral_norm(const MatrixXd& M);

double min_eigenvalue(const MatrixXd& sym);
double max_eigenvalue(const MatrixXd& sym);

double spectral_radius(const MatrixXd& M);

// Column-major stacking, so that kron(A, B) * vec(X) == vec(B * X * A^T).
VectorXd vec(const MatrixXd& M);
MatrixXd unvec(const VectorXd& v, int rows, int cols);

}  // namespace dolqr
