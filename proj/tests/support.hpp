#pragma once

#include <Eigen/Dense>
#include <random>

// Shared helpers for seeded randomized tests.
namespace testsup {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd random_matrix(std::mt19937_64& gen, int rows, int cols, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, 1.0);
    MatrixXd M(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) M(r, c) = scale * g(gen);
    return M;
}

inline MatrixXd random_symmetric(std::mt19937_64& gen, int n, double scale = 1.0) {
    MatrixXd M = random_matrix(gen, n, n, scale);
    return 0.5 * (M + M.transpose());
}

inline MatrixXd random_psd(std::mt19937_64& gen, int n, double scale = 1.0) {
    MatrixXd M = random_matrix(gen, n, n, scale);
    return M * M.transpose();
}

inline VectorXd random_vector(std::mt19937_64& gen, int n, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, 1.0);
    VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = scale * g(gen);
    return v;
}

// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = static_cast<int>(x.size());
    for (int i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace testsup
