#pragma once

#include <Eigen/Dense>

namespace dolqr {

using Eigen::MatrixXd;

// Symmetric doubly stochastic mixing weights with positive diagonal.
// beta (second largest singular value) governs information propagation;
// connectivity is checked as beta < 1 - 1e-12.
class MixingMatrix {
public:
    static MixingMatrix build_cycle(int m, int neighbors_per_side, double self_weight);
    static MixingMatrix build_complete(int m);
    static MixingMatrix build_custom(MatrixXd P);

    const MatrixXd& P() const { return P_; }
    int size() const { return static_cast<int>(P_.rows()); }
    double beta() const { return beta_; }
    bool connected() const { return beta_ < 1.0 - 1e-12; }

    // max_i sum_j |[P^k]_{ji} - 1/m|
    double mixing_error(int k) const;

private:
    explicit MixingMatrix(MatrixXd P);
    MatrixXd P_;
    double beta_ = 0.0;
};

double second_singular_value(const MatrixXd& P);

}  // namespace dolqr
