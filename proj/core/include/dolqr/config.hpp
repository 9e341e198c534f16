#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>

#include "dolqr/feasible_set.hpp"
#include "dolqr/lti.hpp"
#include "dolqr/network.hpp"

namespace dolqr {

// A matrix given either as c * I (rectangular identity pattern) or densely.
struct MatrixSpec {
    enum class Kind { ScaledIdentity, Dense };
    Kind kind = Kind::ScaledIdentity;
    double scale = 0.0;
    MatrixXd dense;

    MatrixXd materialize(int rows, int cols) const;
    static MatrixSpec scaled_identity(double s) { return MatrixSpec{Kind::ScaledIdentity, s, {}}; }
    static MatrixSpec from_dense(MatrixXd M) {
        return MatrixSpec{Kind::Dense, 0.0, std::move(M)};
    }
};

struct NetworkSpec {
    enum class Kind { Cycle, Complete, Custom };
    Kind kind = Kind::Cycle;
    int m = 20;
    int neighbors_per_side = 1;
    double self_weight = 0.6;
    MatrixXd custom;

    std::string name() const;
};

struct ExperimentConfig {
    // plant
    int d = 3;
    int k = 3;
    MatrixSpec A = MatrixSpec::scaled_identity(0.2);            // (1 - 2 gamma) I
    MatrixSpec B = MatrixSpec::scaled_identity(0.4 / 1.5);      // (gamma / kappa) I
    MatrixSpec W = MatrixSpec::scaled_identity(1.0);
    double sigma2 = 1.0;
    double theta = 1.0;

    // stability targets
    double kappa = 1.5;
    double gamma = 0.4;
    double kappa0 = 1.5;
    double gamma0 = 0.4;
    std::optional<MatrixSpec> K0;  // defaults to the benchmark gain -kappa * 1e-2 * I

    NetworkSpec network;

    // horizon and phase overrides
    int T = 20000;
    std::optional<int> T0;
    std::optional<int> T1;
    std::optional<double> eta;  // default T^{-1/3}
    std::optional<double> nu;   // default 2 kappa^4 lambda^2 / gamma

    double C = 300.0;
    double delta = 0.1;
    int trials = 10;
    std::uint64_t seed = 0;

    bool charge_exploration = true;   // include rounds 1..Ts-1 in both cost sums
    bool known_dynamics = false;      // skip identification, use the true [A B]
    bool random_extra_init = false;
    int export_stride = 1;
    double zeta = 1.0;                // proof constant in the minimum-horizon diagnostic
    DykstraOptions dykstra;
    bool debug_dumps = false;
    std::string debug_dir = ".";
};

LtiSystem build_system(const ExperimentConfig& cfg);
MixingMatrix build_network(const NetworkSpec& spec);

// Throws ContractViolation listing every problem found.
void validate_config(const ExperimentConfig& cfg);

// JSON round trip; unknown keys are rejected.
ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);
std::string config_to_json_text(const ExperimentConfig& cfg, int indent = 2);

}  // namespace dolqr
