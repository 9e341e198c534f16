#pragma once

#include <Eigen/Dense>
#include <ostream>
#include <vector>

#include "dolqr/lti.hpp"
#include "dolqr/network.hpp"
#include "dolqr/rng.hpp"

namespace dolqr {

struct PriorController {
    MatrixXd K0;
    double kappa0 = 1.0;
    double gamma0 = 1.0;
};

// Validates that K0 certifies as (kappa0, gamma0)-strongly stable for sys.
PriorController make_prior_controller(const LtiSystem& sys, MatrixXd K0, double kappa0,
                                      double gamma0);

// One agent's recorded exploration rounds. Column t of Z holds z_t = [x_t; u_t],
// column t of Xnext holds x_{t+1}. The ridge least-squares statistics Szz, Sxz
// are accumulated over the first stat_rounds columns only.
struct AgentExploration {
    MatrixXd Z;      // n x rounds
    MatrixXd Xnext;  // d x rounds
    MatrixXd Szz;    // n x n
    MatrixXd Sxz;    // d x n
    int stat_rounds = 0;
};

struct ExplorationLog {
    std::vector<AgentExploration> agents;
    int T0 = 0;  // rounds entering the least-squares statistics
    int d = 0;
    int k = 0;
    double sigma2 = 1.0;
    double theta = 1.0;

    int m() const { return static_cast<int>(agents.size()); }
    int n() const { return d + k; }
};

// Simulates `rounds` steps per agent under u ~ N(K0 x, 2 sigma2 kappa0^2 I),
// starting from `initial` (zero states when empty). The first stat_rounds
// pairs per agent enter the identification statistics. sigma2 is the
// excitation scale of the algorithm, not necessarily the plant noise floor.
ExplorationLog explore(const LtiSystem& sys, const PriorController& prior, int m, int rounds,
                       int stat_rounds, double sigma2, std::vector<RngStream>& plant_noise,
                       std::vector<RngStream>& action_noise,
                       const std::vector<VectorXd>& initial = {});

std::vector<VectorXd> final_states(const ExplorationLog& log);

// f_i(D) = sum_t ||D z_t - x_{t+1}||^2 + (sigma^2 theta^-2 / m) ||D||_F^2 and its gradient.
double local_cost(const AgentExploration& agent, const MatrixXd& D, double sigma2, double theta,
                  int m);
MatrixXd local_cost_gradient(const AgentExploration& agent, const MatrixXd& D, double sigma2,
                             double theta, int m);

// alpha = 1 / (2 max_i L_i); L_i = 2 lambda_max(Szz_i) + 2 sigma^2 theta^-2 / m.
double default_extra_step(const ExplorationLog& log);

// Runs the first mixing step and then T1 EXTRA iterations; returns D^{T1+1} per agent.
std::vector<MatrixXd> extra_solve(const ExplorationLog& log, const MixingMatrix& net, double alpha,
                                  int T1, const std::vector<MatrixXd>& init);

struct ExtraStop {
    double spread_tol = 1e-8;  // stop once max_i ||D^{k+1}_i - D^k_i||_F drops below
    int hard_cap = 5000;
    int rate_window = 20;  // iterations used to estimate the geometric rate
    double cap_scale = 0.0;  // when > 0, cap = cap_scale / (-log tau_hat), bounded by hard_cap
};

struct ExtraResult {
    std::vector<MatrixXd> estimates;
    int iterations = 0;
    double tau_hat = 0.0;
    std::vector<double> spread_history;
};

ExtraResult extra_solve_autotuned(const ExplorationLog& log, const MixingMatrix& net, double alpha,
                                  const ExtraStop& stop, const std::vector<MatrixXd>& init = {});

// Exact minimizer of sum_i f_i: (sum_i Sxz_i) (sum_i Szz_i + sigma^2 theta^-2 I)^{-1}.
MatrixXd centralized_ridge_oracle(const ExplorationLog& log);

double estimation_error(const MatrixXd& D, const LtiSystem& sys);

// Debug dump: per-iteration per-agent Frobenius error to the centralized solution.
void dump_extra_errors(const ExplorationLog& log, const MixingMatrix& net, double alpha,
                       int iterations, std::ostream& out);

}  // namespace dolqr
