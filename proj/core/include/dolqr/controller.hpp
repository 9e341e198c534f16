#pragma once

#include <Eigen/Dense>
#include <ostream>
#include <vector>

#include "dolqr/costs.hpp"
#include "dolqr/feasible_set.hpp"
#include "dolqr/lti.hpp"
#include "dolqr/network.hpp"
#include "dolqr/rng.hpp"
#include "dolqr/sysid.hpp"

namespace dolqr {

struct ExtractedPolicy {
    MatrixXd K;  // k x d
    MatrixXd V;  // k x k, PSD after the 1e-15 diagonal fix
};

// K = Sigma_ux Sigma_xx^{-1}, V = Sigma_uu - K Sigma_xx K^T + 1e-15 I.
// A 1e-12 ridge is added to Sigma_xx when its smallest eigenvalue is below 1e-10.
ExtractedPolicy extract_policy(const MatrixXd& Sigma, int d, int k);

// u ~ N(K x, V); eigenvalues of V below -1e-8 are a contract violation,
// tiny negative ones are clamped in the factorization.
VectorXd sample_action(const ExtractedPolicy& policy, const VectorXd& x, RngStream& rng);

// One synchronous round of distributed online gradient descent:
// Sigma_i <- Pi_{S_i}( sum_j P_{ji} Sigma_j - eta * blockdiag(Q_i, R_i) ).
// All mixes read the previous round's iterates.
void odgd_round(std::vector<MatrixXd>& sigmas, const std::vector<FeasibleSet>& sets,
                const std::vector<CostPair>& costs, const MixingMatrix& net, double eta,
                const DykstraOptions& opts, long* dykstra_cycles = nullptr);

struct ExploitationOptions {
    double eta = 0.0;
    double nu = 0.0;
    MatrixXd W;          // noise covariance used in the per-agent feasible sets
    int Ts = 0;          // first exploitation round (1-based)
    int T = 0;           // final round
    DykstraOptions dykstra;
    double sqrt_nu_over_sigma = 0.0;      // ||K|| cap for the safety counters
    double state_bound = 0.0;             // ||x||^2 flag threshold (50 nu)
    const MatrixXd* surrogate_reference = nullptr;  // benchmark steady-state Sigma
    std::ostream* trace_sink = nullptr;   // per-round consensus/feasibility trace
    int trace_stride = 1;
};

struct ExploitationResult {
    // realized global cost per round (rows: t - Ts) and agent (cols)
    MatrixXd agent_cost;
    // per-round max pairwise iterate distance
    std::vector<double> spread;
    // cumulative L_t . (Sigma_{j,t} - Sigma_ref) per agent, when a reference is given
    VectorXd surrogate;
    std::vector<VectorXd> final_states;
    std::vector<MatrixXd> final_sigmas;
    long rho_failures = 0;       // rounds-agents with spectral_radius(A + B K) >= 1
    long knorm_failures = 0;     // rounds-agents with ||K|| > sqrt(nu)/sigma
    long state_flags = 0;        // rounds-agents with ||x||^2 > state_bound
    long policy_count = 0;       // total extracted policies
    double dykstra_cycles_mean = 0.0;
    double max_feasibility_gap = 0.0;
};

// Phase 3 of the online pipeline (rounds Ts..T): per round each agent extracts
// its policy from the current SDP iterate, acts on the true plant, observes its
// local cost pair and runs the projected mixing update. Feasible sets are fixed
// by the frozen per-agent estimates.
ExploitationResult run_exploitation(const LtiSystem& sys, const std::vector<MatrixXd>& estimates,
                                    const MixingMatrix& net, const CostSchedule& schedule,
                                    const PriorController& prior,
                                    std::vector<VectorXd> states,
                                    const ExploitationOptions& opts,
                                    std::vector<RngStream>& plant_noise,
                                    std::vector<RngStream>& action_noise);

}  // namespace dolqr
