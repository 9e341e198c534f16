#include "dolqr/controller.hpp"

#include <algorithm>
#include <cmath>

#include "dolqr/errors.hpp"
#include "dolqr/matops.hpp"

namespace dolqr {

ExtractedPolicy extract_policy(const MatrixXd& Sigma, int d, int k) {
    if (Sigma.rows() != d + k || Sigma.cols() != d + k)
        throw ContractViolation("extract_policy: Sigma must be (d+k) x (d+k)");
    MatrixXd Sxx = symmetrized(Sigma.topLeftCorner(d, d));
    const MatrixXd Sux = Sigma.bottomLeftCorner(k, d);
    const MatrixXd Suu = symmetrized(Sigma.bottomRightCorner(k, k));

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(Sxx);
    double lmin = es.eigenvalues().minCoeff();
    if (lmin < 1e-10) {
        Sxx += 1e-12 * MatrixXd::Identity(d, d);
        lmin += 1e-12;
    }
    if (lmin < 1e-12)
        throw ContractViolation("extract_policy: Sigma_xx is numerically singular");
    Eigen::LDLT<MatrixXd> ldlt(Sxx);

    ExtractedPolicy p;
    p.K = ldlt.solve(Sux.transpose()).transpose();
    p.V = symmetrized(Suu - p.K * Sxx * p.K.transpose());
    p.V += 1e-15 * MatrixXd::Identity(k, k);
    return p;
}

VectorXd sample_action(const ExtractedPolicy& policy, const VectorXd& x, RngStream& rng) {
    const int k = static_cast<int>(policy.V.rows());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(policy.V);
    // Projected iterates sit on the PSD boundary, so the Schur complement V can
    // dip below zero by the projection tolerance scale; clamp within 1e-6 and
    // treat anything worse as a genuine violation.
    if (es.eigenvalues().minCoeff() < -1e-6)
        throw ContractViolation("sample_action: V is not PSD");
    MatrixXd factor = es.eigenvectors() *
                      es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    return policy.K * x + factor * rng.gauss_vec(k);
}

void odgd_round(std::vector<MatrixXd>& sigmas, const std::vector<FeasibleSet>& sets,
                const std::vector<CostPair>& costs, const MixingMatrix& net, double eta,
                const DykstraOptions& opts, long* dykstra_cycles) {
    const int m = static_cast<int>(sigmas.size());
    if (static_cast<int>(sets.size()) != m || static_cast<int>(costs.size()) != m ||
        net.size() != m)
        throw ContractViolation("odgd_round: per-agent containers disagree on m");
    if (eta <= 0.0) throw ContractViolation("odgd_round: eta must be positive");

    const MatrixXd& P = net.P();
    const int n = static_cast<int>(sigmas.empty() ? 0 : sigmas[0].rows());
    std::vector<MatrixXd> next(m);
    for (int i = 0; i < m; ++i) {
        MatrixXd mix = MatrixXd::Zero(n, n);
        for (int j = 0; j < m; ++j)
            if (P(j, i) != 0.0) mix.noalias() += P(j, i) * sigmas[j];
        const int d = sets[i].d();
        const int k = sets[i].k();
        mix.topLeftCorner(d, d).noalias() -= eta * costs[i].Q;
        mix.bottomRightCorner(k, k).noalias() -= eta * costs[i].R;
        int cycles = 0;
        next[i] = sets[i].dykstra_project(mix, opts, &cycles);
        if (dykstra_cycles) *dykstra_cycles += cycles;
    }
    sigmas = std::move(next);
}

namespace {

// Common initialization: each agent projects the shared seed
// blockdiag(X_prior, (nu / 2k) I) onto its own set, with X_prior the
// steady-state covariance of the prior controller on the agent's estimate.
MatrixXd initial_sigma(const FeasibleSet& set, const MatrixXd& estimate,
                       const PriorController& prior, const MatrixXd& W, double nu, int d, int k,
                       const DykstraOptions& opts) {
    const MatrixXd Ahat = estimate.leftCols(d);
    const MatrixXd Bhat = estimate.rightCols(k);
    MatrixXd Mhat = Ahat + Bhat * prior.K0;
    if (spectral_radius(Mhat) >= 1.0)
        throw DivergenceError("run_exploitation: prior controller unstable on estimate");
    MatrixXd seed = MatrixXd::Zero(d + k, d + k);
    seed.topLeftCorner(d, d) = steady_state_covariance(Mhat, W);
    seed.bottomRightCorner(k, k) = (nu / (2.0 * k)) * MatrixXd::Identity(k, k);
    return set.dykstra_project(seed, opts);
}

}  // namespace

ExploitationResult run_exploitation(const LtiSystem& sys, const std::vector<MatrixXd>& estimates,
                                    const MixingMatrix& net, const CostSchedule& schedule,
                                    const PriorController& prior,
                                    std::vector<VectorXd> states,
                                    const ExploitationOptions& opts,
                                    std::vector<RngStream>& plant_noise,
                                    std::vector<RngStream>& action_noise) {
    const int m = net.size();
    const int d = sys.d();
    const int k = sys.k();
    if (static_cast<int>(estimates.size()) != m || static_cast<int>(states.size()) != m)
        throw ContractViolation("run_exploitation: need one estimate and state per agent");
    if (opts.Ts < 1 || opts.T < opts.Ts)
        throw ContractViolation("run_exploitation: need 1 <= Ts <= T");
    if (schedule.T() < opts.T)
        throw ContractViolation("run_exploitation: schedule shorter than horizon");

    std::vector<FeasibleSet> sets;
    sets.reserve(m);
    for (int i = 0; i < m; ++i) sets.emplace_back(estimates[i], opts.W, opts.nu);

    std::vector<MatrixXd> sigmas(m);
    for (int i = 0; i < m; ++i)
        sigmas[i] = initial_sigma(sets[i], estimates[i], prior, opts.W, opts.nu, d, k,
                                  opts.dykstra);

    const int rounds = opts.T - opts.Ts + 1;
    ExploitationResult res;
    res.agent_cost.resize(rounds, m);
    res.spread.resize(rounds, 0.0);
    res.surrogate = VectorXd::Zero(m);

    long total_cycles = 0;
    std::vector<CostPair> costs(m);
    for (int t = opts.Ts; t <= opts.T; ++t) {
        const int row = t - opts.Ts;

        double spread = 0.0;
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j)
                spread = std::max(spread, (sigmas[i] - sigmas[j]).norm());
        res.spread[row] = spread;

        if (opts.surrogate_reference) {
            const VectorXd qd = schedule.global_q_diag(t);
            const VectorXd rd = schedule.global_r_diag(t);
            for (int j = 0; j < m; ++j) {
                const MatrixXd diff = sigmas[j] - *opts.surrogate_reference;
                double v = qd.dot(diff.topLeftCorner(d, d).diagonal()) +
                           rd.dot(diff.bottomRightCorner(k, k).diagonal());
                res.surrogate(j) += v;
            }
        }

        for (int i = 0; i < m; ++i) {
            ExtractedPolicy policy = extract_policy(sigmas[i], d, k);
            ++res.policy_count;
            if (opts.sqrt_nu_over_sigma > 0.0 &&
                spectral_norm(policy.K) > opts.sqrt_nu_over_sigma)
                ++res.knorm_failures;
            if (spectral_radius(sys.A() + sys.B() * policy.K) >= 1.0) ++res.rho_failures;

            VectorXd u = sample_action(policy, states[i], action_noise[i]);
            res.agent_cost(row, i) = schedule.global_cost(t, states[i], u);
            states[i] = sys.step(states[i], u, plant_noise[i]);
            if (!states[i].allFinite() || states[i].norm() > 1e12)
                throw DivergenceError("run_exploitation: state exceeded overflow guard");
            if (opts.state_bound > 0.0 && states[i].squaredNorm() > opts.state_bound)
                ++res.state_flags;

            costs[i] = schedule.pair(t, i);
        }

        odgd_round(sigmas, sets, costs, net, opts.eta, opts.dykstra, &total_cycles);

        for (int i = 0; i < m; ++i) {
            double gap = sets[i].violation(sigmas[i]).max();
            res.max_feasibility_gap = std::max(res.max_feasibility_gap, gap);
        }

        if (opts.trace_sink && row % opts.trace_stride == 0) {
            for (int i = 0; i < m; ++i) {
                FeasibilityGaps g = sets[i].violation(sigmas[i]);
                ExtractedPolicy p = extract_policy(sigmas[i], d, k);
                (*opts.trace_sink) << t << ',' << i << ',' << g.psd << ',' << g.trace << ','
                                   << g.affine << ',' << spectral_norm(p.K) << ',' << spread
                                   << '\n';
            }
        }
    }

    res.dykstra_cycles_mean =
        static_cast<double>(total_cycles) / (static_cast<double>(rounds) * m);
    res.final_states = std::move(states);
    res.final_sigmas = std::move(sigmas);
    return res;
}

}  // namespace dolqr
