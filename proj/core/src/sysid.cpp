#include "dolqr/sysid.hpp"

#include <algorithm>
#include <cmath>

#include "dolqr/errors.hpp"
#include "dolqr/matops.hpp"

namespace dolqr {

namespace {
constexpr double kOverflowGuard = 1e12;
}

PriorController make_prior_controller(const LtiSystem& sys, MatrixXd K0, double kappa0,
                                      double gamma0) {
    std::string why;
    if (!certify_strong_stability(sys, K0, kappa0, gamma0, &why))
        throw ContractViolation("make_prior_controller: K0 failed certification: " + why);
    return PriorController{std::move(K0), kappa0, gamma0};
}

ExplorationLog explore(const LtiSystem& sys, const PriorController& prior, int m, int rounds,
                       int stat_rounds, double sigma2, std::vector<RngStream>& plant_noise,
                       std::vector<RngStream>& action_noise,
                       const std::vector<VectorXd>& initial) {
    if (rounds < 0 || stat_rounds < 0 || stat_rounds > rounds)
        throw ContractViolation("explore: need 0 <= stat_rounds <= rounds");
    if (static_cast<int>(plant_noise.size()) < m || static_cast<int>(action_noise.size()) < m)
        throw ContractViolation("explore: need one noise stream per agent");
    if (!initial.empty() && static_cast<int>(initial.size()) != m)
        throw ContractViolation("explore: initial state count mismatch");

    const int d = sys.d();
    const int k = sys.k();
    const int n = d + k;
    const double excite_std = std::sqrt(2.0 * sigma2) * prior.kappa0;

    ExplorationLog log;
    log.T0 = stat_rounds;
    log.d = d;
    log.k = k;
    log.sigma2 = sigma2;
    log.theta = sys.theta();
    log.agents.resize(m);

    for (int i = 0; i < m; ++i) {
        AgentExploration& a = log.agents[i];
        a.Z = MatrixXd::Zero(n, rounds);
        a.Xnext = MatrixXd::Zero(d, rounds);
        a.Szz = MatrixXd::Zero(n, n);
        a.Sxz = MatrixXd::Zero(d, n);
        a.stat_rounds = stat_rounds;

        VectorXd x = initial.empty() ? VectorXd::Zero(d) : initial[i];
        for (int t = 0; t < rounds; ++t) {
            VectorXd u = prior.K0 * x + excite_std * action_noise[i].gauss_vec(k);
            VectorXd z(n);
            z << x, u;
            VectorXd xn = sys.step(x, u, plant_noise[i]);
            if (!xn.allFinite() || xn.norm() > kOverflowGuard)
                throw DivergenceError("explore: state exceeded overflow guard");
            a.Z.col(t) = z;
            a.Xnext.col(t) = xn;
            if (t < stat_rounds) {
                a.Szz.noalias() += z * z.transpose();
                a.Sxz.noalias() += xn * z.transpose();
            }
            x = std::move(xn);
        }
    }
    return log;
}

std::vector<VectorXd> final_states(const ExplorationLog& log) {
    std::vector<VectorXd> out;
    out.reserve(log.agents.size());
    for (const auto& a : log.agents) {
        if (a.Xnext.cols() == 0)
            out.push_back(VectorXd::Zero(log.d));
        else
            out.push_back(a.Xnext.col(a.Xnext.cols() - 1));
    }
    return out;
}

double local_cost(const AgentExploration& agent, const MatrixXd& D, double sigma2, double theta,
                  int m) {
    const auto Zs = agent.Z.leftCols(agent.stat_rounds);
    const auto Xs = agent.Xnext.leftCols(agent.stat_rounds);
    double fit = (D * Zs - Xs).squaredNorm();
    double ridge = sigma2 / (theta * theta) / m * D.squaredNorm();
    return fit + ridge;
}

MatrixXd local_cost_gradient(const AgentExploration& agent, const MatrixXd& D, double sigma2,
                             double theta, int m) {
    return 2.0 * (D * agent.Szz - agent.Sxz) + (2.0 * sigma2 / (theta * theta) / m) * D;
}

double default_extra_step(const ExplorationLog& log) {
    double lmax = 0.0;
    const double ridge = 2.0 * log.sigma2 / (log.theta * log.theta) / std::max(1, log.m());
    for (const auto& a : log.agents)
        lmax = std::max(lmax, 2.0 * max_eigenvalue(a.Szz) + ridge);
    if (lmax <= 0.0) return 1.0;
    return 1.0 / (2.0 * lmax);
}

namespace {

struct ExtraState {
    std::vector<MatrixXd> prev;       // D^k
    std::vector<MatrixXd> cur;        // D^{k+1}
    std::vector<MatrixXd> grad_prev;  // grad f_i(D^k)
};

ExtraState extra_first_step(const ExplorationLog& log, const MixingMatrix& net, double alpha,
                            const std::vector<MatrixXd>& init) {
    const int m = log.m();
    if (net.size() != m) throw ContractViolation("extra_solve: network size mismatch");
    if (alpha <= 0.0) throw ContractViolation("extra_solve: alpha must be positive");

    ExtraState st;
    if (init.empty()) {
        st.prev.assign(m, MatrixXd::Zero(log.d, log.n()));
    } else {
        if (static_cast<int>(init.size()) != m)
            throw ContractViolation("extra_solve: init size mismatch");
        st.prev = init;
    }

    st.grad_prev.resize(m);
    st.cur.resize(m);
    const MatrixXd& P = net.P();
    for (int i = 0; i < m; ++i)
        st.grad_prev[i] =
            local_cost_gradient(log.agents[i], st.prev[i], log.sigma2, log.theta, m);
    for (int i = 0; i < m; ++i) {
        MatrixXd mix = MatrixXd::Zero(log.d, log.n());
        for (int j = 0; j < m; ++j)
            if (P(j, i) != 0.0) mix.noalias() += P(j, i) * st.prev[j];
        st.cur[i] = mix - alpha * st.grad_prev[i];
    }
    return st;
}

// D^{k+2}_i = 2 sum_j Ptilde_{ji} D^{k+1}_j - sum_j Ptilde_{ji} D^k_j
//             - alpha (grad f_i(D^{k+1}_i) - grad f_i(D^k_i))
double extra_iterate(const ExplorationLog& log, const MixingMatrix& net, double alpha,
                     ExtraState& st) {
    const int m = log.m();
    const MatrixXd& P = net.P();
    std::vector<MatrixXd> next(m);
    std::vector<MatrixXd> grad_cur(m);
    for (int i = 0; i < m; ++i)
        grad_cur[i] = local_cost_gradient(log.agents[i], st.cur[i], log.sigma2, log.theta, m);
    for (int i = 0; i < m; ++i) {
        MatrixXd acc = MatrixXd::Zero(log.d, log.n());
        for (int j = 0; j < m; ++j) {
            if (P(j, i) == 0.0 && i != j) continue;
            const double ptilde = 0.5 * ((i == j ? 1.0 : 0.0) + P(j, i));
            acc.noalias() += ptilde * (2.0 * st.cur[j] - st.prev[j]);
        }
        next[i] = acc - alpha * (grad_cur[i] - st.grad_prev[i]);
        if (!next[i].allFinite() || next[i].norm() > kOverflowGuard)
            throw DivergenceError("extra_solve: iterate diverged; step size too large");
    }
    double spread = 0.0;
    for (int i = 0; i < m; ++i) spread = std::max(spread, (next[i] - st.cur[i]).norm());
    st.prev = std::move(st.cur);
    st.cur = std::move(next);
    st.grad_prev = std::move(grad_cur);
    return spread;
}

}  // namespace

std::vector<MatrixXd> extra_solve(const ExplorationLog& log, const MixingMatrix& net, double alpha,
                                  int T1, const std::vector<MatrixXd>& init) {
    ExtraState st = extra_first_step(log, net, alpha, init);
    for (int k = 0; k < T1; ++k) extra_iterate(log, net, alpha, st);
    return st.cur;
}

ExtraResult extra_solve_autotuned(const ExplorationLog& log, const MixingMatrix& net, double alpha,
                                  const ExtraStop& stop, const std::vector<MatrixXd>& init) {
    ExtraResult res;
    ExtraState st = extra_first_step(log, net, alpha, init);
    int cap = stop.hard_cap;
    for (int k = 0; k < cap; ++k) {
        double spread = extra_iterate(log, net, alpha, st);
        res.spread_history.push_back(spread);
        res.iterations = k + 1;
        if (static_cast<int>(res.spread_history.size()) == stop.rate_window) {
            // Geometric rate from a least-squares fit of log spread.
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            int cnt = 0;
            for (int t = 0; t < stop.rate_window; ++t) {
                if (res.spread_history[t] <= 0.0) continue;
                double x = t, y = std::log(res.spread_history[t]);
                sx += x; sy += y; sxx += x * x; sxy += x * y;
                ++cnt;
            }
            if (cnt >= 2) {
                double slope = (cnt * sxy - sx * sy) / std::max(1e-300, cnt * sxx - sx * sx);
                res.tau_hat = std::clamp(std::exp(slope), 1e-3, 0.999);
                if (stop.cap_scale > 0.0) {
                    int tuned = static_cast<int>(
                        std::ceil(stop.cap_scale / (-std::log(res.tau_hat))));
                    cap = std::clamp(tuned, stop.rate_window, stop.hard_cap);
                }
            }
        }
        if (spread < stop.spread_tol) break;
    }
    res.estimates = st.cur;
    return res;
}

MatrixXd centralized_ridge_oracle(const ExplorationLog& log) {
    const int n = log.n();
    MatrixXd V = (log.sigma2 / (log.theta * log.theta)) * MatrixXd::Identity(n, n);
    MatrixXd S = MatrixXd::Zero(log.d, n);
    for (const auto& a : log.agents) {
        V += a.Szz;
        S += a.Sxz;
    }
    return V.ldlt().solve(S.transpose()).transpose();
}

double estimation_error(const MatrixXd& D, const LtiSystem& sys) {
    return (D - sys.dynamics()).norm();
}

void dump_extra_errors(const ExplorationLog& log, const MixingMatrix& net, double alpha,
                       int iterations, std::ostream& out) {
    const MatrixXd oracle = centralized_ridge_oracle(log);
    ExtraState st = extra_first_step(log, net, alpha, {});
    out << "iteration,agent,frobenius_error\n";
    for (int k = 0; k < iterations; ++k) {
        for (int i = 0; i < log.m(); ++i)
            out << k << ',' << i << ',' << (st.cur[i] - oracle).norm() << '\n';
        extra_iterate(log, net, alpha, st);
    }
}

}  // namespace dolqr
