#include "halfratio/solver.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "halfratio/prox.hpp"

namespace halfratio {

YUpdateFactorization::YUpdateFactorization(const MatrixXd& A, YStrategy strategy, CgParams cg)
    : A_(A), cg_(cg) {
    switch (strategy) {
        case YStrategy::Auto: smw_ = A.rows() <= 2048; break;
        case YStrategy::SmwFactorization: smw_ = true; break;
        case YStrategy::ConjugateGradient: smw_ = false; break;
    }
    if (smw_) AAt_ = A * A.transpose();
}

VectorXd YUpdateFactorization::apply_inverse(const VectorXd& v, double rho) {
    if (!(rho > 0)) throw std::invalid_argument("y_update: rho must be positive");
    if (smw_) {
        if (rho != rho_at_) {
            MatrixXd M = AAt_;
            M.diagonal().array() += rho;
            llt_.compute(M);
            if (llt_.info() != Eigen::Success)
                throw std::runtime_error("y_update: factorization of rho I + A A^T failed");
            rho_at_ = rho;
        }
        return v - A_.transpose() * llt_.solve(A_ * v);
    }
    // CG on (I + A^T A / rho) y = v
    const Eigen::Index n = A_.cols();
    const int max_iter = cg_.max_iter > 0 ? cg_.max_iter : static_cast<int>(10 * n);
    VectorXd y = v;
    VectorXd r = v - (y + A_.transpose() * (A_ * y) / rho);
    VectorXd p = r;
    double rs = r.squaredNorm();
    const double stop = cg_.tol * v.norm();
    for (int it = 0; it < max_iter && std::sqrt(rs) > stop; ++it) {
        VectorXd Ap = p + A_.transpose() * (A_ * p) / rho;
        const double alpha = rs / p.dot(Ap);
        y += alpha * p;
        r -= alpha * Ap;
        const double rs_new = r.squaredNorm();
        p = r + (rs_new / rs) * p;
        rs = rs_new;
    }
    return y;
}

VectorXd YUpdateFactorization::y_update(const VectorXd& x_next, const VectorXd& lambda, double rho,
                                        const ProblemInstance& inst) {
    if (x_next.size() != inst.cols() || lambda.size() != inst.cols())
        throw std::invalid_argument("y_update: dimension mismatch");
    const VectorXd v = (inst.A.transpose() * inst.b + lambda) / rho + x_next;
    return apply_inverse(v, rho);
}

namespace {

double inner_delta(const VectorXd& u, const VectorXd& theta_k, double rho, double gamma,
                   double zeta) {
    double nu = u.norm();
    if (nu == 0.0) nu = theta_k.norm();
    if (nu == 0.0) return 0.0;
    return 2.0 * zeta / ((gamma + rho) * std::sqrt(nu));
}

} // namespace

VectorXd inner_x_update(const InnerState& state, double rho, double zeta) {
    const double gamma = state.gamma;
    const double delta = inner_delta(state.u, state.theta_k, rho, gamma, zeta);
    const VectorXd p = state.u - state.vartheta / gamma;
    const VectorXd m = (rho * state.theta_k + gamma * p) / (gamma + rho);
    if (delta <= 0.0) return m;
    return half_threshold_vector(m, HalfThresholdParams(delta));
}

InnerResult inner_admm_solve(const VectorXd& theta_k, double rho, double gamma, double zeta,
                             const std::optional<std::pair<VectorXd, VectorXd>>& warm, int T,
                             double eps_inner, const std::optional<ResidualBalance>& gamma_policy) {
    const Eigen::Index n = theta_k.size();
    VectorXd u = warm ? warm->first : theta_k;
    VectorXd vt = warm ? warm->second : VectorXd::Zero(n);
    VectorXd x = VectorXd::Zero(n);
    int iters = 0;
    for (int t = 0; t < T; ++t) {
        const double delta = inner_delta(u, theta_k, rho, gamma, zeta);
        const VectorXd p = u - vt / gamma;
        const VectorXd m = (rho * theta_k + gamma * p) / (gamma + rho);
        x = delta > 0.0 ? half_threshold_vector(m, HalfThresholdParams(delta)) : m;

        const double c = half_norm_root(x);
        const VectorXd d = x + vt / gamma;
        // the u-objective's quadratic weight is gamma: d completes the square
        // of <vt, x-u> + gamma/2 ||x-u||^2
        VectorXd u_next = c == 0.0 ? d : solve_u_subproblem(d, c, zeta, gamma);

        vt += gamma * (x - u_next);
        const double primal = (x - u_next).norm();
        const double dual = gamma * (u_next - u).norm();
        u = std::move(u_next);
        iters = t + 1;
        if (!x.allFinite() || !u.allFinite() || !vt.allFinite())
            throw std::runtime_error("inner_admm_solve: non-finite iterate at inner iteration " +
                                     std::to_string(iters));
        if (primal < eps_inner) break;
        if (gamma_policy) gamma = adapt_penalty(gamma, primal, dual, *gamma_policy);
    }
    return {std::move(x), std::move(u), std::move(vt), gamma, iters};
}

double adapt_penalty(double rho, double primal_res, double dual_res,
                     const ResidualBalance& policy) {
    if (primal_res > policy.mu * dual_res) return rho * policy.tau_incr;
    if (dual_res > policy.mu * primal_res) return rho / policy.tau_decr;
    return rho;
}

double merit_value(const VectorXd& x, const VectorXd& y, double rho, double zeta,
                   const ProblemInstance& inst) {
    return objective_h(inst, zeta, x) + 0.5 * rho * (x - y).squaredNorm();
}

double augmented_lagrangian(const VectorXd& x, const VectorXd& y, const VectorXd& lambda,
                            double rho, double zeta, const ProblemInstance& inst) {
    return zeta * ratio_half_over_two(x) + 0.5 * (inst.A * y - inst.b).squaredNorm() +
           lambda.dot(x - y) + 0.5 * rho * (x - y).squaredNorm();
}

SolveResult admm_solve(const ProblemInstance& inst, const SolverConfig& config) {
    const VectorXd z = VectorXd::Zero(inst.cols());
    return admm_solve(inst, config, z, z, z);
}

SolveResult admm_solve(const ProblemInstance& inst, const SolverConfig& config, const VectorXd& x0,
                       const VectorXd& y0, const VectorXd& lambda0) {
    inst.validate();
    config.validate();
    const Eigen::Index n = inst.cols();
    if (x0.size() != n || y0.size() != n || lambda0.size() != n)
        throw std::invalid_argument("admm_solve: initial vectors must have length n");

    const int max_total = config.max_total_iters > 0 ? config.max_total_iters
                                                     : static_cast<int>(5 * n);
    const int outer_cap = std::min(config.max_outer, max_total);

    YUpdateFactorization fact(inst.A, config.y_strategy, config.cg);

    SolveResult res;
    res.x = x0;
    res.y = y0;
    res.lambda = lambda0;
    double rho = config.rho0;
    double gamma = config.gamma0;
    res.lagrangian_trace.push_back(augmented_lagrangian(x0, y0, lambda0, rho, config.zeta, inst));
    if (config.record_iterates) {
        res.x_trace.push_back(x0);
        res.y_trace.push_back(y0);
        res.lambda_trace.push_back(lambda0);
    }

    std::optional<std::pair<VectorXd, VectorXd>> warm;
    res.termination = Termination::MaxIters;

    for (int k = 0; k < outer_cap; ++k) {
        const VectorXd theta = res.y - res.lambda / rho;
        InnerResult inner =
            inner_admm_solve(theta, rho, gamma, config.zeta, warm, config.max_inner,
                             config.eps_inner,
                             config.adaptive_penalty ? std::optional<ResidualBalance>(
                                                           *config.adaptive_penalty)
                                                     : std::nullopt);
        res.total_inner_iters += inner.iters;
        gamma = inner.gamma;
        if (config.warm_start_inner) warm = std::make_pair(inner.u, inner.vartheta);

        VectorXd x_next = std::move(inner.x);
        bool x_accepted = true;
        if (config.monotone_x_accept) {
            // keep the previous x when the inner solve failed to improve the
            // x-subproblem; preserves the descent property of the outer loop
            const auto subobj = [&](const VectorXd& v) {
                return config.zeta * ratio_half_over_two(v) + 0.5 * rho * (v - theta).squaredNorm();
            };
            if (subobj(x_next) > subobj(res.x)) {
                x_next = res.x;
                x_accepted = false;
            }
        }

        const VectorXd y_next = fact.y_update(x_next, res.lambda, rho, inst);
        const VectorXd lambda_next = res.lambda + rho * (x_next - y_next);
        if (!x_next.allFinite() || !y_next.allFinite() || !lambda_next.allFinite())
            throw std::runtime_error("admm_solve: non-finite iterate at outer iteration " +
                                     std::to_string(k + 1));

        const double primal = (x_next - y_next).norm();
        const double dual = rho * (y_next - res.y).norm();
        const double dx = (x_next - res.x).norm();
        const double nx = x_next.norm();
        // relative change is undefined at the origin; never certify
        // convergence from it (the primal test handles exact fixed points)
        const double rel_change =
            nx > 0.0 ? dx / nx : std::numeric_limits<double>::infinity();

        res.x = x_next;
        res.y = y_next;
        res.lambda = lambda_next;
        res.outer_iters = k + 1;
        res.objective_trace.push_back(objective_h(inst, config.zeta, res.x));
        res.lagrangian_trace.push_back(
            augmented_lagrangian(res.x, res.y, res.lambda, rho, config.zeta, inst));
        if (config.record_iterates) {
            res.x_trace.push_back(res.x);
            res.y_trace.push_back(res.y);
            res.lambda_trace.push_back(res.lambda);
            res.rho_trace.push_back(rho);
        }

        if (primal < config.eps_out) {
            res.termination = Termination::Converged;
            break;
        }
        // a rejected x-step is a no-progress-by-design iteration, not
        // convergence; y and lambda keep moving, so do not stall on it
        if (x_accepted && rel_change < config.rel_change_tol) {
            res.termination = Termination::Stalled;
            break;
        }
        if (config.adaptive_penalty) rho = adapt_penalty(rho, primal, dual, *config.adaptive_penalty);
    }
    return res;
}

} // namespace halfratio
