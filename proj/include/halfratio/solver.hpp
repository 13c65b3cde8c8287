#pragma once

#include <optional>
#include <utility>

#include "halfratio/core.hpp"

namespace halfratio {

/// State of one outer iteration of the nested ADMM.
struct OuterState {
    VectorXd x, y, lambda;
    double rho = 1.0;
    int k = 0;
};

/// State of the inner ADMM that solves the x-subproblem at fixed theta_k.
struct InnerState {
    VectorXd x, u, vartheta;
    double gamma = 1.0;
    VectorXd theta_k;
    int t = 0;
};

/// Solves (I + A^T A / rho)^{-1} v, either by SMW reduction to the m x m
/// system (rho I + A A^T) with a cached Cholesky factor, or by conjugate
/// gradient on the n x n system. The factor cache is invalidated whenever
/// rho changes.
class YUpdateFactorization {
public:
    YUpdateFactorization(const MatrixXd& A, YStrategy strategy, CgParams cg = {});

    /// (I + A^T A / rho)^{-1} (A^T b / rho + lambda / rho + x_next)
    VectorXd y_update(const VectorXd& x_next, const VectorXd& lambda, double rho,
                      const ProblemInstance& inst);

    /// (I + A^T A / rho)^{-1} v
    VectorXd apply_inverse(const VectorXd& v, double rho);

    bool uses_smw() const { return smw_; }
    double rho_at_factorization() const { return rho_at_; }

private:
    const MatrixXd& A_;
    MatrixXd AAt_;            // m x m Gram matrix, built once for SMW
    Eigen::LLT<MatrixXd> llt_;
    double rho_at_ = -1.0;
    bool smw_ = true;
    CgParams cg_;
};

/// Half-thresholding step of the inner ADMM: computes
/// delta = 2 zeta / ((gamma + rho) ||u_t||^{1/2}),
/// p_t = u_t - vartheta_t / gamma, m_t = (rho theta_k + gamma p_t)/(gamma+rho)
/// and applies the half-threshold component-wise. When ||u_t|| = 0 the
/// delta computation falls back to ||theta_k||; if that is zero too, the
/// shrinkage is skipped (delta = 0) and m_t is returned unchanged.
VectorXd inner_x_update(const InnerState& state, double rho, double zeta);

struct InnerResult {
    VectorXd x, u, vartheta;
    double gamma = 1.0;
    int iters = 0;
};

/// Inner ADMM over (x, u, vartheta) for the x-subproblem at theta_k: the
/// half-thresholding x-step, the ray-scaling u-step (quadratic weight gamma,
/// the weight that defines d = x + vartheta/gamma), and the dual step.
/// Stops when ||x - u|| < eps_inner or after T iterations. Throws
/// std::runtime_error carrying the iteration index on divergence.
InnerResult inner_admm_solve(const VectorXd& theta_k, double rho, double gamma, double zeta,
                             const std::optional<std::pair<VectorXd, VectorXd>>& warm, int T,
                             double eps_inner,
                             const std::optional<ResidualBalance>& gamma_policy = std::nullopt);

/// Residual-balance update of a penalty parameter.
double adapt_penalty(double rho, double primal_res, double dual_res, const ResidualBalance& policy);

/// Merit function zeta * ratio(x) + 0.5||Ax - b||^2 + (rho/2)||x - y||^2.
double merit_value(const VectorXd& x, const VectorXd& y, double rho, double zeta,
                   const ProblemInstance& inst);

/// Augmented Lagrangian of the outer splitting at (x, y, lambda).
double augmented_lagrangian(const VectorXd& x, const VectorXd& y, const VectorXd& lambda,
                            double rho, double zeta, const ProblemInstance& inst);

/// The nested ADMM: outer loop over (x, y, lambda) with the inner ADMM
/// handling the x-subproblem. Stops when ||x - y|| < eps_out, when the
/// relative change of x drops below rel_change_tol, or when the iteration
/// caps are exhausted.
SolveResult admm_solve(const ProblemInstance& inst, const SolverConfig& config, const VectorXd& x0,
                       const VectorXd& y0, const VectorXd& lambda0);

/// Convenience overload starting from zeros.
SolveResult admm_solve(const ProblemInstance& inst, const SolverConfig& config);

} // namespace halfratio
