#pragma once

#include <optional>

#include "halfratio/core.hpp"

namespace halfratio {

enum class BaselineTag { L1Admm, L1MinusL2Dca, IrlsLp };

struct BaselineKind {
    BaselineTag tag = BaselineTag::L1Admm;
    double p = 0.5; // only meaningful for IrlsLp, must lie in (0, 1)

    void validate() const;
};

/// Soft-thresholding, the prox of t |.|_1.
double soft_threshold(double v, double t);
VectorXd soft_threshold(const VectorXd& v, double t);

/// Least-norm solution A^T (A A^T)^{-1} b (pseudoinverse solution).
VectorXd pinv_solution(const MatrixXd& A, const VectorXd& b);

/// ADMM for  zeta ||x||_1 + 0.5 ||Ax - b||^2  with the common stopping rule
/// (relative change below rel_change_tol, at most 5n iterations).
SolveResult solve_l1(const ProblemInstance& inst, double zeta, const SolverConfig& config);

/// Variant with a linear tilt:  zeta ||x||_1 - q^T x + 0.5 ||Ax - b||^2.
/// Used by the DCA outer loop; q = 0 recovers solve_l1.
SolveResult solve_l1_tilted(const ProblemInstance& inst, double zeta, const VectorXd& q,
                            const SolverConfig& config, const VectorXd& x0);

/// DCA for  zeta (||x||_1 - ||x||_2) + 0.5 ||Ax - b||^2, linearizing the
/// concave part at each outer iteration. The objective trace (one entry per
/// DCA iteration, including the initial point) is nonincreasing.
SolveResult solve_l1_minus_l2_dca(const ProblemInstance& inst, double zeta,
                                  const SolverConfig& config, const VectorXd& x0);

enum class IrlsMode { Auto, Equality, Penalized };

/// IRLS for the lp quasi-norm, p in (0,1). Equality-constrained
/// (weighted least norm) in the noiseless mode, penalized
/// (zeta sum (x_i^2+eps)^{p/2} + 0.5||Ax-b||^2) in the noisy mode;
/// Auto picks by the instance's noise metadata. The smoothing eps starts
/// at 1 and anneals by 10 whenever the iteration converges at the current
/// level (step below sqrt(eps)/100); with sparsity_est the coupled target
/// eps <= 0.1 |x|_(s+1) additionally applies once the support separates
/// from the tail. Initial point defaults to the pseudoinverse solution.
SolveResult solve_irls_lp(const ProblemInstance& inst, double p, const SolverConfig& config,
                          std::optional<int> sparsity_est = std::nullopt,
                          IrlsMode mode = IrlsMode::Auto,
                          std::optional<VectorXd> x0 = std::nullopt);

} // namespace halfratio
