#include "halfratio/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "halfratio/solver.hpp"

namespace halfratio {

void BaselineKind::validate() const {
    if (tag == BaselineTag::IrlsLp && !(p > 0 && p < 1))
        throw std::invalid_argument("BaselineKind: IRLS exponent p must lie in (0, 1)");
}

double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

VectorXd soft_threshold(const VectorXd& v, double t) {
    VectorXd out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = soft_threshold(v[i], t);
    return out;
}

VectorXd pinv_solution(const MatrixXd& A, const VectorXd& b) {
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(A);
    return cod.solve(b);
}

SolveResult solve_l1(const ProblemInstance& inst, double zeta, const SolverConfig& config) {
    return solve_l1_tilted(inst, zeta, VectorXd::Zero(inst.cols()), config,
                           VectorXd::Zero(inst.cols()));
}

namespace {

// ADMM for the constrained limit  min ||z||_1 - qhat^T x  s.t. Ax = b, x = z,
// the zeta -> 0 geometry of the penalized problem. The x-step projects onto
// the measurement manifold, so the z-threshold is 1/rho instead of zeta/rho
// and the iteration converges at a penalty-independent rate. Used as a warm
// start when the penalty is negligible against the data scale.
VectorXd basis_pursuit_warm_start(const ProblemInstance& inst, const VectorXd& q_hat,
                                  const SolverConfig& config, const VectorXd& x0, int budget) {
    const Eigen::Index n = inst.cols();
    Eigen::LDLT<MatrixXd> gram((inst.A * inst.A.transpose()).eval());
    const auto project = [&](const VectorXd& v) {
        return VectorXd(v - inst.A.transpose() * gram.solve(inst.A * v - inst.b));
    };
    double rho = 1.0;
    VectorXd z = x0;
    VectorXd w = VectorXd::Zero(n);
    for (int k = 0; k < budget; ++k) {
        const VectorXd x = project(z - w + q_hat / rho);
        const VectorXd z_next = soft_threshold(x + w, 1.0 / rho);
        w += x - z_next;
        const double primal = (x - z_next).norm();
        const double dual = rho * (z_next - z).norm();
        const double dz = (z_next - z).norm();
        const double nz = z_next.norm();
        z = z_next;
        if (!z.allFinite() || !w.allFinite()) return x0;
        if (nz > 0.0 && dz / nz < 1e-10 && primal < 1e-9 * std::max(1.0, nz)) break;
        if (config.adaptive_penalty) {
            const double rho_next = adapt_penalty(rho, primal, dual, *config.adaptive_penalty);
            if (rho_next != rho) {
                w *= rho / rho_next;
                rho = rho_next;
            }
        }
    }
    return z;
}

} // namespace

SolveResult solve_l1_tilted(const ProblemInstance& inst, double zeta, const VectorXd& q,
                            const SolverConfig& config, const VectorXd& x0) {
    inst.validate();
    if (!(zeta > 0)) throw std::invalid_argument("solve_l1: zeta must be positive");
    const Eigen::Index n = inst.cols();
    if (q.size() != n || x0.size() != n)
        throw std::invalid_argument("solve_l1: dimension mismatch");

    const int cap = config.max_total_iters > 0 ? config.max_total_iters : static_cast<int>(5 * n);
    double rho = config.rho0;
    YUpdateFactorization fact(inst.A, config.y_strategy, config.cg);
    const VectorXd Atb = inst.A.transpose() * inst.b;

    VectorXd z0 = x0;
    const double data_scale = Atb.lpNorm<Eigen::Infinity>();
    if (!inst.noise_db && zeta < 1e-3 * data_scale && data_scale > 0.0)
        z0 = basis_pursuit_warm_start(inst, VectorXd(q / zeta), config, x0, cap / 2);

    const auto objective = [&](const VectorXd& v) {
        return zeta * v.lpNorm<1>() - q.dot(v) + 0.5 * (inst.A * v - inst.b).squaredNorm();
    };

    SolveResult res;
    VectorXd z = z0;            // sparse iterate
    VectorXd w = VectorXd::Zero(n); // scaled dual
    VectorXd x = z0;
    res.objective_trace.push_back(objective(z));
    res.termination = Termination::MaxIters;

    for (int k = 0; k < cap; ++k) {
        // x-update: (A^T A + rho I) x = A^T b + q + rho (z - w)
        const VectorXd rhs = Atb + q + rho * (z - w);
        x = fact.apply_inverse(rhs, rho) / rho;
        const VectorXd z_next = soft_threshold(x + w, zeta / rho);
        w += x - z_next;

        const double primal = (x - z_next).norm();
        const double dual = rho * (z_next - z).norm();
        const double dz = (z_next - z).norm();
        const double nz = z_next.norm();
        const double rel_change = nz > 0.0 ? dz / nz : (dz > 0.0 ? 1.0 : 0.0);
        z = z_next;
        res.outer_iters = k + 1;
        res.objective_trace.push_back(objective(z));
        if (!z.allFinite() || !w.allFinite())
            throw std::runtime_error("solve_l1: non-finite iterate at iteration " +
                                     std::to_string(k + 1));
        if (rel_change < config.rel_change_tol && primal < 1e-6 * std::max(1.0, nz)) {
            res.termination = Termination::Stalled;
            break;
        }
        if (config.adaptive_penalty) {
            const double rho_next = adapt_penalty(rho, primal, dual, *config.adaptive_penalty);
            if (rho_next != rho) {
                w *= rho / rho_next; // keep lambda = rho w unchanged
                rho = rho_next;
            }
        }
    }
    res.x = z;
    res.y = x;
    res.lambda = rho * w;
    return res;
}

SolveResult solve_l1_minus_l2_dca(const ProblemInstance& inst, double zeta,
                                  const SolverConfig& config, const VectorXd& x0) {
    inst.validate();
    const Eigen::Index n = inst.cols();
    if (x0.size() != n) throw std::invalid_argument("solve_l1_minus_l2_dca: x0 must have length n");

    const auto objective = [&](const VectorXd& v) {
        return zeta * (v.lpNorm<1>() - v.norm()) + 0.5 * (inst.A * v - inst.b).squaredNorm();
    };

    SolverConfig sub = config;
    sub.rel_change_tol = 1e-6; // inner tolerance of each DCA subproblem

    SolveResult res;
    res.x = x0;
    res.objective_trace.push_back(objective(x0));
    res.termination = Termination::MaxIters;
    const int max_dca = 200;

    for (int j = 0; j < max_dca; ++j) {
        const double nx = res.x.norm();
        const VectorXd q = nx > 0.0 ? VectorXd(zeta * res.x / nx) : VectorXd(VectorXd::Zero(n));
        SolveResult step = solve_l1_tilted(inst, zeta, q, sub, res.x);
        res.outer_iters = j + 1;
        res.total_inner_iters += step.outer_iters;

        const double f_new = objective(step.x);
        if (!(f_new <= res.objective_trace.back())) {
            // subproblem failed to improve the true objective; stop at the
            // current iterate so the trace stays monotone
            res.termination = Termination::Stalled;
            break;
        }
        const double dx = (step.x - res.x).norm();
        const double nrm = step.x.norm();
        res.x = step.x;
        res.y = step.y;
        res.lambda = step.lambda;
        res.objective_trace.push_back(f_new);
        const double rel_change = nrm > 0.0 ? dx / nrm : (dx > 0.0 ? 1.0 : 0.0);
        if (rel_change < config.rel_change_tol) {
            res.termination = Termination::Stalled;
            break;
        }
    }
    if (res.y.size() == 0) {
        res.y = res.x;
        res.lambda = VectorXd::Zero(n);
    }
    return res;
}

namespace {

// (s+1)-th largest magnitude of x (1-based s), 0 when s >= n.
double magnitude_at(const VectorXd& x, int s) {
    const Eigen::Index n = x.size();
    if (s >= n) return 0.0;
    std::vector<double> mag(n);
    for (Eigen::Index i = 0; i < n; ++i) mag[i] = std::abs(x[i]);
    std::nth_element(mag.begin(), mag.begin() + s, mag.end(), std::greater<double>());
    return mag[s];
}

} // namespace

SolveResult solve_irls_lp(const ProblemInstance& inst, double p, const SolverConfig& config,
                          std::optional<int> sparsity_est, IrlsMode mode,
                          std::optional<VectorXd> x0) {
    inst.validate();
    if (!(p > 0 && p < 1)) throw std::invalid_argument("solve_irls_lp: p must lie in (0, 1)");
    const Eigen::Index n = inst.cols();
    const bool penalized =
        mode == IrlsMode::Penalized || (mode == IrlsMode::Auto && inst.noise_db.has_value());
    const double zeta = config.zeta;
    const int cap = config.max_total_iters > 0 ? config.max_total_iters : static_cast<int>(5 * n);
    const double eps_floor = 1e-16;

    VectorXd x = x0 ? *x0 : pinv_solution(inst.A, inst.b);
    double eps = 1.0;

    const auto smoothed = [&](const VectorXd& v, double e) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < v.size(); ++i) s += std::pow(v[i] * v[i] + e, p / 2.0);
        if (penalized) return zeta * s + 0.5 * (inst.A * v - inst.b).squaredNorm();
        return s;
    };

    SolveResult res;
    res.objective_trace.push_back(smoothed(x, eps));
    res.termination = Termination::MaxIters;

    for (int k = 0; k < cap; ++k) {
        // D_ii = (x_i^2 + eps)^{1 - p/2} (scaled by 1/(zeta p) in penalized mode)
        VectorXd D(n);
        for (Eigen::Index i = 0; i < n; ++i) D[i] = std::pow(x[i] * x[i] + eps, 1.0 - p / 2.0);
        VectorXd x_next;
        if (penalized) {
            D /= zeta * p;
            MatrixXd M = inst.A * D.asDiagonal() * inst.A.transpose();
            M.diagonal().array() += 1.0;
            x_next = D.asDiagonal() * (inst.A.transpose() * M.llt().solve(inst.b));
        } else {
            MatrixXd M = inst.A * D.asDiagonal() * inst.A.transpose();
            Eigen::LDLT<MatrixXd> ldlt(M);
            x_next = D.asDiagonal() * (inst.A.transpose() * ldlt.solve(inst.b));
        }
        if (!x_next.allFinite())
            throw std::runtime_error("solve_irls_lp: non-finite iterate at iteration " +
                                     std::to_string(k + 1));

        const double step = (x_next - x).norm();
        x = x_next;
        res.outer_iters = k + 1;

        // The sparsity-coupled target eps <= 0.1 |x|_(s+1) is applied only
        // once the s largest entries separate clearly from the tail;
        // applied unconditionally it locks wrong supports while eps is
        // still large, and it admits spurious equilibria |x|_(s+1) = 10 eps.
        if (sparsity_est && *sparsity_est >= 1 && *sparsity_est < n) {
            const double tail = magnitude_at(x, *sparsity_est);
            const double head = magnitude_at(x, *sparsity_est - 1);
            if (tail <= 1e-3 * head) eps = std::min(eps, std::max(0.1 * tail, eps_floor));
        }

        const bool stage_done = step < std::sqrt(eps) / 100.0;
        res.objective_trace.push_back(smoothed(x, eps));

        if (stage_done) {
            if (eps <= eps_floor) {
                res.termination = Termination::Stalled;
                break;
            }
            eps = std::max(eps / 10.0, eps_floor); // continuation to the next smoothing level
        }
    }
    res.x = x;
    res.y = x;
    res.lambda = VectorXd::Zero(n);
    return res;
}

} // namespace halfratio
