#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace halfratio {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// A sparse-recovery problem: sensing matrix A (m x n), observation b,
/// optional ground truth and noise metadata. Immutable after construction.
struct ProblemInstance {
    MatrixXd A;
    VectorXd b;
    std::optional<VectorXd> ground_truth;
    std::optional<double> noise_db;
    std::uint64_t seed = 0;

    Eigen::Index rows() const { return A.rows(); }
    Eigen::Index cols() const { return A.cols(); }

    /// Throws std::invalid_argument on dimension mismatch or empty shapes.
    void validate() const;
};

struct ResidualBalance {
    double mu = 10.0;
    double tau_incr = 2.0;
    double tau_decr = 2.0;
};

struct CgParams {
    double tol = 1e-10;
    int max_iter = 0; // 0 = auto (10 n)
};

enum class YStrategy { Auto, SmwFactorization, ConjugateGradient };

/// All solver tunables. Shared read-only between concurrent solves.
struct SolverConfig {
    double zeta = 1e-5;   // regularization weight
    double rho0 = 1.0;    // outer penalty
    double gamma0 = 1.0;  // inner penalty
    double eps_out = 1e-8;
    double eps_inner = 1e-8;
    int max_outer = 100000;                 // K
    int max_inner = 50;                     // T
    double rel_change_tol = 1e-8;
    int max_total_iters = 0;                // 0 = auto (5 n)
    std::optional<ResidualBalance> adaptive_penalty = ResidualBalance{};
    YStrategy y_strategy = YStrategy::Auto;
    CgParams cg;
    bool warm_start_inner = false;  // default: cold start each outer iteration
    bool monotone_x_accept = true;  // keep previous x if inner result worsens the x-subproblem
    bool record_iterates = false;   // keep per-iteration (x, y, lambda, rho) for diagnostics

    void validate() const;
};

enum class Termination { Converged, MaxIters, Stalled };

const char* to_string(Termination t);

struct SolveResult {
    VectorXd x;
    VectorXd y;
    VectorXd lambda;
    std::vector<double> objective_trace;   // H(x_k), one entry per outer iteration
    std::vector<double> lagrangian_trace;  // augmented Lagrangian; entry 0 is the initial point
    Termination termination = Termination::MaxIters;
    int outer_iters = 0;
    int total_inner_iters = 0;

    // populated only when SolverConfig::record_iterates is set; index 0 is the initial point
    std::vector<VectorXd> x_trace, y_trace, lambda_trace;
    std::vector<double> rho_trace; // rho used in iteration k (producing trace index k+1)
};

/// sum_i sqrt(|x_i|), i.e. the 1/2 quasi-norm raised to the 1/2.
double half_norm_root(const VectorXd& x);

/// ||x||_{1/2}^{1/2} / ||x||_2^{1/2} with the convention that the value is
/// exactly 1 at x = 0. Throws on non-finite input.
double ratio_half_over_two(const VectorXd& x);

/// zeta * ratio_half_over_two(x) + 0.5 ||Ax - b||_2^2.
double objective_h(const ProblemInstance& inst, double zeta, const VectorXd& x);

/// Plain-text instance format: header "m n", m rows of A, one row of b,
/// optional ground-truth row prefixed "#gt".
void save_instance(const ProblemInstance& inst, const std::string& path);
ProblemInstance load_instance(const std::string& path);

} // namespace halfratio
