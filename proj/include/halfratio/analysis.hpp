#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "halfratio/core.hpp"

namespace halfratio {

/// Result of an eNSP check: does (1-c)^{1/p} ||v_T||_p <= c^{1/p} ||v_{T^c}||_p
/// hold for every kernel vector v and every support of size at most s?
struct EnspCertificate {
    int s = 0;
    double p = 1.0;
    double c = 0.5;
    bool holds = true;
    bool vacuous = false;  // trivial kernel
    bool sampled = false;  // kernel dimension > 1, verdict from sphere sampling
    std::optional<std::pair<VectorXd, std::vector<int>>> witness; // violating (v, T)
    double worst_margin = 0.0; // max over samples of (1-c)||v_T||_p^p - c||v_{T^c}||_p^p
};

/// Orthonormal basis of ker(A) (columns); empty when the kernel is trivial.
MatrixXd kernel_basis(const MatrixXd& A);

/// Brute-force eNSP certificate. Exact over supports (the extremal support
/// for a fixed v is the set of s largest |v_i|); exact over the kernel when
/// its dimension is 1, sampled (n_kernel_samples points plus local
/// refinement) otherwise. Requires n <= 24.
EnspCertificate check_ensp(const MatrixXd& A, int s, double p, double c, int n_kernel_samples,
                           std::uint64_t seed = 12345);

/// Upper bound on inf ||v||_p / ||v||_2 over nonzero kernel vectors,
/// estimated by sphere sampling plus local refinement. Throws when the
/// kernel is trivial.
double kernel_ratio_infimum(const MatrixXd& A, double p, int n_samples,
                            std::uint64_t seed = 12345);

/// The 7x8 demonstration system whose solution set is the one-parameter
/// family x(sigma).
MatrixXd toy_matrix();
VectorXd toy_observation();
VectorXd toy_solution(double sigma);

struct ToyScanRow {
    double sigma;
    double ratio_half_over_two;
    double l1;
    double l1_minus_l2;
};

struct ToyScanResult {
    std::vector<ToyScanRow> table;
    double best_sigma_ratio = 0.0;
    double best_sigma_l1 = 0.0;
    double best_sigma_l1_minus_l2 = 0.0;
    double max_feasibility_violation = 0.0; // max over the grid of ||A x(sigma) - b||
};

/// Evaluates the surrogates along x(sigma) on a uniform grid and returns the
/// per-surrogate grid argmin.
ToyScanResult toy_example_scan(double lo, double step, double hi);

struct DescentReport {
    double lambda_min_AtA = 0.0;
    double lambda_max_AtA = 0.0; // L_g
    double rho_threshold = 0.0;  // (-lmin + sqrt(lmin^2 + 8 L_g^2)) / 2
    double rho_used = 0.0;
    bool rho_meets_threshold = false;
    int monotonicity_violations = 0;
    double worst_violation = 0.0;
    double slack = 0.0;
    int iterations = 0;
    bool rate_degenerate = false; // converged immediately / too short for a fit
    double rate_estimate = 0.0;   // empirical linear rate from the trace tail

    std::string to_text() const; // line-delimited "key value" pairs
};

/// Analyzes a recorded solve: the spectral rho threshold for descent,
/// monotonicity of the augmented-Lagrangian trace, and a log-linear rate
/// fit on the tail of
/// ||x_k - x_K|| (needs record_iterates; skipped as degenerate otherwise).
/// Throws when the trace has fewer than 3 entries.
DescentReport descent_report(const SolveResult& result, const ProblemInstance& inst,
                             const SolverConfig& config);

} // namespace halfratio
