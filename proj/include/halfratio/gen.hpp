#pragma once

#include <cstdint>
#include <optional>

#include "halfratio/core.hpp"

namespace halfratio {

enum class MatrixKind { Gaussian, OversampledDct };

/// Reproducible instance generation. kind = Gaussian draws rows from
/// N(0, Sigma) with Sigma = (1-r) I + r off the diagonal; OversampledDct
/// builds columns a_i = cos(2 i pi w / F)/sqrt(m) with w ~ U([0,1]^m).
struct GeneratorSpec {
    MatrixKind kind = MatrixKind::Gaussian;
    double r = 0.0;  // Gaussian row correlation, in [0, 1)
    double F = 10.0; // DCT coherence control, > 0
    int m = 64;
    int n = 512;
    int sparsity = 5;
    int min_separation = 15;
    std::optional<double> noise_db;
    std::uint64_t seed = 0;
    bool high_dynamic_range = false; // log-uniform magnitudes in [1, 1e3]

    void validate() const;
};

MatrixXd gen_gaussian_matrix(int m, int n, double r, std::uint64_t seed);
MatrixXd gen_dct_matrix(int m, int n, double F, std::uint64_t seed);

/// Sparse ground truth: support of size s with pairwise index distance at
/// least L, uniform over feasible supports; values standard normal
/// (or log-uniform magnitudes with random signs in high-dynamic-range mode).
VectorXd gen_signal(int n, int s, int L, std::uint64_t seed, bool high_dynamic_range = false);

/// b_clean + e with e Gaussian, rescaled so that
/// 10 log10(||b_clean||^2 / ||e||^2) = snr_db exactly. snr_db = +inf returns
/// b_clean unchanged. Throws when the clean signal is zero.
VectorXd add_noise(const VectorXd& b_clean, double snr_db, std::uint64_t seed);

/// Full pipeline: matrix, signal, observation (with optional noise).
ProblemInstance make_instance(const GeneratorSpec& spec);

} // namespace halfratio
