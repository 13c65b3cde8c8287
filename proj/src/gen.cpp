#include "halfratio/gen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <vector>

#include "halfratio/rng.hpp"

namespace halfratio {

void GeneratorSpec::validate() const {
    if (m < 1 || n < 1) throw std::invalid_argument("GeneratorSpec: m, n must be positive");
    if (sparsity < 1) throw std::invalid_argument("GeneratorSpec: sparsity must be positive");
    if (min_separation < 1) throw std::invalid_argument("GeneratorSpec: min_separation must be positive");
    if (kind == MatrixKind::Gaussian && !(r >= 0 && r < 1))
        throw std::invalid_argument("GeneratorSpec: r must lie in [0, 1)");
    if (kind == MatrixKind::OversampledDct && !(F > 0))
        throw std::invalid_argument("GeneratorSpec: F must be positive");
    if (static_cast<long long>(sparsity) * min_separation > n)
        throw std::invalid_argument("GeneratorSpec: support sampling infeasible (s*L > n)");
}

MatrixXd gen_gaussian_matrix(int m, int n, double r, std::uint64_t seed) {
    if (!(r >= 0 && r < 1)) throw std::invalid_argument("gen_gaussian_matrix: r must lie in [0, 1)");
    Rng rng(seed);
    MatrixXd A(m, n);
    const double sq = std::sqrt(1.0 - r), sr = std::sqrt(r);
    for (int i = 0; i < m; ++i) {
        const double w = rng.next_normal(); // shared component of the row
        for (int j = 0; j < n; ++j) A(i, j) = sq * rng.next_normal() + sr * w;
    }
    return A;
}

MatrixXd gen_dct_matrix(int m, int n, double F, std::uint64_t seed) {
    if (!(F > 0)) throw std::invalid_argument("gen_dct_matrix: F must be positive");
    Rng rng(seed);
    VectorXd w(m);
    for (int j = 0; j < m; ++j) w[j] = rng.next_double();
    MatrixXd A(m, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    for (int i = 1; i <= n; ++i) // columns are 1-based in the construction
        for (int j = 0; j < m; ++j)
            A(j, i - 1) = scale * std::cos(2.0 * i * M_PI * w[j] / F);
    return A;
}

VectorXd gen_signal(int n, int s, int L, std::uint64_t seed, bool high_dynamic_range) {
    if (static_cast<long long>(s) * L > n)
        throw std::invalid_argument("gen_signal: support sampling infeasible (s*L > n)");
    Rng rng(seed);
    // Supports with pairwise distance >= L biject onto s-subsets of
    // [0, n - (s-1)(L-1)) via i_k = j_k + k (L-1); Floyd's algorithm keeps
    // the subset uniform.
    const int np = n - (s - 1) * (L - 1);
    std::set<int> chosen;
    for (int t = np - s; t < np; ++t) {
        const int r = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(t) + 1));
        if (!chosen.insert(r).second) chosen.insert(t);
    }
    std::vector<int> idx(chosen.begin(), chosen.end());
    std::sort(idx.begin(), idx.end());
    VectorXd x = VectorXd::Zero(n);
    for (int k = 0; k < s; ++k) {
        const int pos = idx[k] + k * (L - 1);
        if (high_dynamic_range) {
            const double mag = std::pow(10.0, 3.0 * rng.next_double());
            x[pos] = rng.next_double() < 0.5 ? -mag : mag;
        } else {
            double v;
            do {
                v = rng.next_normal();
            } while (v == 0.0);
            x[pos] = v;
        }
    }
    return x;
}

VectorXd add_noise(const VectorXd& b_clean, double snr_db, std::uint64_t seed) {
    if (snr_db == std::numeric_limits<double>::infinity()) return b_clean;
    const double nb = b_clean.norm();
    if (nb == 0.0) throw std::invalid_argument("add_noise: clean signal must be nonzero");
    Rng rng(seed);
    VectorXd e(b_clean.size());
    double ne;
    do {
        for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = rng.next_normal();
        ne = e.norm();
    } while (ne == 0.0);
    const double target = nb * std::pow(10.0, -snr_db / 20.0);
    return b_clean + (target / ne) * e;
}

ProblemInstance make_instance(const GeneratorSpec& spec) {
    spec.validate();
    const std::uint64_t matrix_seed = Rng::derive(spec.seed, 1);
    const std::uint64_t signal_seed = Rng::derive(spec.seed, 2);
    const std::uint64_t noise_seed = Rng::derive(spec.seed, 3);
    ProblemInstance inst;
    inst.A = spec.kind == MatrixKind::Gaussian
                 ? gen_gaussian_matrix(spec.m, spec.n, spec.r, matrix_seed)
                 : gen_dct_matrix(spec.m, spec.n, spec.F, matrix_seed);
    const VectorXd x = gen_signal(spec.n, spec.sparsity, spec.min_separation, signal_seed,
                                  spec.high_dynamic_range);
    inst.ground_truth = x;
    inst.b = inst.A * x;
    if (spec.noise_db) {
        inst.b = add_noise(inst.b, *spec.noise_db, noise_seed);
        inst.noise_db = spec.noise_db;
    }
    inst.seed = spec.seed;
    return inst;
}

} // namespace halfratio
