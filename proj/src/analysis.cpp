#include "halfratio/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "halfratio/rng.hpp"

namespace halfratio {

MatrixXd kernel_basis(const MatrixXd& A) {
    Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double tol = std::max(A.rows(), A.cols()) * (sv.size() ? sv[0] : 0.0) *
                       std::numeric_limits<double>::epsilon();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > tol) ++rank;
    return svd.matrixV().rightCols(A.cols() - rank);
}

namespace {

// For fixed v the extremal support is the s largest |v_i|^p; returns the
// margin (1-c) ||v_T||_p^p - c ||v_{T^c}||_p^p and that support.
double ensp_margin(const VectorXd& v, int s, double p, double c, std::vector<int>* support) {
    const Eigen::Index n = v.size();
    std::vector<std::pair<double, int>> mag(n);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = std::pow(std::abs(v[i]), p);
        mag[i] = {t, static_cast<int>(i)};
        total += t;
    }
    std::partial_sort(mag.begin(), mag.begin() + s, mag.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    double top = 0.0;
    for (int k = 0; k < s; ++k) top += mag[k].first;
    if (support) {
        support->clear();
        for (int k = 0; k < s; ++k) support->push_back(mag[k].second);
        std::sort(support->begin(), support->end());
    }
    return (1.0 - c) * top - c * (total - top);
}

} // namespace

EnspCertificate check_ensp(const MatrixXd& A, int s, double p, double c, int n_kernel_samples,
                           std::uint64_t seed) {
    if (A.cols() > 24) throw std::invalid_argument("check_ensp: n must not exceed 24");
    if (!(p > 0 && p <= 1)) throw std::invalid_argument("check_ensp: p must lie in (0, 1]");
    if (!(c > 0 && c < 1)) throw std::invalid_argument("check_ensp: c must lie in (0, 1)");
    if (s < 1 || s > A.cols()) throw std::invalid_argument("check_ensp: bad order s");

    EnspCertificate cert;
    cert.s = s;
    cert.p = p;
    cert.c = c;

    const MatrixXd B = kernel_basis(A);
    const Eigen::Index kdim = B.cols();
    if (kdim == 0) {
        cert.vacuous = true;
        return cert;
    }

    VectorXd best_z;
    double best_margin = -std::numeric_limits<double>::infinity();
    const auto consider = [&](VectorXd z) {
        if (z.norm() == 0.0) return;
        z.normalize();
        const double margin = ensp_margin((B * z).normalized(), s, p, c, nullptr);
        if (margin > best_margin) {
            best_margin = margin;
            best_z = z;
        }
    };

    if (kdim == 1) {
        consider(VectorXd::Ones(1)); // scale-invariant, one direction suffices
    } else {
        cert.sampled = true;
        Rng rng(seed);
        for (int it = 0; it < n_kernel_samples; ++it) {
            VectorXd z(kdim);
            for (Eigen::Index i = 0; i < kdim; ++i) z[i] = rng.next_normal();
            consider(z);
        }
        // local refinement around the best sampled direction
        double radius = 0.5;
        for (int round = 0; round < 2000; ++round) {
            VectorXd z = best_z;
            for (Eigen::Index i = 0; i < kdim; ++i) z[i] += radius * rng.next_normal();
            const double before = best_margin;
            consider(z);
            if (best_margin <= before) radius *= 0.995;
        }
    }

    cert.worst_margin = best_margin;
    cert.holds = best_margin <= 1e-12;
    if (!cert.holds) {
        const VectorXd v = (B * best_z).normalized();
        std::vector<int> support;
        ensp_margin(v, s, p, c, &support);
        cert.witness = std::make_pair(v, support);
    }
    return cert;
}

double kernel_ratio_infimum(const MatrixXd& A, double p, int n_samples, std::uint64_t seed) {
    const MatrixXd B = kernel_basis(A);
    const Eigen::Index kdim = B.cols();
    if (kdim == 0) throw std::invalid_argument("kernel_ratio_infimum: trivial kernel");

    const auto ratio = [&](const VectorXd& z) {
        const VectorXd v = (B * z).normalized();
        double s = 0.0;
        for (Eigen::Index i = 0; i < v.size(); ++i) s += std::pow(std::abs(v[i]), p);
        return std::pow(s, 1.0 / p);
    };

    if (kdim == 1) return ratio(VectorXd::Ones(1));

    Rng rng(seed);
    double best = std::numeric_limits<double>::infinity();
    VectorXd best_z(kdim);
    for (int it = 0; it < n_samples; ++it) {
        VectorXd z(kdim);
        for (Eigen::Index i = 0; i < kdim; ++i) z[i] = rng.next_normal();
        if (z.norm() == 0.0) continue;
        z.normalize();
        const double val = ratio(z);
        if (val < best) {
            best = val;
            best_z = z;
        }
    }
    double radius = 0.5;
    for (int round = 0; round < 2000; ++round) {
        VectorXd z = best_z;
        for (Eigen::Index i = 0; i < kdim; ++i) z[i] += radius * rng.next_normal();
        if (z.norm() == 0.0) continue;
        z.normalize();
        const double val = ratio(z);
        if (val < best) {
            best = val;
            best_z = z;
        } else {
            radius *= 0.995;
        }
    }
    return best;
}

MatrixXd toy_matrix() {
    MatrixXd A(7, 8);
    A << 1, -1, 0, 0, 0, 0, 0, 0,
         1, 0, -1, 0, 0, 0, 0, 0,
         0, 1, 1, 1, 0, 0, 0, 0,
        -2, -2, 0, 0, 1, 0, 0, 0,
        -1, -1, 0, 0, 0, 1, 0, 0,
        -1, 0, -1, 0, 0, 0, 1, 0,
        -2, -2, 2, 0, 0, 0, 0, 1;
    return A;
}

VectorXd toy_observation() {
    VectorXd b(7);
    b << 0, 0, 20, 40, 16, 25, 39;
    return b;
}

VectorXd toy_solution(double sigma) {
    VectorXd x(8);
    x << sigma, sigma, sigma, 20 - 2 * sigma, 40 + 4 * sigma, 16 + 2 * sigma, 25 + 2 * sigma,
        39 + 2 * sigma;
    return x;
}

ToyScanResult toy_example_scan(double lo, double step, double hi) {
    if (!(step > 0) || !(hi > lo)) throw std::invalid_argument("toy_example_scan: bad grid");
    if (lo > -15.0 || hi < 25.0)
        throw std::invalid_argument("toy_example_scan: grid must cover [-15, 25]");
    const MatrixXd A = toy_matrix();
    const VectorXd b = toy_observation();
    const long cells = std::lround((hi - lo) / step);

    ToyScanResult out;
    out.table.reserve(cells + 1);
    double best_ratio = std::numeric_limits<double>::infinity();
    double best_l1 = best_ratio, best_l12 = best_ratio;
    for (long i = 0; i <= cells; ++i) {
        const double sigma = lo + static_cast<double>(i) * step;
        const VectorXd x = toy_solution(sigma);
        ToyScanRow row;
        row.sigma = sigma;
        row.ratio_half_over_two = ratio_half_over_two(x);
        row.l1 = x.lpNorm<1>();
        row.l1_minus_l2 = row.l1 - x.norm();
        out.table.push_back(row);
        out.max_feasibility_violation =
            std::max(out.max_feasibility_violation, (A * x - b).norm());
        if (row.ratio_half_over_two < best_ratio) {
            best_ratio = row.ratio_half_over_two;
            out.best_sigma_ratio = sigma;
        }
        if (row.l1 < best_l1) {
            best_l1 = row.l1;
            out.best_sigma_l1 = sigma;
        }
        if (row.l1_minus_l2 < best_l12) {
            best_l12 = row.l1_minus_l2;
            out.best_sigma_l1_minus_l2 = sigma;
        }
    }
    return out;
}

std::string DescentReport::to_text() const {
    std::ostringstream os;
    os.precision(12);
    os << "lambda_min_AtA " << lambda_min_AtA << "\n"
       << "lambda_max_AtA " << lambda_max_AtA << "\n"
       << "rho_threshold " << rho_threshold << "\n"
       << "rho_used " << rho_used << "\n"
       << "rho_meets_threshold " << (rho_meets_threshold ? 1 : 0) << "\n"
       << "monotonicity_violations " << monotonicity_violations << "\n"
       << "worst_violation " << worst_violation << "\n"
       << "slack " << slack << "\n"
       << "iterations " << iterations << "\n";
    if (rate_degenerate)
        os << "rate converged_immediately\n";
    else
        os << "rate " << rate_estimate << "\n";
    return os.str();
}

DescentReport descent_report(const SolveResult& result, const ProblemInstance& inst,
                             const SolverConfig& config) {
    if (result.lagrangian_trace.size() < 3)
        throw std::invalid_argument("descent_report: trace shorter than 3");

    DescentReport rep;
    Eigen::JacobiSVD<MatrixXd> svd(inst.A);
    const auto& sv = svd.singularValues();
    rep.lambda_max_AtA = sv.size() ? sv[0] * sv[0] : 0.0;
    rep.lambda_min_AtA =
        inst.rows() >= inst.cols() ? sv[sv.size() - 1] * sv[sv.size() - 1] : 0.0;
    const double lmin = rep.lambda_min_AtA, lg = rep.lambda_max_AtA;
    rep.rho_threshold = 0.5 * (-lmin + std::sqrt(lmin * lmin + 8.0 * lg * lg));
    rep.rho_used = config.rho0;
    rep.rho_meets_threshold = config.rho0 > rep.rho_threshold && !config.adaptive_penalty;

    const auto& L = result.lagrangian_trace;
    rep.slack = 1e-8 * (1.0 + std::abs(L.front()));
    for (std::size_t k = 1; k < L.size(); ++k) {
        const double increase = L[k] - L[k - 1];
        if (increase > rep.slack) {
            ++rep.monotonicity_violations;
            rep.worst_violation = std::max(rep.worst_violation, increase);
        }
    }
    rep.iterations = result.outer_iters;

    // log-linear fit of ||x_k - x_K|| on the trace tail
    rep.rate_degenerate = true;
    if (!result.x_trace.empty() && result.x_trace.size() >= 4) {
        const VectorXd& xK = result.x_trace.back();
        const std::size_t K = result.x_trace.size() - 1;
        const std::size_t tail = std::max<std::size_t>(10, K / 5);
        const std::size_t start = K > tail ? K - tail : 0;
        std::vector<double> ks, logs;
        for (std::size_t k = start; k < K; ++k) {
            const double d = (result.x_trace[k] - xK).norm();
            if (d > 1e-300) {
                ks.push_back(static_cast<double>(k));
                logs.push_back(std::log(d));
            }
        }
        if (ks.size() >= 3) {
            const double mk = std::accumulate(ks.begin(), ks.end(), 0.0) / ks.size();
            const double ml = std::accumulate(logs.begin(), logs.end(), 0.0) / logs.size();
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < ks.size(); ++i) {
                num += (ks[i] - mk) * (logs[i] - ml);
                den += (ks[i] - mk) * (ks[i] - mk);
            }
            if (den > 0.0) {
                rep.rate_estimate = std::exp(num / den);
                rep.rate_degenerate = false;
            }
        }
    }
    return rep;
}

} // namespace halfratio
