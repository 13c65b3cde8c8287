#include "halfratio/prox.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace halfratio {

namespace {
constexpr double kTwoPiThirds = 2.0943951023931953; // 2 pi / 3
}

HalfThresholdParams::HalfThresholdParams(double delta) : delta_tilde(delta) {
    if (!(delta > 0) || !std::isfinite(delta))
        throw std::invalid_argument("HalfThresholdParams: delta_tilde must be positive and finite");
    threshold = std::cbrt(54.0) / 4.0 * std::pow(delta, 2.0 / 3.0);
}

double half_threshold_scalar(double m, const HalfThresholdParams& params) {
    if (!std::isfinite(m)) throw std::invalid_argument("half_threshold_scalar: non-finite input");
    const double am = std::abs(m);
    if (am <= params.threshold) return 0.0;
    double arg = params.delta_tilde / 8.0 * std::pow(am / 3.0, -1.5);
    arg = std::clamp(arg, -1.0, 1.0);
    const double phi = std::acos(arg);
    const double v = 2.0 / 3.0 * am * (1.0 + std::cos(kTwoPiThirds - 2.0 / 3.0 * phi));
    return std::copysign(v, m);
}

VectorXd half_threshold_vector(const VectorXd& m, const HalfThresholdParams& params) {
    VectorXd out(m.size());
    for (Eigen::Index i = 0; i < m.size(); ++i) out[i] = half_threshold_scalar(m[i], params);
    return out;
}

double quintic_root(double kappa) {
    if (!(kappa > 0) || !std::isfinite(kappa))
        throw std::invalid_argument("quintic_root: kappa must be positive and finite");
    const auto f = [kappa](double t) {
        const double t2 = t * t, t3 = t2 * t;
        return t3 * (t2 - 1.0) - kappa;
    };
    double lo = 1.0;
    double hi = 1.0 + std::pow(kappa, 0.2) + std::cbrt(kappa);
    while (f(hi) < 0.0) hi *= 2.0;

    const double tol = 1e-10 * std::max(1.0, kappa) * 0.25;
    double t = std::clamp(std::max(1.5, std::pow(kappa, 0.2) + 1.0), lo, hi);
    for (int it = 0; it < 200; ++it) {
        const double ft = f(t);
        if (std::abs(ft) <= tol) return t;
        if (ft > 0.0) hi = t; else lo = t;
        const double d = t * t * (5.0 * t * t - 3.0); // f' > 0 on tau >= 1
        double next = t - ft / d;
        if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi); // bisection fallback
        if (next == t) break;
        t = next;
    }
    return t;
}

VectorXd solve_u_subproblem(const VectorXd& d, double c, double zeta, double delta_tilde) {
    if (!(c >= 0) || !std::isfinite(c))
        throw std::invalid_argument("solve_u_subproblem: c must be nonnegative and finite");
    if (!d.allFinite())
        throw std::invalid_argument("solve_u_subproblem: non-finite d");
    if (!(zeta > 0) || !(delta_tilde > 0))
        throw std::invalid_argument("solve_u_subproblem: zeta and delta_tilde must be positive");
    if (c == 0.0) return d;
    const double eta = d.norm();
    if (eta == 0.0) {
        VectorXd e = VectorXd::Zero(d.size());
        e[0] = std::pow(zeta * c / (2.0 * delta_tilde), 0.4);
        return e;
    }
    const double kappa = zeta * c / (2.0 * delta_tilde * std::pow(eta, 2.5));
    // stationarity for u = tau d reads tau^{5/2} - tau^{3/2} = kappa, so the
    // stretch is the square of the quintic root
    const double root = quintic_root(kappa);
    return (root * root) * d;
}

} // namespace halfratio
