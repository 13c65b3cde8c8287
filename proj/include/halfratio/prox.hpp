#pragma once

#include "halfratio/core.hpp"

namespace halfratio {

/// Parameters of the scalar half-thresholding operator. The hard threshold
/// p(delta) = (54^{1/3}/4) delta^{2/3} is cached at construction.
struct HalfThresholdParams {
    double delta_tilde = 0.0;
    double threshold = 0.0;

    HalfThresholdParams() = default;
    explicit HalfThresholdParams(double delta);
};

/// Global minimizer of  delta |x|^{1/2} + (x - m)^2  (equivalently
/// (delta/2)|x|^{1/2} + (x - m)^2/2). Zero when |m| <= p(delta), otherwise
/// sign(m) (2/3)|m| (1 + cos(2pi/3 - (2/3) arccos((delta/8)(|m|/3)^{-3/2}))).
/// The arccos argument is clamped to [-1, 1] to absorb rounding near the
/// threshold. Throws on non-finite m.
double half_threshold_scalar(double m, const HalfThresholdParams& params);

/// Component-wise application of half_threshold_scalar.
VectorXd half_threshold_vector(const VectorXd& m, const HalfThresholdParams& params);

/// Unique root tau in (1, inf) of tau^5 - tau^3 = kappa, kappa > 0, found by
/// safeguarded Newton within the bracket [1, 1 + kappa^{1/5} + kappa^{1/3}].
/// Residual satisfies |tau^5 - tau^3 - kappa| <= 1e-10 max(1, kappa).
double quintic_root(double kappa);

/// Update for  min_u  zeta c / ||u||^{1/2} + (delta/2) ||u - d||^2  with
/// c = ||x||_{1/2}^{1/2} >= 0:
///   c = 0            ->  d
///   d = 0, c > 0     ->  r e_1 with r = (zeta c / (2 delta))^{2/5}
///   otherwise        ->  tau d, where tau solves tau^{5/2} - tau^{3/2} =
///                        kappa = zeta c / (2 delta ||d||^{5/2}), i.e.
///                        tau = quintic_root(kappa)^2
/// The d = 0 selection is deterministic (first coordinate axis); any vector
/// of that norm is optimal.
VectorXd solve_u_subproblem(const VectorXd& d, double c, double zeta, double delta_tilde);

} // namespace halfratio
