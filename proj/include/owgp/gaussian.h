#pragma once

#include <Eigen/Dense>

namespace owgp {

// Standard normal CDF.
double normal_cdf(double z);

// P(a <= X <= b) for X ~ N(mean, sd^2). Requires a <= b.
double normal_interval_prob(double mean, double sd, double a, double b);

// P(a <= X <= b | 0 <= X <= 1) for X ~ N(mean, sd^2) truncated to the unit
// interval. The query interval is intersected with [0, 1].
double truncated_unit_interval_prob(double mean, double sd, double a, double b);

// Probability that a wrapped normal on the unit circle lands on the arc from
// a to b going in the positive direction (a > b means the arc crosses 0).
// Inputs are taken mod 1.
double wrapped_interval_prob(double mean, double sd, double a, double b);

// Wrap an angle to (-pi, pi].
double wrap_angle(double theta);
// Wrap a hue (or any circular unit coordinate) to [0, 1).
double wrap_unit(double x);
// Signed shortest displacement from `from` to `to` on the unit circle,
// in [-0.5, 0.5).
double unit_circle_diff(double to, double from);

// True iff M is symmetric positive semi-definite up to `tol` on the smallest
// eigenvalue.
bool is_psd(const Eigen::MatrixXd& m, double tol = 1e-9);

}  // namespace owgp
