#include "owgp/gaussian.h"

#include <algorithm>
#include <cmath>

namespace owgp {

double normal_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

double normal_interval_prob(double mean, double sd, double a, double b) {
  if (b < a) return 0.0;
  if (sd <= 0.0) return (mean >= a && mean <= b) ? 1.0 : 0.0;
  return normal_cdf((b - mean) / sd) - normal_cdf((a - mean) / sd);
}

double truncated_unit_interval_prob(double mean, double sd, double a, double b) {
  a = std::max(a, 0.0);
  b = std::min(b, 1.0);
  if (b < a) return 0.0;
  const double denom = normal_interval_prob(mean, sd, 0.0, 1.0);
  if (denom < 1e-300) {
    // All mass outside the unit box; fall back to the nearest endpoint.
    const double nearest = std::clamp(mean, 0.0, 1.0);
    return (nearest >= a && nearest <= b) ? 1.0 : 0.0;
  }
  return normal_interval_prob(mean, sd, a, b) / denom;
}

namespace {

// Mass of the wrapped normal on [a, b] with 0 <= a <= b <= 1; sums the plain
// normal over enough turns to cover the tails.
double wrapped_arc(double mean, double sd, double a, double b) {
  const int span = static_cast<int>(std::ceil(8.0 * sd)) + 1;
  double p = 0.0;
  for (int k = -span; k <= span; ++k) {
    p += normal_interval_prob(mean, sd, a + k, b + k);
  }
  return std::min(p, 1.0);
}

}  // namespace

double wrapped_interval_prob(double mean, double sd, double a, double b) {
  if (b - a >= 1.0) return 1.0;  // the arc covers the whole circle
  mean = wrap_unit(mean);
  a = wrap_unit(a);
  b = wrap_unit(b);
  if (sd <= 0.0) {
    const bool inside = (a <= b) ? (mean >= a && mean <= b)
                                 : (mean >= a || mean <= b);
    return inside ? 1.0 : 0.0;
  }
  if (a <= b) return wrapped_arc(mean, sd, a, b);
  // The arc crosses zero: two plain pieces.
  return std::min(wrapped_arc(mean, sd, a, 1.0) + wrapped_arc(mean, sd, 0.0, b),
                  1.0);
}

double wrap_angle(double theta) {
  double t = std::fmod(theta + M_PI, 2.0 * M_PI);
  if (t <= 0.0) t += 2.0 * M_PI;
  return t - M_PI;
}

double wrap_unit(double x) {
  double t = std::fmod(x, 1.0);
  if (t < 0.0) t += 1.0;
  return t;
}

double unit_circle_diff(double to, double from) {
  double d = wrap_unit(to) - wrap_unit(from);
  if (d >= 0.5) d -= 1.0;
  if (d < -0.5) d += 1.0;
  return d;
}

bool is_psd(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) return false;
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) return false;
  return es.eigenvalues().minCoeff() >= -tol;
}

}  // namespace owgp
