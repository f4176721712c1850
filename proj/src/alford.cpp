#include "polarscan/alford.hpp"

#include <cmath>
#include <limits>

#include "polarscan/errors.hpp"

namespace polarscan {

void AlfordConfig::validate() const {
  if (!(frobenius_threshold_ratio > 0.0 && frobenius_threshold_ratio <= 1.0)) {
    throw ShapeError("AlfordConfig: frobenius_threshold_ratio must be in (0,1]");
  }
}

double alford_angle(double sxx, double sxy, double syy) {
  if (sxx == 0.0 && sxy == 0.0 && syy == 0.0) {
    throw InsufficientAmplitudeError("alford_angle: all-zero scattering sample");
  }
  if (sxx + syy < 0.0) {
    sxx = -sxx;
    sxy = -sxy;
    syy = -syy;
  }
  const double alpha = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  return wrap180(rad2deg(alpha));
}

EstimationResult alford_estimate(const ScatteringTriple& set, const AlfordConfig& cfg) {
  cfg.validate();
  const Radargram& sxx = set.sxx;
  const Radargram& sxy = set.sxy;
  const Radargram& syy = set.syy;
  if (!sxx.same_grid(sxy) || !sxx.same_grid(syy)) {
    throw ShapeError("alford_estimate: components disagree on grid");
  }

  double max_norm = 0.0;
  for (size_t i = 0; i < sxx.values.size(); ++i) {
    const double n = std::sqrt(sxx.values[i] * sxx.values[i] +
                               2.0 * sxy.values[i] * sxy.values[i] +
                               syy.values[i] * syy.values[i]);
    max_norm = std::max(max_norm, n);
  }
  if (max_norm == 0.0) {
    throw InsufficientAmplitudeError("alford_estimate: set has no amplitude");
  }

  const double threshold = cfg.frobenius_threshold_ratio * max_norm;
  double sum_cos = 0.0, sum_sin = 0.0;
  size_t kept = 0;
  for (size_t i = 0; i < sxx.values.size(); ++i) {
    double a = sxx.values[i], b = sxy.values[i], c = syy.values[i];
    const double norm = std::sqrt(a * a + 2.0 * b * b + c * c);
    if (norm < threshold) continue;
    if (a + c < 0.0) {
      a = -a;
      b = -b;
      c = -c;
    }
    // Doubled angle lives on the full circle, so a weighted vector mean is
    // seam-safe; halving at the end maps back to [0, 180).
    const double doubled = std::atan2(2.0 * b, a - c);
    sum_cos += norm * std::cos(doubled);
    sum_sin += norm * std::sin(doubled);
    ++kept;
  }
  if (kept == 0 || (sum_cos == 0.0 && sum_sin == 0.0)) {
    throw InsufficientAmplitudeError("alford_estimate: no cell passed the amplitude filter");
  }

  const double phi = wrap180(rad2deg(0.5 * std::atan2(sum_sin, sum_cos)));
  EstimationResult r;
  r.phi_hat_deg = phi;
  r.theta_hat_deg = std::numeric_limits<double>::quiet_NaN();  // not estimable
  r.method = "alford";
  return r;
}

}  // namespace polarscan
