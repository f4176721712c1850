#pragma once

#include "polarscan/forward_model.hpp"
#include "polarscan/masnet.hpp"

namespace polarscan {

struct AlfordConfig {
  // Cells with Frobenius norm below this fraction of the per-set maximum
  // are discarded before the angle is aggregated.
  double frobenius_threshold_ratio = 0.8;

  void validate() const;
};

// Horizontal angle of one 2x2 symmetric scattering sample, in [0, 180).
// The sample is polarity-normalized first (negated when sxx + syy < 0) so a
// signed wavelet cannot introduce the classical 90-degree ambiguity.
// Throws InsufficientAmplitudeError for the all-zero sample.
double alford_angle(double sxx, double sxy, double syy);

// Full-set estimator: per-cell Frobenius filter, polarity-normalized doubled
// angles, norm-weighted circular mean. theta is never produced; the method
// recovers only the horizontal angle. Throws InsufficientAmplitudeError when
// no cell carries usable amplitude.
EstimationResult alford_estimate(const ScatteringTriple& set, const AlfordConfig& cfg);

}  // namespace polarscan
