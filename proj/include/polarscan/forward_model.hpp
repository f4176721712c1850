#pragma once

#include <vector>

#include "polarscan/geometry.hpp"

namespace polarscan {

// Full physical description of one buried-bar scan scenario.
//
// Defaults reproduce the reference scenario: a 14 cm metal bar of 6 mm
// diameter, centered 28 mm below the surface of sand with relative
// permittivity 4, scanned by a 1.5 GHz TX/RX pair 10 cm apart at 2 cm
// height, 37 traces at 1.5 cm spacing.
struct SceneSpec {
  double bar_length_m = 0.14;
  double bar_diameter_m = 0.006;  // enters only as a global amplitude scalar
  double center_depth_m = 0.028;
  double phi_deg = 0.0;    // horizontal angle, [0, 180)
  double theta_deg = 0.0;  // vertical inclination, [0, 180)
  double soil_rel_permittivity = 4.0;
  double soil_conductivity_s_per_m = 0.001;  // recorded, not applied
  double antenna_height_m = 0.02;
  double tx_rx_offset_m = 0.10;  // TX/RX collinear with the scan axis
  int n_traces = 37;
  double trace_step_m = 0.015;
  double center_freq_hz = 1.5e9;
  double time_window_s = 6e-9;
  int n_time_samples = 256;
  int n_scatterers = 29;
  double amplitude_scale = 1.0;

  // Throws InvalidSceneError when a field violates its range.
  void validate() const;

  double soil_velocity() const {
    return kSpeedOfLight / std::sqrt(soil_rel_permittivity);
  }
};

// One B-scan: n_traces x n_time grid of reflection amplitudes, trace-major.
struct Radargram {
  int n_traces = 0;
  int n_time = 0;
  std::vector<double> values;  // values[trace * n_time + t]
  double dt_s = 0.0;
  double dx_m = 0.0;
  double t0_s = 0.0;

  double& at(int trace, int t) { return values[static_cast<size_t>(trace) * n_time + t]; }
  double at(int trace, int t) const { return values[static_cast<size_t>(trace) * n_time + t]; }

  bool same_grid(const Radargram& o) const {
    return n_traces == o.n_traces && n_time == o.n_time && dt_s == o.dt_s &&
           dx_m == o.dx_m && t0_s == o.t0_s;
  }
};

// The {S_xx, S_xy, S_yy} set for one scene. S_xy stands for both cross
// terms; reciprocity makes S_yx redundant.
struct ScatteringTriple {
  Radargram sxx;
  Radargram sxy;
  Radargram syy;
};

// Ricker wavelet (second derivative of a Gaussian), peak 1 at tau = 0.
double ricker(double tau_s, double f_c_hz);

// Two-way travel time antenna -> scatterer -> antenna for one trace.
// Each straight segment is split at the z = 0 interface: the air part
// travels at c, the soil part at c / sqrt(eps_r). Refraction is ignored.
// Throws InvalidSceneError when the scatterer is at or above the surface.
double two_way_time(double antenna_x_m, const Vec3& scatterer, const SceneSpec& scene);

// Subtracts the mean trace from every trace (time-sample-wise), removing
// flat-layer reflections and the direct wave. Requires n_traces >= 2.
Radargram background_removal(const Radargram& r);

// Synthesizes the three polarimetric B-scans of the scene's bar from the
// segment-of-point-scatterers superposition model, background-removed.
// Throws InvalidSceneError when the bar breaks the surface.
ScatteringTriple synthesize_set(const SceneSpec& scene);

// Positions of the bar's point scatterers (exposed for geometry checks).
std::vector<Vec3> bar_scatterers(const SceneSpec& scene);

}  // namespace polarscan
