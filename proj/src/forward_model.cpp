#include "polarscan/forward_model.hpp"

#include <cmath>
#include <string>

#include "polarscan/errors.hpp"

namespace polarscan {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidSceneError("invalid scene: " + what);
}

}  // namespace

void SceneSpec::validate() const {
  require(phi_deg >= 0.0 && phi_deg < 180.0, "phi_deg outside [0,180)");
  require(theta_deg >= 0.0 && theta_deg < 180.0, "theta_deg outside [0,180)");
  require(bar_length_m > 0.0, "bar_length_m <= 0");
  require(bar_diameter_m > 0.0, "bar_diameter_m <= 0");
  require(center_depth_m > 0.0, "center_depth_m <= 0");
  require(soil_rel_permittivity > 0.0, "soil_rel_permittivity <= 0");
  require(antenna_height_m >= 0.0, "antenna_height_m < 0");
  require(tx_rx_offset_m >= 0.0, "tx_rx_offset_m < 0");
  require(n_traces >= 2, "n_traces < 2");
  require(trace_step_m > 0.0, "trace_step_m <= 0");
  require(center_freq_hz > 0.0, "center_freq_hz <= 0");
  require(time_window_s > 0.0, "time_window_s <= 0");
  require(n_time_samples > 0, "n_time_samples <= 0");
  require(n_scatterers >= 3, "n_scatterers < 3");
  require(amplitude_scale > 0.0, "amplitude_scale <= 0");
}

double ricker(double tau_s, double f_c_hz) {
  const double a = M_PI * M_PI * f_c_hz * f_c_hz * tau_s * tau_s;
  return (1.0 - 2.0 * a) * std::exp(-a);
}

namespace {

// One-way travel time along the straight segment from an above-surface
// point to a below-surface point, split at z = 0.
double segment_time(const Vec3& from_air, const Vec3& to_soil, double soil_velocity) {
  const double dx = to_soil[0] - from_air[0];
  const double dy = to_soil[1] - from_air[1];
  const double dz = to_soil[2] - from_air[2];
  const double length = std::sqrt(dx * dx + dy * dy + dz * dz);
  // Fraction of the segment above the interface. from_air[2] >= 0 > to_soil[2].
  const double frac_air = from_air[2] / (from_air[2] - to_soil[2]);
  const double air_len = frac_air * length;
  const double soil_len = length - air_len;
  return air_len / kSpeedOfLight + soil_len / soil_velocity;
}

}  // namespace

double two_way_time(double antenna_x_m, const Vec3& scatterer, const SceneSpec& scene) {
  if (!(scatterer[2] < 0.0)) {
    throw InvalidSceneError("scatterer at or above the surface (z >= 0)");
  }
  const double h = scene.antenna_height_m;
  const double half_off = 0.5 * scene.tx_rx_offset_m;
  const Vec3 tx{antenna_x_m - half_off, 0.0, h};
  const Vec3 rx{antenna_x_m + half_off, 0.0, h};
  const double v = scene.soil_velocity();
  return segment_time(tx, scatterer, v) + segment_time(rx, scatterer, v);
}

std::vector<Vec3> bar_scatterers(const SceneSpec& scene) {
  const Vec3 u = object_direction(scene.phi_deg, scene.theta_deg);
  const double scan_center = 0.5 * (scene.n_traces - 1) * scene.trace_step_m;
  std::vector<Vec3> pts;
  pts.reserve(scene.n_scatterers);
  for (int j = 0; j < scene.n_scatterers; ++j) {
    const double s =
        (static_cast<double>(j) / (scene.n_scatterers - 1) - 0.5) * scene.bar_length_m;
    pts.push_back({scan_center + s * u[0], s * u[1], -scene.center_depth_m + s * u[2]});
  }
  return pts;
}

Radargram background_removal(const Radargram& r) {
  if (r.n_traces < 2) throw InvalidSceneError("background removal needs n_traces >= 2");
  Radargram out = r;
  for (int t = 0; t < r.n_time; ++t) {
    double mean = 0.0;
    for (int i = 0; i < r.n_traces; ++i) mean += r.at(i, t);
    mean /= r.n_traces;
    for (int i = 0; i < r.n_traces; ++i) out.at(i, t) = r.at(i, t) - mean;
  }
  return out;
}

ScatteringTriple synthesize_set(const SceneSpec& scene) {
  scene.validate();
  const std::vector<Vec3> scatterers = bar_scatterers(scene);
  for (const Vec3& p : scatterers) {
    if (!(p[2] < 0.0)) {
      throw InvalidSceneError("bar breaks the surface at phi=" +
                              std::to_string(scene.phi_deg) +
                              " theta=" + std::to_string(scene.theta_deg));
    }
  }

  const Vec3 u = object_direction(scene.phi_deg, scene.theta_deg);
  const AmplitudeTriple amp = scattering_amplitudes(u);
  const double dt = scene.time_window_s / scene.n_time_samples;
  const double r_ref = scene.center_depth_m;
  const double h = scene.antenna_height_m;

  auto make_gram = [&] {
    Radargram g;
    g.n_traces = scene.n_traces;
    g.n_time = scene.n_time_samples;
    g.dt_s = dt;
    g.dx_m = scene.trace_step_m;
    g.t0_s = 0.0;
    g.values.assign(static_cast<size_t>(g.n_traces) * g.n_time, 0.0);
    return g;
  };
  Radargram sxx = make_gram(), sxy = make_gram(), syy = make_gram();

  for (int i = 0; i < scene.n_traces; ++i) {
    const double ax = i * scene.trace_step_m;
    for (const Vec3& p : scatterers) {
      const double arrival = two_way_time(ax, p, scene);
      // Geometric spreading from the antenna midpoint, one-way.
      const double ddx = p[0] - ax;
      const double ddz = p[2] - h;
      const double r = std::sqrt(ddx * ddx + p[1] * p[1] + ddz * ddz);
      const double taper = (r_ref / r) * (r_ref / r);
      for (int t = 0; t < scene.n_time_samples; ++t) {
        const double w = scene.amplitude_scale * taper *
                         ricker(t * dt - arrival, scene.center_freq_hz);
        sxx.at(i, t) += amp.a_xx * w;
        sxy.at(i, t) += amp.a_xy * w;
        syy.at(i, t) += amp.a_yy * w;
      }
    }
  }

  return {background_removal(sxx), background_removal(sxy), background_removal(syy)};
}

}  // namespace polarscan
