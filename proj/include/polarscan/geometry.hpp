#pragma once

#include <array>
#include <cmath>

namespace polarscan {

using Vec3 = std::array<double, 3>;

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

inline double deg2rad(double deg) { return deg * (M_PI / 180.0); }
inline double rad2deg(double rad) { return rad * (180.0 / M_PI); }

// Maps an angle in degrees onto [0, 180).
inline double wrap180(double deg) {
  double a = std::fmod(deg, 180.0);
  if (a < 0.0) a += 180.0;
  return a;
}

// Circular distance on the 180-degree-periodic orientation circle.
inline double circular_dist_deg(double a, double b) {
  double d = std::fabs(wrap180(a) - wrap180(b));
  return std::min(d, 180.0 - d);
}

// Unit direction of the bar axis. phi rotates from x toward y in the ground
// plane; theta tilts from x toward z.
inline Vec3 object_direction(double phi_deg, double theta_deg) {
  const double phi = deg2rad(phi_deg);
  const double theta = deg2rad(theta_deg);
  return {std::cos(theta) * std::cos(phi), std::cos(theta) * std::sin(phi),
          std::sin(theta)};
}

struct AmplitudeTriple {
  double a_xx;
  double a_xy;
  double a_yy;
};

// Thin-wire dipole response for the three horizontal TX/RX pairings:
// a_tr = (u . t)(u . r), so a_xy flips sign between phi and 180 - phi while
// a_xx and a_yy do not, which is what disambiguates the two half-ranges.
inline AmplitudeTriple scattering_amplitudes(const Vec3& u) {
  return {u[0] * u[0], u[0] * u[1], u[1] * u[1]};
}

}  // namespace polarscan
