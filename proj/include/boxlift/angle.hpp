#pragma once

#include <cmath>
#include <numbers>

namespace boxlift {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Wraps an angle into (-pi, pi]. Every angle the library emits goes through
// this helper so that metrics computed from different modules agree.
inline double wrap_angle(double angle) {
  double r = std::remainder(angle, kTwoPi);  // [-pi, pi]
  if (r <= -kPi) r += kTwoPi;
  return r;
}

// Unsigned angular distance in [0, pi].
inline double angular_distance(double a, double b) { return std::abs(wrap_angle(a - b)); }

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace boxlift
