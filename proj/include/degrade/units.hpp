#pragma once

#include <cmath>
#include <numbers>

namespace degrade {

// Internal units: nautical miles, minutes, radians.
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// knots (NM/h) <-> NM/min
constexpr double kt_to_nm_per_min(double kt) { return kt / 60.0; }
constexpr double nm_per_min_to_kt(double v) { return v * 60.0; }

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::remainder(a, kTwoPi);
  if (w <= -kPi) w += kTwoPi;
  return w;
}

}  // namespace degrade
