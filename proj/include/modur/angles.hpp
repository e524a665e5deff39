#pragma once

// Degree-based angle helpers. All public interfaces of the toolkit trade in
// degrees; radians appear only inside trigonometric evaluation.

#include <cmath>
#include <stdexcept>

namespace modur {

inline constexpr double kPi = 3.14159265358979323846;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

inline double sin_deg(double deg) { return std::sin(deg_to_rad(deg)); }
inline double cos_deg(double deg) { return std::cos(deg_to_rad(deg)); }
inline double tan_deg(double deg) { return std::tan(deg_to_rad(deg)); }
inline double asin_deg(double x) { return rad_to_deg(std::asin(x)); }
inline double acos_deg(double x) { return rad_to_deg(std::acos(x)); }
inline double atan2_deg(double y, double x) { return rad_to_deg(std::atan2(y, x)); }

/// Wraps an angle into [0, 360).
inline double wrap_360(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w < 0.0) w += 360.0;
  return w == 360.0 ? 0.0 : w;
}

/// Wraps an angle into (-180, 180].
inline double wrap_180(double deg) {
  double w = wrap_360(deg);
  return w > 180.0 ? w - 360.0 : w;
}

/// Clamps a would-be cosine into [-1, 1] when it is within `band` of the
/// interval; values further out raise std::domain_error (the caller names a
/// more specific error where one is defined).
inline double clamp_to_unit(double x, double band = 1e-9) {
  if (x > 1.0) {
    if (x > 1.0 + band) throw std::domain_error("cosine argument outside [-1, 1]");
    return 1.0;
  }
  if (x < -1.0) {
    if (x < -1.0 - band) throw std::domain_error("cosine argument outside [-1, 1]");
    return -1.0;
  }
  return x;
}

/// acos in degrees with the clamp band applied.
inline double safe_acos_deg(double x, double band = 1e-9) {
  return acos_deg(clamp_to_unit(x, band));
}

}  // namespace modur
