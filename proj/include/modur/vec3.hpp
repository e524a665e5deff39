#pragma once

// Minimal 3-vector / 3x3-matrix / rigid-transform kit used throughout the
// toolkit. Hand-rolled on purpose: every consumer needs only a handful of
// operations and the geometry code stays self-contained.

#include <array>
#include <cmath>

#include "modur/angles.hpp"
#include "modur/errors.hpp"

namespace modur {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double dot(const Vec3& a, const Vec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm2(const Vec3& v) { return dot(v, v); }
inline double norm(const Vec3& v) { return std::sqrt(norm2(v)); }

inline Vec3 unit(const Vec3& v) {
  double n = norm(v);
  if (n < 1e-300) throw DegeneracyError("cannot normalize a zero vector");
  return v / n;
}

inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

/// Great-circle angle between two directions, in degrees. Robust near 0 and
/// 180 via atan2 of the cross/dot decomposition.
inline double angular_distance_deg(const Vec3& a, const Vec3& b) {
  return atan2_deg(norm(cross(a, b)), dot(a, b));
}

/// Unit direction at elevation phi above the horizontal plane and azimuth
/// theta counterclockwise about +z from +x.
inline Vec3 unit_from_sphere_deg(double phi_deg, double theta_deg) {
  double cp = cos_deg(phi_deg);
  return {cp * cos_deg(theta_deg), cp * sin_deg(theta_deg), sin_deg(phi_deg)};
}

/// Unit tangent at `p` pointing along the great circle toward `q`. Both
/// inputs must be unit vectors; antipodal or coincident pairs are degenerate.
inline Vec3 tangent_toward(const Vec3& p, const Vec3& q) {
  Vec3 t = q - dot(p, q) * p;
  double n = norm(t);
  if (n < 1e-12) throw DegeneracyError("tangent undefined for parallel directions");
  return t / n;
}

/// Spherical linear interpolation between unit vectors. For near-antipodal
/// endpoints the connecting great circle is ambiguous; a deterministic
/// perpendicular axis is chosen so repeated runs sample the same arc.
inline Vec3 slerp(const Vec3& a, const Vec3& b, double t) {
  double c = dot(a, b);
  if (c > 1.0) c = 1.0;
  if (c < -1.0) c = -1.0;
  double ang = std::acos(c);
  if (ang < 1e-12) return a;
  // The cutoff must exceed acos' resolution near -1 (~1.5e-8): below it the
  // general branch divides a fully-cancelled a+b by a meaningless sine.
  if (kPi - ang < 1e-6) {
    // Antipodal: rotate `a` by t*pi about a fixed perpendicular axis.
    Vec3 helper = std::abs(a.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
    Vec3 axis = unit(cross(a, helper));
    Vec3 ortho = cross(axis, a);
    double s = t * kPi;
    return a * std::cos(s) + ortho * std::sin(s);
  }
  double s = std::sin(ang);
  return a * (std::sin((1.0 - t) * ang) / s) + b * (std::sin(t * ang) / s);
}

/// Column-major 3x3 matrix: columns are the images of the basis vectors.
struct Mat3 {
  std::array<Vec3, 3> col{Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};

  static Mat3 identity() { return {}; }

  static Mat3 from_columns(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
    Mat3 m;
    m.col = {c0, c1, c2};
    return m;
  }

  Vec3 operator*(const Vec3& v) const {
    return col[0] * v.x + col[1] * v.y + col[2] * v.z;
  }

  Mat3 operator*(const Mat3& o) const {
    return from_columns(*this * o.col[0], *this * o.col[1], *this * o.col[2]);
  }

  Mat3 transpose() const {
    return from_columns({col[0].x, col[1].x, col[2].x},
                        {col[0].y, col[1].y, col[2].y},
                        {col[0].z, col[1].z, col[2].z});
  }
};

/// Rotation about +z by `deg`.
inline Mat3 rot_z(double deg) {
  double c = cos_deg(deg), s = sin_deg(deg);
  return Mat3::from_columns({c, s, 0}, {-s, c, 0}, {0, 0, 1});
}

/// Rotation about +x by `deg`.
inline Mat3 rot_x(double deg) {
  double c = cos_deg(deg), s = sin_deg(deg);
  return Mat3::from_columns({1, 0, 0}, {0, c, s}, {0, -s, c});
}

/// Rodrigues rotation about an arbitrary unit axis.
inline Mat3 rot_axis(const Vec3& axis, double deg) {
  Vec3 u = unit(axis);
  double c = cos_deg(deg), s = sin_deg(deg), t = 1.0 - c;
  return Mat3::from_columns(
      {c + u.x * u.x * t, u.y * u.x * t + u.z * s, u.z * u.x * t - u.y * s},
      {u.x * u.y * t - u.z * s, c + u.y * u.y * t, u.z * u.y * t + u.x * s},
      {u.x * u.z * t + u.y * s, u.y * u.z * t - u.x * s, c + u.z * u.z * t});
}

/// Rigid transform p -> R*p + t.
struct Transform {
  Mat3 R;
  Vec3 t;

  static Transform identity() { return {}; }

  Vec3 operator*(const Vec3& p) const { return R * p + t; }

  Transform operator*(const Transform& o) const { return {R * o.R, R * o.t + t}; }

  Transform inverse() const {
    Mat3 Rt = R.transpose();
    return {Rt, -(Rt * t)};
  }
};

/// Right-handed frame described by its origin and two of its axes; the third
/// axis is implied. Used for connector frames: z is the functional axis, x
/// the roll reference.
struct Frame {
  Vec3 origin;
  Vec3 x_axis{1, 0, 0};
  Vec3 z_axis{0, 0, 1};

  Vec3 y_axis() const { return cross(z_axis, x_axis); }

  Transform transform() const {
    return {Mat3::from_columns(x_axis, y_axis(), z_axis), origin};
  }

  static Frame from_transform(const Transform& T) {
    return {T.t, T.R.col[0], T.R.col[2]};
  }

  /// Largest deviation from unit length / orthogonality among the axes.
  double orthonormality_error() const {
    double e = std::abs(norm(x_axis) - 1.0);
    e = std::max(e, std::abs(norm(z_axis) - 1.0));
    e = std::max(e, std::abs(dot(x_axis, z_axis)));
    return e;
  }
};

}  // namespace modur
