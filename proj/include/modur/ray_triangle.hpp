#pragma once

// Möller–Trumbore ray-triangle intersection, the primitive behind the
// opposite-linkage interference test.

#include <array>
#include <optional>

#include "modur/vec3.hpp"

namespace modur {

/// Intersection parameters: p = origin + t*direction hits the triangle at
/// barycentric (1-u-v, u, v) relative to (tri[0], tri[1], tri[2]).
struct RayHit {
  double t = 0.0;
  double u = 0.0;
  double v = 0.0;
};

/// Standard Möller–Trumbore test. Returns the hit with t >= 0, u,v >= 0 and
/// u+v <= 1, or absent. A determinant smaller in magnitude than `det_epsilon`
/// reports absent (ray parallel to the triangle plane). `edge_slack` widens
/// the barycentric bounds so hits exactly on an edge are counted regardless
/// of rounding direction (triangle fans need this to classify a hit on a
/// shared spoke identically no matter which side evaluates it).
inline std::optional<RayHit> moller_trumbore(const Vec3& origin, const Vec3& direction,
                                             const std::array<Vec3, 3>& tri,
                                             double det_epsilon = 1e-9,
                                             double edge_slack = 0.0) {
  Vec3 e1 = tri[1] - tri[0];
  Vec3 e2 = tri[2] - tri[0];
  Vec3 pvec = cross(direction, e2);
  double det = dot(e1, pvec);
  if (det > -det_epsilon && det < det_epsilon) return std::nullopt;
  double inv_det = 1.0 / det;
  Vec3 tvec = origin - tri[0];
  double u = dot(tvec, pvec) * inv_det;
  if (u < -edge_slack || u > 1.0 + edge_slack) return std::nullopt;
  Vec3 qvec = cross(tvec, e1);
  double v = dot(direction, qvec) * inv_det;
  if (v < -edge_slack || u + v > 1.0 + edge_slack) return std::nullopt;
  double t = dot(e2, qvec) * inv_det;
  if (t < 0.0) return std::nullopt;
  return RayHit{t, u, v};
}

}  // namespace modur
