#pragma once

// Closed-form forward/inverse kinematics of one module on the unit sphere.
//
// Conventions: the input connector D is pinned at (0,0,-1); the horizontal
// plane through the sphere center O is the elevation reference; A's azimuth
// is identically 0 because A rides in the plane that defines the x axis
// (A and D share one linkage and x_O lies in its plane). A state is then the
// five parameters (phi_A, phi_B, theta_B, phi_C, theta_C), all in degrees.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "modur/angles.hpp"
#include "modur/errors.hpp"
#include "modur/vec3.hpp"

namespace modur {

enum class ConnectorId { A, B, C, D };

inline const char* to_string(ConnectorId id) {
  switch (id) {
    case ConnectorId::A: return "A";
    case ConnectorId::B: return "B";
    case ConnectorId::C: return "C";
    case ConnectorId::D: return "D";
  }
  return "?";
}

inline ConnectorId connector_from_string(const std::string& s) {
  if (s == "A") return ConnectorId::A;
  if (s == "B") return ConnectorId::B;
  if (s == "C") return ConnectorId::C;
  if (s == "D") return ConnectorId::D;
  throw std::invalid_argument("unknown connector name: " + s);
}

/// The six unfold angles, indexed in the fixed order AB, AC, AD, BC, BD, CD.
/// This is the actuation-space coordinate of the module.
struct DeltaVector {
  static constexpr int kAB = 0, kAC = 1, kAD = 2, kBC = 3, kBD = 4, kCD = 5;

  std::array<double, 6> v{};

  double& operator[](int i) { return v[static_cast<size_t>(i)]; }
  double operator[](int i) const { return v[static_cast<size_t>(i)]; }

  double& ab() { return v[kAB]; }
  double& ac() { return v[kAC]; }
  double& ad() { return v[kAD]; }
  double& bc() { return v[kBC]; }
  double& bd() { return v[kBD]; }
  double& cd() { return v[kCD]; }
  double ab() const { return v[kAB]; }
  double ac() const { return v[kAC]; }
  double ad() const { return v[kAD]; }
  double bc() const { return v[kBC]; }
  double bd() const { return v[kBD]; }
  double cd() const { return v[kCD]; }

  static const char* component_name(int i) {
    static constexpr const char* names[6] = {"delta_AB", "delta_AC", "delta_AD",
                                             "delta_BC", "delta_BD", "delta_CD"};
    return names[i];
  }

  static std::pair<ConnectorId, ConnectorId> component_pair(int i) {
    using C = ConnectorId;
    static constexpr std::pair<C, C> pairs[6] = {{C::A, C::B}, {C::A, C::C},
                                                 {C::A, C::D}, {C::B, C::C},
                                                 {C::B, C::D}, {C::C, C::D}};
    return pairs[i];
  }

  /// Index of the component joining two connectors (order-insensitive).
  static int component_index(ConnectorId a, ConnectorId b) {
    for (int i = 0; i < 6; ++i) {
      auto [p, q] = component_pair(i);
      if ((p == a && q == b) || (p == b && q == a)) return i;
    }
    throw std::invalid_argument("no linkage joins a connector to itself");
  }
};

inline constexpr double kDeltaMinDeg = 60.0;
inline constexpr double kDeltaMaxDeg = 180.0;

/// Pose record of one module: five position parameters plus the per-connector
/// frame deflection angles (absent where the defining formula has no value).
struct ModuleState {
  double phi_A = 0.0;
  double phi_B = 0.0;
  double theta_B = 0.0;
  double phi_C = 0.0;
  double theta_C = 0.0;
  std::map<ConnectorId, double> deflections;
};

/// Unit position at elevation phi (from the horizontal plane, positive away
/// from D) and azimuth theta (counterclockwise about z from x+).
inline Vec3 position_vector(double phi_deg, double theta_deg) {
  return unit_from_sphere_deg(phi_deg, theta_deg);
}

/// Elevation of a connector X given its unfold angle to the input connector D
/// at the lower pole. Maps [60, 180] onto [-30, 90]: the 120-degree arc that
/// is X's whole reachable set along its meridian.
inline double elevation_from_delta(double delta_xd_deg) {
  if (delta_xd_deg < kDeltaMinDeg - 1e-9 || delta_xd_deg > kDeltaMaxDeg + 1e-9)
    throw std::out_of_range("unfold angle outside [60, 180] degrees");
  return delta_xd_deg - 90.0;
}

inline Vec3 connector_position(const ModuleState& s, ConnectorId id) {
  switch (id) {
    case ConnectorId::A: return position_vector(s.phi_A, 0.0);
    case ConnectorId::B: return position_vector(s.phi_B, s.theta_B);
    case ConnectorId::C: return position_vector(s.phi_C, s.theta_C);
    case ConnectorId::D: return {0.0, 0.0, -1.0};
  }
  throw std::invalid_argument("bad connector id");
}

/// Signed output-labeling quantity: positive iff C sits on the correct side
/// of the plane through A, B, D (tested via the centroid E of triangle ABC).
inline double chirality_value(const Vec3& A, const Vec3& B, const Vec3& C,
                              const Vec3& D) {
  Vec3 n = cross(B - A, D - A);
  if (norm(n) < 1e-12) throw DegeneracyError("A, B, D nearly collinear");
  if (norm(cross(B - A, C - A)) < 1e-12)
    throw DegeneracyError("A, B, C nearly collinear");
  Vec3 E = (A + B + C) / 3.0;
  return dot(C - E, n);
}

inline bool chirality(const Vec3& A, const Vec3& B, const Vec3& C, const Vec3& D) {
  return chirality_value(A, B, C, D) > 0.0;
}

inline bool chirality(const ModuleState& s) {
  return chirality(connector_position(s, ConnectorId::A),
                   connector_position(s, ConnectorId::B),
                   connector_position(s, ConnectorId::C),
                   connector_position(s, ConnectorId::D));
}

/// Result of inverse kinematics: the six angles and, instead of an exception,
/// a report naming any component that left the working range.
struct IkResult {
  DeltaVector delta;
  std::vector<std::string> out_of_range;
  bool feasible() const { return out_of_range.empty(); }
};

inline IkResult inverse_kinematics(const ModuleState& s) {
  std::array<Vec3, 4> p = {connector_position(s, ConnectorId::A),
                           connector_position(s, ConnectorId::B),
                           connector_position(s, ConnectorId::C),
                           connector_position(s, ConnectorId::D)};
  IkResult out;
  for (int i = 0; i < 6; ++i) {
    auto [a, b] = DeltaVector::component_pair(i);
    double d = angular_distance_deg(p[static_cast<int>(a)], p[static_cast<int>(b)]);
    out.delta[i] = d;
    if (d < kDeltaMinDeg - 1e-9 || d > kDeltaMaxDeg + 1e-9) {
      out.out_of_range.push_back(std::string(DeltaVector::component_name(i)) +
                                 " = " + std::to_string(d) +
                                 " outside [60, 180]");
    }
  }
  return out;
}

struct FkOptions {
  /// Maximum allowed inconsistency between delta_BC and the distance implied
  /// by the other five angles. Exact inputs close to ~1e-12; plant-simulation
  /// inputs may legitimately carry up to the actuation play (9 degrees).
  double closure_tolerance_deg = 1e-6;
  /// Elevations within this margin of +/-90 degrees are rejected: the azimuth
  /// equation divides by cos(phi).
  double singular_margin_deg = 0.01;
  /// Band beyond [-1,1] inside which azimuth cosines are clamped.
  double clamp_band = 1e-9;
};

namespace detail {

/// Azimuth magnitude solving cos(delta) = cos(pa)cos(pb)cos(theta) +
/// sin(pa)sin(pb); throws when no azimuth can realize the requested angle.
inline double azimuth_from_delta(double delta_deg, double phi_a_deg,
                                 double phi_b_deg, double clamp_band,
                                 const char* which) {
  double denom = cos_deg(phi_a_deg) * cos_deg(phi_b_deg);
  double q = (cos_deg(delta_deg) - sin_deg(phi_a_deg) * sin_deg(phi_b_deg)) / denom;
  if (q > 1.0 + clamp_band || q < -1.0 - clamp_band)
    throw InfeasibleError(std::string("unfold angles admit no azimuth solution for ") +
                          which);
  return acos_deg(std::clamp(q, -1.0, 1.0));
}

}  // namespace detail

double deflection_B(const ModuleState& s);  // forward declarations
double deflection_C(const ModuleState& s);

/// Closed-form forward kinematics. Elevations come straight from the three
/// D-incident angles; theta_B from the AB angle on its (0,180) branch;
/// theta_C from the AC angle, restricted to the azimuth branches that satisfy
/// the labeling predicate (both mirrors can) and disambiguated by agreement
/// with the sixth angle; that agreement must also pass the closure tolerance.
inline ModuleState forward_kinematics(const DeltaVector& delta,
                                      const FkOptions& opt = {}) {
  ModuleState s;
  s.phi_A = elevation_from_delta(delta.ad());
  s.phi_B = elevation_from_delta(delta.bd());
  s.phi_C = elevation_from_delta(delta.cd());
  for (double phi : {s.phi_A, s.phi_B, s.phi_C}) {
    if (std::abs(phi) >= 90.0 - opt.singular_margin_deg)
      throw SingularityError("elevation at the pole: azimuth undefined");
  }

  s.theta_B = detail::azimuth_from_delta(delta.ab(), s.phi_A, s.phi_B,
                                         opt.clamp_band, "B");

  double tc = detail::azimuth_from_delta(delta.ac(), s.phi_A, s.phi_C,
                                         opt.clamp_band, "C");
  Vec3 A = position_vector(s.phi_A, 0.0);
  Vec3 B = position_vector(s.phi_B, s.theta_B);
  Vec3 D = {0.0, 0.0, -1.0};
  Vec3 C_pos = position_vector(s.phi_C, tc);
  Vec3 C_neg = position_vector(s.phi_C, 360.0 - tc);
  // A branch whose labeling quantity is undefined (C collinear with A and B,
  // e.g. the trial azimuth landing exactly on B) can never be selected.
  auto branch_value = [&](const Vec3& C_trial) {
    try {
      return chirality_value(A, B, C_trial, D);
    } catch (const DegeneracyError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  double v_pos = branch_value(C_pos);
  double v_neg = branch_value(C_neg);
  double r_pos = std::abs(angular_distance_deg(B, C_pos) - delta.bc());
  double r_neg = std::abs(angular_distance_deg(B, C_neg) - delta.bc());
  bool ok_pos = v_pos > 0.0;
  bool ok_neg = v_neg > 0.0;
  if (!ok_pos && !ok_neg)
    throw InfeasibleError("no azimuth branch for C satisfies the labeling predicate");
  bool take_pos = ok_pos && (!ok_neg || r_pos < r_neg ||
                             (r_pos == r_neg && v_pos >= v_neg));
  s.theta_C = take_pos ? tc : wrap_360(360.0 - tc);

  double residual = take_pos ? r_pos : r_neg;
  if (residual > opt.closure_tolerance_deg)
    throw ClosureError("delta_BC inconsistent with the other five angles by " +
                       std::to_string(residual) + " degrees");

  s.deflections[ConnectorId::A] = 0.0;
  s.deflections[ConnectorId::D] = 0.0;
  try {
    s.deflections[ConnectorId::B] = deflection_B(s);
  } catch (const BranchDomainError&) {
  } catch (const DegeneracyError&) {
  }
  try {
    s.deflections[ConnectorId::C] = deflection_C(s);
  } catch (const BranchDomainError&) {
  } catch (const DegeneracyError&) {
  }
  return s;
}

/// Inconsistency of a six-angle vector against the module's five degrees of
/// freedom: reconstructs B and C from the five angles other than delta_BC and
/// returns |distance(B,C) - delta_BC|.
inline double closure_residual(const DeltaVector& delta, const FkOptions& opt = {}) {
  FkOptions open = opt;
  open.closure_tolerance_deg = 1e300;  // solve the five-angle subproblem only
  ModuleState s = forward_kinematics(delta, open);
  double dist = angular_distance_deg(connector_position(s, ConnectorId::B),
                                     connector_position(s, ConnectorId::C));
  return std::abs(dist - delta.bc());
}

namespace detail {

/// Shared body of the two-branch deflection formula. `phi_self`/`theta_self`
/// describe the connector whose deflection is sought, `phi_other`/
/// `theta_other` its linkage partner on the B-C side.
inline double deflection_formula(double phi_self, double theta_self,
                                 double phi_other, double theta_other,
                                 double branch_tol_deg, double clamp_band) {
  Vec3 self = position_vector(phi_self, theta_self);
  Vec3 other = position_vector(phi_other, theta_other);
  double delta_bc = angular_distance_deg(self, other);
  double sd = sin_deg(delta_bc);
  if (std::abs(sd) < 1e-12)
    throw BranchDomainError("deflection undefined: paired connectors coincident or antipodal");
  double num, den;
  if (std::abs(phi_self) > branch_tol_deg) {
    num = cos_deg(phi_other) * cos_deg(theta_self - theta_other) -
          cos_deg(delta_bc) * cos_deg(phi_self);
    den = sd * sin_deg(phi_self);
  } else {
    double dt = theta_self - theta_other;
    double sdt = sin_deg(dt);
    if (std::abs(sdt) < 1e-12)
      throw BranchDomainError("deflection second branch undefined at equal azimuths");
    num = cos_deg(phi_other) - cos_deg(delta_bc) * cos_deg(dt);
    den = sd * sdt;
  }
  double arg = num / den;
  if (arg > 1.0 + clamp_band || arg < -1.0 - clamp_band)
    throw BranchDomainError("deflection argument outside [-1, 1]");
  return acos_deg(std::clamp(arg, -1.0, 1.0));
}

}  // namespace detail

/// Frame deflection angle of connector C in [0, 180] degrees. First branch
/// when phi_C is nonzero (beyond the branch tolerance), second branch on the
/// horizontal plane.
inline double deflection_C(const ModuleState& s) {
  return detail::deflection_formula(s.phi_C, s.theta_C, s.phi_B, s.theta_B,
                                    1e-7, 1e-9);
}

/// Frame deflection angle of connector B: the same construction with the
/// roles of B and C exchanged (both axes live in the plane of their shared
/// linkage, so the formula transfers).
inline double deflection_B(const ModuleState& s) {
  return detail::deflection_formula(s.phi_B, s.theta_B, s.phi_C, s.theta_C,
                                    1e-7, 1e-9);
}

/// Deflection of any connector: identically 0 for A and D (both are rigid in
/// the plane that defines the frame's x axis).
inline double connector_deflection(const ModuleState& s, ConnectorId id) {
  switch (id) {
    case ConnectorId::A:
    case ConnectorId::D: return 0.0;
    case ConnectorId::B: return deflection_B(s);
    case ConnectorId::C: return deflection_C(s);
  }
  throw std::invalid_argument("bad connector id");
}

/// Linkage-plane partner defining each connector's frame x axis.
inline ConnectorId frame_partner(ConnectorId id) {
  switch (id) {
    case ConnectorId::A: return ConnectorId::D;
    case ConnectorId::D: return ConnectorId::A;
    case ConnectorId::B: return ConnectorId::C;
    case ConnectorId::C: return ConnectorId::B;
  }
  throw std::invalid_argument("bad connector id");
}

/// Child-module attachment frame at an output connector: origin at the
/// connector (sphere radius L), z along the outward radial, x in the
/// connector's linkage plane rotated about z by the quantized roll.
inline Frame child_frame(const ModuleState& s, ConnectorId id,
                         double quantized_phi_deg, double L_mm) {
  if (id == ConnectorId::D)
    throw std::invalid_argument("the input connector has no child frame");
  double snapped = wrap_360(quantized_phi_deg);
  if (std::abs(snapped - std::round(snapped / 90.0) * 90.0) > 1e-9)
    throw std::invalid_argument("connection roll must be a multiple of 90 degrees");
  Vec3 z = connector_position(s, id);
  Vec3 x0 = tangent_toward(z, connector_position(s, frame_partner(id)));
  Vec3 x = rot_axis(z, snapped) * x0;
  return Frame{z * L_mm, x, z};
}

}  // namespace modur
