#pragma once

// Connector-workspace enumeration under the module's feasibility constraints:
//  (1) every pair unfold angle within the working range,
//  (2) optional minimum pairwise clearance (off by default: clearance is
//      guaranteed structurally within the working range),
//  (3) no interference between opposite linkage groups.
//
// A linkage group is modeled as the great-circle arc between its two
// connectors; interference is tested by sampling one arc into chords and
// shooting each chord against the planar sector fan (center, p_i, p_i+1) of
// the opposite arc, in both orderings. Testing both orderings makes the
// polyline test conservative-complete: at a true transversal crossing one of
// the two polylines is the radially inner one, so its chord pierces the other
// sector's fan.

#include <array>
#include <optional>
#include <stdexcept>
#include <vector>

#include "modur/kinematics.hpp"
#include "modur/ray_triangle.hpp"
#include "modur/spherical_grid.hpp"
#include "modur/vec3.hpp"

namespace modur {

struct FeasibilityConfig {
  /// Working range of every pair unfold angle, degrees.
  std::array<double, 2> delta_range{kDeltaMinDeg, kDeltaMaxDeg};
  /// Chords per arc in the interference polylines.
  int arc_samples = 32;
  /// Tolerance for grazing contacts: determinant cutoff in the ray-triangle
  /// test, apex exclusion in barycentric coordinates, and (converted to a
  /// cosine band) inclusivity slack of the delta_range boundaries.
  double grazing_tolerance = 1e-9;
  /// Constraint 2 knob: minimum pairwise angle, e.g. for experimenting with
  /// bulkier connectors. Disabled by default.
  std::optional<double> min_clearance = {};
  /// Constraint 3 toggle; disabling it reduces feasibility to the angle-range
  /// constraints (used by the analytic cross-checks).
  bool check_opposite_intersect = true;

  void validate() const {
    if (!(delta_range[0] > 0.0) || !(delta_range[1] <= 180.0) ||
        !(delta_range[0] <= delta_range[1]))
      throw std::domain_error("delta_range must lie within (0, 180] degrees");
    if (arc_samples < 2) throw std::domain_error("arc_samples must be at least 2");
    if (!(grazing_tolerance >= 0.0))
      throw std::domain_error("grazing_tolerance must be non-negative");
  }

  /// Effective lower angle bound including the clearance knob.
  double lower_bound() const {
    return min_clearance ? std::max(delta_range[0], *min_clearance) : delta_range[0];
  }
};

namespace detail {

/// Precomputed polyline of one great-circle arc.
struct ArcData {
  std::vector<Vec3> pts;      ///< arc_samples+1 unit points, endpoints included
  Vec3 normal{0, 0, 1};       ///< unit normal of the arc plane
  Vec3 mid{1, 0, 0};          ///< bounding-cap center
  double half_angle = 0.0;    ///< bounding-cap radius, degrees
  bool degenerate = false;    ///< endpoints (nearly) coincident
};

inline ArcData make_arc(const Vec3& p, const Vec3& q, int samples) {
  ArcData a;
  double ang = angular_distance_deg(p, q);
  a.half_angle = 0.5 * ang;
  a.pts.reserve(static_cast<size_t>(samples) + 1);
  if (ang < 1e-9) {
    a.degenerate = true;
    a.mid = p;
    a.pts.push_back(p);
    return a;
  }
  if (ang > 180.0 - 1e-9) {
    // Antipodal endpoints: fall back to slerp, which applies a deterministic
    // tie-break plane; derive the frame from the sampled midpoint.
    for (int k = 0; k <= samples; ++k)
      a.pts.push_back(slerp(p, q, static_cast<double>(k) / samples));
    a.mid = a.pts[static_cast<size_t>(samples) / 2];
    a.normal = unit(cross(p, a.mid));
    return a;
  }
  Vec3 axis = unit(cross(p, q));
  double step = ang / samples;
  double c = cos_deg(step), s = sin_deg(step);
  Vec3 v = p;
  a.pts.push_back(v);
  for (int k = 1; k <= samples; ++k) {
    v = v * c + cross(axis, v) * s;  // v stays perpendicular to the axis
    a.pts.push_back(v);
  }
  a.normal = axis;
  a.mid = unit(p + q);
  return a;
}

/// Shoots every plane-straddling chord of `x` against the sector fan of `y`
/// (triangles center-q_k-q_k+1). Hits at the shared sphere center (u+v within
/// the grazing band) do not count.
inline bool chords_hit_fan(const ArcData& x, const ArcData& y, double graze) {
  double lo = 1e300, hi = -1e300;
  size_t nx = x.pts.size();
  std::vector<double> side(nx);
  for (size_t i = 0; i < nx; ++i) {
    side[i] = dot(x.pts[i], y.normal);
    lo = std::min(lo, side[i]);
    hi = std::max(hi, side[i]);
  }
  if (lo > graze || hi < -graze) return false;  // all strictly one side
  const Vec3 center{0, 0, 0};
  for (size_t i = 0; i + 1 < nx; ++i) {
    bool straddles = (side[i] <= graze && side[i + 1] >= -graze) ||
                     (side[i] >= -graze && side[i + 1] <= graze);
    if (!straddles) continue;
    Vec3 dir = x.pts[i + 1] - x.pts[i];
    for (size_t k = 0; k + 1 < y.pts.size(); ++k) {
      auto hit = moller_trumbore(x.pts[i], dir, {center, y.pts[k], y.pts[k + 1]},
                                 graze, std::max(graze, 1e-9));
      if (hit && hit->t <= 1.0 + 1e-12 && hit->u + hit->v > graze) return true;
    }
  }
  return false;
}

/// Interference between two arcs' swept sectors, chords-vs-fan both ways.
/// Disjoint bounding caps are an exact early out: any intersection point has
/// a direction lying in both caps.
inline bool arcs_interfere(const ArcData& x, const ArcData& y, double graze) {
  if (x.degenerate || y.degenerate) return false;  // zero-length linkage span
  if (angular_distance_deg(x.mid, y.mid) > x.half_angle + y.half_angle + 1e-9)
    return false;
  return chords_hit_fan(x, y, graze) || chords_hit_fan(y, x, graze);
}

/// Everything reusable across C placements once A and B are fixed.
struct PairContext {
  Vec3 A, B, D;
  bool pair_ok = false;  ///< the A/B/D mutual angles themselves are in range
  ArcData arc_AB, arc_BD, arc_AD;
  double cos_lo = 0.0, cos_hi = -1.0, slack = 0.0;
  FeasibilityConfig cfg;
};

inline PairContext make_pair_context(double phi_A, double phi_B, double theta_B,
                                     const FeasibilityConfig& cfg) {
  cfg.validate();
  PairContext ctx;
  ctx.cfg = cfg;
  ctx.A = position_vector(phi_A, 0.0);
  ctx.B = position_vector(phi_B, theta_B);
  ctx.D = Vec3{0.0, 0.0, -1.0};
  double lo = cfg.lower_bound();
  double hi = cfg.delta_range[1];
  ctx.cos_lo = cos_deg(lo);
  ctx.cos_hi = cos_deg(hi);
  ctx.slack = deg_to_rad(std::max(cfg.grazing_tolerance, 1e-9));
  auto in_range = [&](double c) {
    return c <= ctx.cos_lo + ctx.slack && c >= ctx.cos_hi - ctx.slack;
  };
  ctx.pair_ok = in_range(dot(ctx.A, ctx.B)) && in_range(dot(ctx.A, ctx.D)) &&
                in_range(dot(ctx.B, ctx.D));
  if (ctx.pair_ok && cfg.check_opposite_intersect) {
    ctx.arc_AB = make_arc(ctx.A, ctx.B, cfg.arc_samples);
    ctx.arc_BD = make_arc(ctx.B, ctx.D, cfg.arc_samples);
    ctx.arc_AD = make_arc(ctx.A, ctx.D, cfg.arc_samples);
  }
  return ctx;
}

inline bool c_position_feasible(const PairContext& ctx, const Vec3& C) {
  if (!ctx.pair_ok) return false;
  auto in_range = [&](double c) {
    return c <= ctx.cos_lo + ctx.slack && c >= ctx.cos_hi - ctx.slack;
  };
  if (!in_range(dot(C, ctx.A)) || !in_range(dot(C, ctx.B)) ||
      !in_range(dot(C, ctx.D)))
    return false;
  if (!ctx.cfg.check_opposite_intersect) return true;
  double graze = ctx.cfg.grazing_tolerance;
  int n = ctx.cfg.arc_samples;
  // Opposite pairs: (AB,CD), (AC,BD), (AD,BC); the C-dependent arc is built
  // only when the bounding caps of the pair overlap.
  const ArcData* fixed_arcs[3] = {&ctx.arc_AB, &ctx.arc_BD, &ctx.arc_AD};
  const Vec3* var_ends[3] = {&ctx.D, &ctx.A, &ctx.B};
  for (int p = 0; p < 3; ++p) {
    const ArcData& f = *fixed_arcs[p];
    const Vec3& e = *var_ends[p];
    double var_half = 0.5 * angular_distance_deg(C, e);
    Vec3 var_mid = norm2(C + e) > 1e-18 ? unit(C + e) : C;
    if (angular_distance_deg(f.mid, var_mid) > f.half_angle + var_half + 1e-9)
      continue;
    ArcData v = make_arc(C, e, n);
    if (arcs_interfere(f, v, graze)) return false;
  }
  return true;
}

}  // namespace detail

/// Möller–Trumbore-based interference test between the three opposite linkage
/// pairs of a module pose.
inline bool opposite_slg_intersect(const ModuleState& s, const FeasibilityConfig& cfg) {
  cfg.validate();
  std::array<Vec3, 4> p = {connector_position(s, ConnectorId::A),
                           connector_position(s, ConnectorId::B),
                           connector_position(s, ConnectorId::C),
                           connector_position(s, ConnectorId::D)};
  const int pairs[3][4] = {{0, 1, 2, 3}, {0, 2, 1, 3}, {0, 3, 1, 2}};
  for (auto& q : pairs) {
    detail::ArcData x = detail::make_arc(p[q[0]], p[q[1]], cfg.arc_samples);
    detail::ArcData y = detail::make_arc(p[q[2]], p[q[3]], cfg.arc_samples);
    if (detail::arcs_interfere(x, y, cfg.grazing_tolerance)) return true;
  }
  return false;
}

/// Pose feasibility under the three constraints (angle range, optional
/// clearance, opposite-linkage interference).
inline bool feasible(const ModuleState& s, const FeasibilityConfig& cfg) {
  detail::PairContext ctx = detail::make_pair_context(s.phi_A, s.phi_B, s.theta_B, cfg);
  return detail::c_position_feasible(ctx, connector_position(s, ConnectorId::C));
}

/// Workspace of connector C for one (A, B) placement.
struct CWorkspace {
  SphericalGrid grid;   ///< input grid with per-cell feasibility filled in
  double ws = 0.0;      ///< area-weighted feasible fraction of the full sphere
};

/// Marks every cell of `grid` where C can be placed feasibly, with A at
/// (phi_A, azimuth 0) and B at (phi_B, theta_B). An (A,B) placement that is
/// itself infeasible yields an empty workspace.
inline CWorkspace workspace_of_C(double phi_A, double phi_B, double theta_B,
                                 const SphericalGrid& grid,
                                 const FeasibilityConfig& cfg) {
  detail::PairContext ctx = detail::make_pair_context(phi_A, phi_B, theta_B, cfg);
  CWorkspace out;
  out.grid = grid;
  out.grid.clear_flags();
  for (int i = 0; i < out.grid.n_phi; ++i) {
    for (int j = 0; j < out.grid.n_theta; ++j) {
      Vec3 c = position_vector(out.grid.phi_center(i), out.grid.theta_center(j));
      if (detail::c_position_feasible(ctx, c)) {
        out.grid.flags[out.grid.index(i, j)] = 1;
        out.ws += out.grid.weights[out.grid.index(i, j)];
      }
    }
  }
  return out;
}

/// Aggregate metrics of the (A,B)-swept workspace analysis.
struct WorkspaceMetrics {
  double ws = 0.0;                     ///< union feasible fraction (full-sphere area)
  std::vector<double> a_values;        ///< enumerated A elevations
  std::vector<double> wsa_raw;         ///< per-A sum of per-B ws (paper-faithful)
  std::vector<double> wsa_normalized;  ///< wsa_raw / number of B cells
  SphericalGrid b_layout;              ///< layout of the B enumeration grid
  std::vector<double> wsb;             ///< per-B fraction of A samples with ws > 0
  SphericalGrid c_union;               ///< cellwise union over all (A,B)
};

/// Evenly spaced A elevations over the reachable arc [-30, 90] degrees,
/// endpoints included.
inline std::vector<double> a_sample_values(int n) {
  if (n < 1) throw std::domain_error("need at least one A sample");
  std::vector<double> v;
  v.reserve(static_cast<size_t>(n));
  if (n == 1) {
    v.push_back(-30.0);
    return v;
  }
  for (int i = 0; i < n; ++i)
    v.push_back(-30.0 + 120.0 * static_cast<double>(i) / (n - 1));
  return v;
}

/// Unions C feasibility over every (A, B) placement; fills the per-A sums
/// (wsa) and the per-B fraction of A samples with non-empty workspace (wsb).
inline WorkspaceMetrics total_workspace_C(int a_samples, const SphericalGrid& b_grid,
                                          const SphericalGrid& c_grid,
                                          const FeasibilityConfig& cfg) {
  cfg.validate();
  WorkspaceMetrics m;
  m.a_values = a_sample_values(a_samples);
  m.b_layout = b_grid;
  m.b_layout.clear_flags();
  m.c_union = c_grid;
  m.c_union.clear_flags();
  size_t n_b = b_grid.cell_count();
  size_t n_c = c_grid.cell_count();
  std::vector<int> nonzero_count(n_b, 0);

  // C cell directions are shared across every placement.
  std::vector<Vec3> c_dir(n_c);
  for (int i = 0; i < c_grid.n_phi; ++i)
    for (int j = 0; j < c_grid.n_theta; ++j)
      c_dir[c_grid.index(i, j)] =
          position_vector(c_grid.phi_center(i), c_grid.theta_center(j));

  for (double phi_A : m.a_values) {
    double wsa_acc = 0.0;
    for (int bi = 0; bi < b_grid.n_phi; ++bi) {
      for (int bj = 0; bj < b_grid.n_theta; ++bj) {
        size_t b_idx = b_grid.index(bi, bj);
        detail::PairContext ctx = detail::make_pair_context(
            phi_A, b_grid.phi_center(bi), b_grid.theta_center(bj), cfg);
        if (!ctx.pair_ok) continue;
        double ws_ab = 0.0;
        for (size_t k = 0; k < n_c; ++k) {
          if (detail::c_position_feasible(ctx, c_dir[k])) {
            ws_ab += c_grid.weights[k];
            m.c_union.flags[k] = 1;
          }
        }
        wsa_acc += ws_ab;
        if (ws_ab > 0.0) ++nonzero_count[b_idx];
      }
    }
    m.wsa_raw.push_back(wsa_acc);
    m.wsa_normalized.push_back(n_b > 0 ? wsa_acc / static_cast<double>(n_b) : 0.0);
  }
  m.ws = m.c_union.feasible_fraction();
  m.wsb.resize(n_b);
  for (size_t b = 0; b < n_b; ++b)
    m.wsb[b] = static_cast<double>(nonzero_count[b]) / static_cast<double>(a_samples);
  return m;
}

/// Row per A value, column per B cell: each entry the ws fraction of
/// workspace_of_C at that placement. Renders directly as a heatmap.
inline std::vector<std::vector<double>> heatmap_C(const std::vector<double>& a_values,
                                                  const SphericalGrid& b_grid,
                                                  const SphericalGrid& c_grid,
                                                  const FeasibilityConfig& cfg) {
  cfg.validate();
  size_t n_c = c_grid.cell_count();
  std::vector<Vec3> c_dir(n_c);
  for (int i = 0; i < c_grid.n_phi; ++i)
    for (int j = 0; j < c_grid.n_theta; ++j)
      c_dir[c_grid.index(i, j)] =
          position_vector(c_grid.phi_center(i), c_grid.theta_center(j));
  std::vector<std::vector<double>> rows;
  rows.reserve(a_values.size());
  for (double phi_A : a_values) {
    std::vector<double> row;
    row.reserve(b_grid.cell_count());
    for (int bi = 0; bi < b_grid.n_phi; ++bi) {
      for (int bj = 0; bj < b_grid.n_theta; ++bj) {
        detail::PairContext ctx = detail::make_pair_context(
            phi_A, b_grid.phi_center(bi), b_grid.theta_center(bj), cfg);
        double ws_ab = 0.0;
        if (ctx.pair_ok) {
          for (size_t k = 0; k < n_c; ++k)
            if (detail::c_position_feasible(ctx, c_dir[k])) ws_ab += c_grid.weights[k];
        }
        row.push_back(ws_ab);
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Default enumeration protocol of the shipped analysis. B spans its full
/// reachable band; C spans the azimuth half-sphere theta in [180, 360), the
/// half selected by the output-labeling convention for the principal theta_B
/// branch, so mirror-duplicate placements are not double-counted. Area
/// normalization stays full-sphere. C elevations below -30 degrees are
/// omitted: the input-connector angle bound excludes them identically.
inline SphericalGrid default_b_grid(double step = 5.0) {
  return SphericalGrid::band(-30.0, 90.0, 0.0, 360.0, step, step);
}
inline SphericalGrid default_c_grid(double step = 5.0) {
  return SphericalGrid::band(-30.0, 90.0, 180.0, 360.0, step, step);
}
inline constexpr int kDefaultASamples = 25;

}  // namespace modur
