#pragma once

// Multi-module assembly graph and the two scripted basic motions.
//
// Modules dock connector-to-connector: the two connector points coincide (or
// sit a configurable face gap apart), their outward axes are anti-aligned,
// and the relative roll about the shared axis is locked to a multiple of 90
// degrees at connection time. World poses follow from a spanning-tree
// propagation of the per-edge docking transform; cycles must close within a
// fixed metric tolerance.
//
// Rotating a connector swings everything docked beyond it as one rigid body.
// Moving a module from one parent to another is a five-step script (rotate
// the moved module's spare connector, rotate the receiving connector, swing
// the carrier, dock, release); after the release the moved module's connector
// labels are re-established so the connector now holding it becomes the input.
//
// An Assembly is a plain value. Read-only queries (checks, world_poses) are
// safe to run concurrently; mutations (execute, relabel_module, connect)
// require external serialization, as for any value type.

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "modur/kinematics.hpp"
#include "modur/vec3.hpp"
#include "modur/workspace.hpp"

namespace modur {

/// Sphere radius of the shipped linkage design, millimetres.
inline constexpr double kModuleRadiusMm = 98.26;
/// Face-to-face distance of the physical docking latch, millimetres. Exposed
/// as an optional additive offset on Assembly (default off: docked centers
/// sit exactly two radii apart).
inline constexpr double kDockFaceGapMm = 8.0;
/// Cycle-closure tolerances of the world-pose propagation.
inline constexpr double kLoopToleranceMm = 1e-6;
inline constexpr double kLoopToleranceDeg = 1e-6;

using ModuleId = std::string;

/// One endpoint of a connection: a connector on a named module.
struct ConnectorRef {
  ModuleId module;
  ConnectorId connector = ConnectorId::A;

  bool operator==(const ConnectorRef&) const = default;
};

/// Connected-connector record: the peer endpoint and the docking roll locked
/// at connection time.
struct Link {
  ModuleId peer;
  ConnectorId peer_connector = ConnectorId::A;
  double roll_deg = 0.0;
};

/// One module of an assembly: its pose parameters, its world placement, and
/// the docking state of its connectors (absent key = free). The input
/// connector is D by construction; relabeling keeps it that way when the
/// module changes parents.
struct ModuleNode {
  ModuleId id;
  ModuleState state;
  Frame world_frame;
  std::map<ConnectorId, Link> links;

  bool connected(ConnectorId c) const { return links.count(c) > 0; }
};

namespace detail {

inline double quantized_roll(double roll_deg) {
  double snapped = wrap_360(roll_deg);
  if (std::abs(snapped - std::round(snapped / 90.0) * 90.0) > 1e-9)
    throw std::invalid_argument("docking roll must be a multiple of 90 degrees");
  return snapped;
}

/// Recomputes the per-connector frame deflection angles after a pose edit,
/// mirroring what forward kinematics stores (entries are dropped where the
/// defining formula has no value).
inline void refresh_deflections(ModuleState& s) {
  s.deflections.clear();
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
}

/// Pose with one connector moved to a new spherical position. Connector A is
/// locked to the zero-azimuth meridian (its plane defines the frame's x
/// axis); the input connector cannot move at all.
inline ModuleState with_connector(ModuleState s, ConnectorId id, double phi_deg,
                                  double theta_deg) {
  switch (id) {
    case ConnectorId::A:
      if (std::abs(wrap_180(theta_deg)) > 1e-6)
        throw std::invalid_argument("connector A rides the zero-azimuth meridian");
      s.phi_A = phi_deg;
      break;
    case ConnectorId::B:
      s.phi_B = phi_deg;
      s.theta_B = wrap_360(theta_deg);
      break;
    case ConnectorId::C:
      s.phi_C = phi_deg;
      s.theta_C = wrap_360(theta_deg);
      break;
    case ConnectorId::D:
      throw std::invalid_argument("the input connector cannot be retargeted");
  }
  refresh_deflections(s);
  return s;
}

}  // namespace detail

/// Module graph: pose records, symmetric docking edges, and the set of
/// modules whose stored world pose is pinned (bases fixed to the ground).
struct Assembly {
  std::map<ModuleId, ModuleNode> modules;
  std::set<ModuleId> ground;
  double L_mm = kModuleRadiusMm;
  /// Optional face gap between docked connectors; 0 keeps centers at 2L.
  double dock_gap_mm = 0.0;

  ModuleNode& at(const ModuleId& id) {
    auto it = modules.find(id);
    if (it == modules.end()) throw AssemblyError("unknown module: " + id);
    return it->second;
  }
  const ModuleNode& at(const ModuleId& id) const {
    auto it = modules.find(id);
    if (it == modules.end()) throw AssemblyError("unknown module: " + id);
    return it->second;
  }

  void add(const ModuleId& id, ModuleState state, Frame world = {}) {
    if (modules.count(id)) throw AssemblyError("duplicate module id: " + id);
    detail::refresh_deflections(state);
    ModuleNode n;
    n.id = id;
    n.state = std::move(state);
    n.world_frame = world;
    modules.emplace(id, std::move(n));
  }

  /// Records a symmetric docking edge. The roll is stored identically at both
  /// endpoints: the docking transform is its own inverse under endpoint
  /// exchange with the same roll.
  void connect(const ConnectorRef& x, const ConnectorRef& y, double roll_deg) {
    if (x.module == y.module) throw AssemblyError("a module cannot dock to itself");
    ModuleNode& nx = at(x.module);
    ModuleNode& ny = at(y.module);
    if (nx.connected(x.connector) || ny.connected(y.connector))
      throw AssemblyError("connector already in use");
    double r = detail::quantized_roll(roll_deg);
    nx.links[x.connector] = Link{y.module, y.connector, r};
    ny.links[y.connector] = Link{x.module, x.connector, r};
  }

  void disconnect(const ConnectorRef& x, const ConnectorRef& y) {
    ModuleNode& nx = at(x.module);
    ModuleNode& ny = at(y.module);
    auto it = nx.links.find(x.connector);
    if (it == nx.links.end() || it->second.peer != y.module ||
        it->second.peer_connector != y.connector)
      throw AssemblyError("no such connection");
    nx.links.erase(it);
    ny.links.erase(y.connector);
  }

  size_t connection_count() const {
    size_t half = 0;
    for (const auto& [id, n] : modules) half += n.links.size();
    return half / 2;
  }

  /// Graph audit: every link known, mirrored by its peer with the same roll,
  /// rolls quantized, no self-docking. Single use per connector is structural
  /// (one link slot per connector); symmetry is what can drift.
  void audit() const {
    for (const auto& [id, n] : modules) {
      if (n.id != id) throw AssemblyError("module id mismatch in the registry: " + id);
      for (const auto& [c, l] : n.links) {
        if (l.peer == id) throw AssemblyError("module docked to itself: " + id);
        const ModuleNode& p = at(l.peer);
        auto back = p.links.find(l.peer_connector);
        if (back == p.links.end() || back->second.peer != id ||
            back->second.peer_connector != c)
          throw AssemblyError("asymmetric connection between " + id + " and " + l.peer);
        if (back->second.roll_deg != l.roll_deg)
          throw AssemblyError("mismatched docking roll between " + id + " and " + l.peer);
        detail::quantized_roll(l.roll_deg);
      }
    }
    for (const auto& g : ground) at(g);
  }
};

/// Docking frame of a connector in module coordinates: origin on the sphere
/// surface, z along the outward connector direction, x the in-plane tangent
/// toward the connector's linkage partner. The input connector's frame is
/// constant: its partner A rides the zero-azimuth meridian, so the tangent at
/// the lower pole is always +x.
inline Frame dock_frame(const ModuleState& s, ConnectorId id, double L_mm) {
  if (id == ConnectorId::D)
    return Frame{{0.0, 0.0, -L_mm}, {1.0, 0.0, 0.0}, {0.0, 0.0, -1.0}};
  return child_frame(s, id, 0.0, L_mm);
}

/// Rigid transform of a docked module's frame relative to its parent's frame.
/// The two docking frames share their z axis anti-aligned (faces touching,
/// optionally `gap_mm` apart) and the child is rolled about that axis by the
/// quantized roll, so docked centers sit exactly 2L (+ gap) apart. The same
/// roll describes the edge from either side: exchanging the endpoints yields
/// the inverse transform.
inline Transform mate_transform(const ModuleState& parent_state, ConnectorId parent_conn,
                                const ModuleState& child_state, ConnectorId child_conn,
                                double roll_deg, double L_mm, double gap_mm = 0.0) {
  double roll = detail::quantized_roll(roll_deg);
  Transform dp = dock_frame(parent_state, parent_conn, L_mm).transform();
  Transform dc = dock_frame(child_state, child_conn, L_mm).transform();
  Transform spin{rot_z(roll), {0.0, 0.0, gap_mm}};
  Transform flip{rot_x(180.0), {0.0, 0.0, 0.0}};
  return dp * spin * flip * dc.inverse();
}

// ---------------------------------------------------------------------------
// Connector relabeling.

/// New connector labels when `new_input` becomes the input connector. Each
/// connector pairs with every other through a linkage of a distinct class;
/// the class partners of the new input fix all remaining labels (its
/// outer-class partner becomes A, middle-class B, inner-class C). All three
/// non-trivial relabelings are double transpositions, so the output-labeling
/// orientation predicate is preserved automatically.
inline std::map<ConnectorId, ConnectorId> relabel_mapping(ConnectorId new_input) {
  using C = ConnectorId;
  switch (new_input) {
    case C::D:
      return {{C::A, C::A}, {C::B, C::B}, {C::C, C::C}, {C::D, C::D}};
    case C::A:
      return {{C::A, C::D}, {C::B, C::C}, {C::C, C::B}, {C::D, C::A}};
    case C::B:
      return {{C::A, C::C}, {C::B, C::D}, {C::C, C::A}, {C::D, C::B}};
    case C::C:
      return {{C::A, C::B}, {C::B, C::A}, {C::C, C::D}, {C::D, C::C}};
  }
  throw std::invalid_argument("bad connector id");
}

/// A relabeled pose: the same physical sphere with the labels permuted and
/// the body frame rebuilt around the new input (new D at the lower pole, new
/// A on the zero-azimuth meridian).
struct RelabeledState {
  ModuleState state;
  /// New body axes expressed in the old body frame; composing the old world
  /// pose with this rotation keeps every physical connector where it was.
  Mat3 rotation;
};

inline RelabeledState relabeled(const ModuleState& s, ConnectorId new_input) {
  auto mapping = relabel_mapping(new_input);
  std::map<ConnectorId, ConnectorId> old_of;
  for (const auto& [o, n] : mapping) old_of[n] = o;

  Vec3 z_new = -connector_position(s, old_of[ConnectorId::D]);
  Vec3 pa = connector_position(s, old_of[ConnectorId::A]);
  Vec3 xr = pa - dot(pa, z_new) * z_new;
  if (norm(xr) < 1e-9)
    throw DegeneracyError("relabeled frame undefined: new A at the new pole");
  Vec3 x_new = unit(xr);
  Mat3 R = Mat3::from_columns(x_new, cross(z_new, x_new), z_new);
  Mat3 Rt = R.transpose();

  auto coords = [&](ConnectorId new_label) {
    Vec3 q = Rt * connector_position(s, old_of[new_label]);
    return std::pair<double, double>{asin_deg(std::clamp(q.z, -1.0, 1.0)),
                                     wrap_360(atan2_deg(q.y, q.x))};
  };
  RelabeledState out;
  out.rotation = R;
  out.state.phi_A = coords(ConnectorId::A).first;  // azimuth 0 by construction
  auto [pb, tb] = coords(ConnectorId::B);
  auto [pc, tc] = coords(ConnectorId::C);
  out.state.phi_B = pb;
  out.state.theta_B = tb;
  out.state.phi_C = pc;
  out.state.theta_C = tc;
  detail::refresh_deflections(out.state);
  if (!chirality(out.state))
    throw AssemblyError("relabeling produced an invalid output orientation");
  return out;
}

/// In-place relabeling of one module: permutes its connector labels, rebuilds
/// its pose record and world frame (the physical sphere does not move), and
/// updates the back-references stored at its peers. Frame partners pair
/// through the outer linkage class, which every relabeling maps onto itself,
/// so recorded docking rolls stay valid.
inline void relabel_module(Assembly& a, const ModuleId& id, ConnectorId new_input) {
  if (new_input == ConnectorId::D) return;
  ModuleNode& node = a.at(id);
  auto mapping = relabel_mapping(new_input);
  RelabeledState r = relabeled(node.state, new_input);
  node.state = r.state;
  Transform T = node.world_frame.transform();
  node.world_frame = Frame::from_transform(Transform{T.R * r.rotation, T.t});
  std::map<ConnectorId, Link> moved;
  for (const auto& [c, l] : node.links) moved[mapping.at(c)] = l;
  node.links = std::move(moved);
  for (const auto& [c, l] : node.links)
    a.at(l.peer).links.at(l.peer_connector).peer_connector = c;
}

// ---------------------------------------------------------------------------
// World-pose propagation.

namespace detail {

inline double rotation_gap_deg(const Mat3& r1, const Mat3& r2) {
  // ||R1 - R2||_F = 2*sqrt(2)*sin(gap/2); unlike the trace formula this stays
  // well-conditioned near zero gap, where round-off must not read as a gap.
  double f2 = 0.0;
  for (int c = 0; c < 3; ++c) f2 += norm2(r1.col[c] - r2.col[c]);
  double s = std::sqrt(f2) / (2.0 * std::sqrt(2.0));
  return 2.0 * asin_deg(std::clamp(s, 0.0, 1.0));
}

/// Breadth-first frame propagation. Grounded modules keep their stored poses
/// and seed the search; with no ground, the first module id is pinned at the
/// origin. Components never reached from a pinned module keep their stored
/// poses (rooted at their first id). With `verify_loops`, every non-tree edge
/// must close within the loop tolerances.
inline std::map<ModuleId, Transform> spanning_transforms(const Assembly& a,
                                                         bool verify_loops) {
  a.audit();
  std::map<ModuleId, Transform> placed;
  std::deque<ModuleId> queue;
  auto pin = [&](const ModuleId& id, const Transform& t) {
    if (placed.emplace(id, t).second) queue.push_back(id);
  };
  for (const ModuleId& g : a.ground) pin(g, a.at(g).world_frame.transform());
  if (a.ground.empty() && !a.modules.empty())
    pin(a.modules.begin()->first, Transform::identity());
  for (;;) {
    while (!queue.empty()) {
      ModuleId id = queue.front();
      queue.pop_front();
      const ModuleNode& n = a.at(id);
      Transform t = placed.at(id);
      for (const auto& [conn, link] : n.links) {
        const ModuleNode& peer = a.at(link.peer);
        Transform tp = t * mate_transform(n.state, conn, peer.state,
                                          link.peer_connector, link.roll_deg,
                                          a.L_mm, a.dock_gap_mm);
        auto it = placed.find(link.peer);
        if (it == placed.end()) {
          pin(link.peer, tp);
        } else if (verify_loops) {
          double dt = distance(it->second.t, tp.t);
          double dr = rotation_gap_deg(it->second.R, tp.R);
          if (dt > kLoopToleranceMm || dr > kLoopToleranceDeg)
            throw AssemblyError("connection cycle fails to close at module '" +
                                link.peer + "' (" + std::to_string(dt) + " mm, " +
                                std::to_string(dr) + " deg)");
        }
      }
    }
    if (placed.size() == a.modules.size()) break;
    for (const auto& [id, n] : a.modules) {
      if (!placed.count(id)) {
        pin(id, n.world_frame.transform());
        break;
      }
    }
  }
  return placed;
}

/// Writes the propagated poses back into the nodes.
inline void refresh_world_frames(Assembly& a, bool verify_loops) {
  auto placed = spanning_transforms(a, verify_loops);
  for (auto& [id, n] : a.modules) n.world_frame = Frame::from_transform(placed.at(id));
}

}  // namespace detail

/// World pose of every module, propagated over a spanning tree of the
/// docking edges. Throws AssemblyError when a connection cycle's composed
/// transform fails to close within the loop tolerances.
inline std::map<ModuleId, Frame> world_poses(const Assembly& a) {
  auto placed = detail::spanning_transforms(a, true);
  std::map<ModuleId, Frame> out;
  for (const auto& [id, t] : placed) out[id] = Frame::from_transform(t);
  return out;
}

// ---------------------------------------------------------------------------
// Motion checks.

/// Knobs shared by the rotation/transition checks, the planner and the
/// executor.
struct ReconfigOptions {
  FeasibilityConfig feasibility{};
  /// States sampled along a swept arc, endpoints included.
  int sweep_samples = 48;
  /// Flag swept module centers closer than 2L*sin(overlap_half_angle_deg) to
  /// any module outside the moving subtree.
  bool check_module_overlap = true;
  double overlap_half_angle_deg = 30.0;
  /// Admission band for rotation targets of connector A, which cannot leave
  /// its meridian: the requested direction may sit this far off azimuth 0.
  double meridian_tolerance_deg = 1.0;
  /// Angular tolerance of the transfer-plane coplanarity requirement.
  double coplanar_tolerance_deg = 1.0;
  /// Agreement required between the meeting points implied by the carrier
  /// side and the receiver side (equivalently, how far the base separation
  /// may deviate from the docking distance).
  double meeting_tolerance_mm = 1e-6;
  /// Docking admission at connect time: face-point separation (beyond the
  /// configured gap) and outward-axis anti-alignment.
  double dock_position_tolerance_mm = 1e-6;
  double dock_axis_tolerance_deg = 1e-6;

  void validate() const {
    feasibility.validate();
    if (sweep_samples < 2) throw std::domain_error("sweep_samples must be at least 2");
    if (!(overlap_half_angle_deg >= 0.0 && overlap_half_angle_deg <= 90.0))
      throw std::domain_error("overlap_half_angle_deg must lie in [0, 90]");
    if (!(meridian_tolerance_deg >= 0.0) || !(coplanar_tolerance_deg >= 0.0) ||
        !(meeting_tolerance_mm >= 0.0) || !(dock_position_tolerance_mm >= 0.0) ||
        !(dock_axis_tolerance_deg >= 0.0))
      throw std::domain_error("tolerances must be non-negative");
  }
};

/// Outcome of a rotation feasibility query. `reason` names what blocks an
/// infeasible sweep: "constraint 1" (a pair angle left the working range),
/// "constraint 2" (the optional clearance floor), "constraint 3" (opposite
/// linkage groups intersect), or "collision" (module spheres overlap). The
/// reason describes the first blocked sample along the arc.
struct RotationCheck {
  bool ok = false;
  std::string reason;

  explicit operator bool() const { return ok; }
};

namespace detail {

/// Names the constraint that rejects an infeasible pose, by re-running the
/// feasibility test with the suspect constraint disabled.
inline std::string violated_constraint(const ModuleState& s, const FeasibilityConfig& cfg) {
  FeasibilityConfig no_intersect = cfg;
  no_intersect.check_opposite_intersect = false;
  if (feasible(s, no_intersect)) return "constraint 3";
  if (cfg.min_clearance) {
    FeasibilityConfig no_clearance = no_intersect;
    no_clearance.min_clearance.reset();
    if (feasible(s, no_clearance)) return "constraint 2";
  }
  return "constraint 1";
}

/// Modules reachable from the far end of a linked connector without crossing
/// that edge. Contains the module itself exactly when the edge sits on a
/// connection cycle.
inline std::set<ModuleId> edge_far_side(const Assembly& a, const ModuleId& m,
                                        ConnectorId conn) {
  const Link& l = a.at(m).links.at(conn);
  std::set<ModuleId> seen{l.peer};
  std::deque<ModuleId> q{l.peer};
  while (!q.empty()) {
    ModuleId id = q.front();
    q.pop_front();
    for (const auto& [c, lk] : a.at(id).links) {
      if (id == l.peer && c == l.peer_connector) continue;
      if (seen.insert(lk.peer).second) q.push_back(lk.peer);
    }
  }
  return seen;
}

inline bool side_pinned(const Assembly& a, const std::set<ModuleId>& side) {
  for (const ModuleId& g : a.ground)
    if (side.count(g)) return true;
  if (a.ground.empty() && !a.modules.empty() && side.count(a.modules.begin()->first))
    return true;
  return false;
}

}  // namespace detail

/// Whether a connector can sweep from its current position to the target
/// along the great-circle arc: every sampled pose must stay feasible, and the
/// rigidly swinging far-side modules must not overlap the rest. Throws for
/// topology misuse (unknown names, retargeting the input connector, moving A
/// off its meridian, tearing a cycle, or a rotation pinned at both ends).
inline RotationCheck check_rotation(const Assembly& a, const ModuleId& m,
                                    ConnectorId conn, double target_phi_deg,
                                    double target_theta_deg,
                                    const ReconfigOptions& opt = {}) {
  opt.validate();
  const ModuleNode& node = a.at(m);
  if (conn == ConnectorId::D)
    throw std::invalid_argument("the input connector cannot be retargeted");
  if (conn == ConnectorId::A && std::abs(wrap_180(target_theta_deg)) > 1e-6)
    throw std::invalid_argument("connector A rides the zero-azimuth meridian");

  bool carries = node.connected(conn);
  std::set<ModuleId> far;
  if (carries) {
    far = detail::edge_far_side(a, m, conn);
    if (far.count(m))
      throw AssemblyError("rotation would tear a closed connection loop");
    std::set<ModuleId> near;
    for (const auto& [id, n] : a.modules)
      if (!far.count(id)) near.insert(id);
    if (detail::side_pinned(a, far) && detail::side_pinned(a, near))
      throw AssemblyError("rotation is pinned at both ends");
  }

  Vec3 from = connector_position(node.state, conn);
  Vec3 to = position_vector(target_phi_deg, target_theta_deg);

  bool collisions = opt.check_module_overlap && carries && a.modules.size() > 1;
  Assembly scratch;
  if (collisions) scratch = a;
  double limit = 2.0 * a.L_mm * sin_deg(opt.overlap_half_angle_deg) - 1e-9;

  int n = std::max(2, opt.sweep_samples);
  for (int k = 0; k < n; ++k) {
    double t = static_cast<double>(k) / (n - 1);
    Vec3 p = slerp(from, to, t);
    double phi = asin_deg(std::clamp(p.z, -1.0, 1.0));
    double theta = conn == ConnectorId::A ? 0.0 : wrap_360(atan2_deg(p.y, p.x));
    ModuleState cand = detail::with_connector(node.state, conn, phi, theta);
    if (!feasible(cand, opt.feasibility))
      return {false, detail::violated_constraint(cand, opt.feasibility)};
    if (collisions) {
      scratch.at(m).state = cand;
      auto placed = detail::spanning_transforms(scratch, false);
      for (const ModuleId& mover : far) {
        const Vec3& c0 = placed.at(mover).t;
        for (const auto& [other, to_] : placed) {
          if (far.count(other)) continue;
          if (distance(c0, to_.t) < limit) return {false, "collision"};
        }
      }
    }
  }
  return {true, {}};
}

// ---------------------------------------------------------------------------
// Transition check and planning.

/// Per-requirement report of the module-transfer feasibility check. `ok` is
/// the conjunction; `reason` names the first failed requirement.
struct TransitionReport {
  bool ok = false;
  /// The moved module has a spare connector that can point at the receiver's
  /// meeting direction (it comes to rest 30 degrees below the moved module's
  /// equator, 60 degrees from its input connector).
  bool spare_connector_reachable = false;
  /// The carrier connector can swing to the meeting direction (60 degrees
  /// above the base line).
  bool carrier_reachable = false;
  /// The receiving connector can swing to its meeting direction (60 degrees
  /// above the base line, facing back).
  bool receiver_reachable = false;
  /// Both participating connectors come to rest in the transfer plane.
  bool connectors_coplanar = false;
  /// The meeting points implied by the carrier side and the receiver side
  /// agree: the bases stand at docking distance.
  bool meeting_point_consistent = false;
  std::string reason;

  explicit operator bool() const { return ok; }
};

namespace detail {

/// Everything the transition planner derives from a layout: the transfer
/// frame, the meeting-direction targets, the chosen connectors and the
/// docking roll, plus the feasibility report.
struct TransitionGeometry {
  TransitionReport report;
  ConnectorId carrier = ConnectorId::A;
  double carrier_roll = 0.0;
  double carrier_phi = 0.0, carrier_theta = 0.0;
  ConnectorId receiver = ConnectorId::A;
  double receiver_phi = 0.0, receiver_theta = 0.0;
  ConnectorId moved = ConnectorId::A;
  double moved_phi = 0.0, moved_theta = 0.0;
  double connect_roll = 0.0;
};

inline std::pair<double, double> sphere_coords(const Vec3& v) {
  return {asin_deg(std::clamp(v.z, -1.0, 1.0)), wrap_360(atan2_deg(v.y, v.x))};
}

/// Picks the free connector of `node` best placed to sweep to the local
/// direction `dir`: feasible candidates only, smallest angular travel wins.
/// Connector A is admitted only when the direction lies near its meridian.
inline bool pick_connector(const Assembly& a, const ModuleId& id, const Vec3& dir,
                           const ReconfigOptions& opt, ConnectorId& chosen,
                           double& phi_out, double& theta_out) {
  const ModuleNode& node = a.at(id);
  auto [phi, theta] = sphere_coords(dir);
  bool found = false;
  double best = 0.0;
  for (ConnectorId cand : {ConnectorId::A, ConnectorId::B, ConnectorId::C}) {
    if (node.connected(cand)) continue;
    double t = theta;
    if (cand == ConnectorId::A) {
      if (std::abs(wrap_180(theta)) > opt.meridian_tolerance_deg) continue;
      t = 0.0;
    }
    if (!check_rotation(a, id, cand, phi, t, opt).ok) continue;
    double travel = angular_distance_deg(connector_position(node.state, cand),
                                         position_vector(phi, t));
    if (!found || travel < best) {
      found = true;
      best = travel;
      chosen = cand;
      phi_out = phi;
      theta_out = t;
    }
  }
  return found;
}

inline TransitionGeometry transition_geometry(const Assembly& a, const ModuleId& mc,
                                              const ModuleId& mp, const ModuleId& mr,
                                              const ReconfigOptions& opt) {
  opt.validate();
  TransitionGeometry g;
  const ModuleNode& cn = a.at(mc);
  const ModuleNode& pn = a.at(mp);
  const ModuleNode& rn = a.at(mr);
  auto dlink = cn.links.find(ConnectorId::D);
  if (dlink == cn.links.end() || dlink->second.peer != mp)
    throw AssemblyError("module '" + mc + "' is not carried by '" + mp + "'");
  g.carrier = dlink->second.peer_connector;
  g.carrier_roll = dlink->second.roll_deg;

  auto placed = spanning_transforms(a, true);
  Transform tp = placed.at(mp), tr = placed.at(mr), tc = placed.at(mc);
  Vec3 span = tr.t - tp.t;
  double d = norm(span);
  if (d < 1e-9) throw AssemblyError("carrier and receiver bases are co-located");
  Vec3 u = span / d;
  // Transfer-plane "up": perpendicular component of the carried module's
  // offset, so the meeting point forms on the side the module already hangs.
  Vec3 w = tc.t - tp.t;
  w = w - dot(w, u) * u;
  if (norm(w) < 1e-9 * std::max(1.0, a.L_mm)) {
    w = Vec3{0.0, 0.0, 1.0} - dot(Vec3{0.0, 0.0, 1.0}, u) * u;
    if (norm(w) < 1e-9) w = Vec3{1.0, 0.0, 0.0} - dot(Vec3{1.0, 0.0, 0.0}, u) * u;
  }
  w = unit(w);

  double side = 2.0 * a.L_mm + a.dock_gap_mm;
  g.report.meeting_point_consistent = std::abs(d - side) <= opt.meeting_tolerance_mm;

  const double kRoot3Half = std::sqrt(3.0) / 2.0;
  Vec3 c_hat = 0.5 * u + kRoot3Half * w;   // meeting direction seen from the carrier base
  Vec3 r_hat = -0.5 * u + kRoot3Half * w;  // meeting direction seen from the receiver

  // Carrier swing: the connector holding the moved module must reach c_hat.
  Vec3 c_loc = tp.R.transpose() * c_hat;
  auto [cphi, ctheta] = sphere_coords(c_loc);
  bool carrier_ok = true;
  if (g.carrier == ConnectorId::A) {
    if (std::abs(wrap_180(ctheta)) > opt.meridian_tolerance_deg)
      carrier_ok = false;
    else
      ctheta = 0.0;
  }
  g.carrier_phi = cphi;
  g.carrier_theta = ctheta;
  if (carrier_ok) carrier_ok = check_rotation(a, mp, g.carrier, cphi, ctheta, opt).ok;
  g.report.carrier_reachable = carrier_ok;

  // Predicted pose of the moved module at the meeting point. Its input dock
  // frame is state-independent, so the prediction needs only the carrier
  // target and the existing roll.
  ModuleState p_at = with_connector(pn.state, g.carrier, cphi, ctheta);
  Transform tc_final = tp * mate_transform(p_at, g.carrier, cn.state, ConnectorId::D,
                                           g.carrier_roll, a.L_mm, a.dock_gap_mm);

  // Receiving connector: a free connector of the receiver pointing at r_hat.
  Vec3 r_loc = tr.R.transpose() * r_hat;
  g.report.receiver_reachable =
      pick_connector(a, mr, r_loc, opt, g.receiver, g.receiver_phi, g.receiver_theta);

  // Spare connector of the moved module: must point back at the receiver once
  // the carrier reaches the meeting point. The equilateral meeting geometry
  // puts that direction 30 degrees below the moved module's equator.
  Vec3 g_loc = tc_final.R.transpose() * (-1.0 * r_hat);
  g.report.spare_connector_reachable =
      pick_connector(a, mc, g_loc, opt, g.moved, g.moved_phi, g.moved_theta);

  // Coplanarity: both participating connectors, as actually targeted (A
  // targets snap onto their meridian), must rest in the transfer plane.
  if (g.report.receiver_reachable && g.report.spare_connector_reachable) {
    Vec3 nrm = unit(cross(u, w));
    auto off_plane = [&](const Vec3& v) {
      return std::abs(asin_deg(std::clamp(dot(v, nrm), -1.0, 1.0)));
    };
    Vec3 recv_dir = tr.R * position_vector(g.receiver_phi, g.receiver_theta);
    Vec3 moved_dir = tc_final.R * position_vector(g.moved_phi, g.moved_theta);
    g.report.connectors_coplanar = off_plane(recv_dir) <= opt.coplanar_tolerance_deg &&
                                   off_plane(moved_dir) <= opt.coplanar_tolerance_deg;

    // Docking roll: the multiple of 90 degrees closest to the measured
    // misalignment between the two dock x axes about the shared axis.
    ModuleState r_at = with_connector(rn.state, g.receiver, g.receiver_phi, g.receiver_theta);
    ModuleState c_at = with_connector(cn.state, g.moved, g.moved_phi, g.moved_theta);
    Frame rd = dock_frame(r_at, g.receiver, a.L_mm);
    Frame cd = dock_frame(c_at, g.moved, a.L_mm);
    Vec3 xp = tr.R * rd.x_axis;
    Vec3 zp = tr.R * rd.z_axis;
    Vec3 xc = tc_final.R * cd.x_axis;
    double alpha = atan2_deg(dot(cross(xp, xc), zp), dot(xp, xc));
    g.connect_roll = wrap_360(90.0 * std::round(alpha / 90.0));
  }

  TransitionReport& rep = g.report;
  rep.ok = rep.spare_connector_reachable && rep.carrier_reachable &&
           rep.receiver_reachable && rep.connectors_coplanar &&
           rep.meeting_point_consistent;
  if (!rep.spare_connector_reachable)
    rep.reason = "no spare connector on the moved module can face the receiver";
  else if (!rep.carrier_reachable)
    rep.reason = "the carrier connector cannot reach the meeting direction";
  else if (!rep.receiver_reachable)
    rep.reason = "no free receiver connector can reach the meeting direction";
  else if (!rep.connectors_coplanar)
    rep.reason = "participating connectors leave the transfer plane";
  else if (!rep.meeting_point_consistent)
    rep.reason = "no common reachable meeting pose: bases are not at docking distance";
  return g;
}

}  // namespace detail

/// Whether `mc` (currently carried by `mp`) can be handed over to `mr`:
/// evaluates all transfer requirements and reports them individually.
inline TransitionReport check_transition(const Assembly& a, const ModuleId& mc,
                                         const ModuleId& mp, const ModuleId& mr,
                                         const ReconfigOptions& opt = {}) {
  return detail::transition_geometry(a, mc, mp, mr, opt).report;
}

// ---------------------------------------------------------------------------
// Action scripts.

/// One step of a reconfiguration script.
struct Action {
  enum class Kind { SetConnectorGoal, Connect, Disconnect };

  Kind kind = Kind::SetConnectorGoal;
  ConnectorRef a;            ///< rotated connector, or first docking endpoint
  ConnectorRef b;            ///< second docking endpoint (connect/disconnect)
  double phi_deg = 0.0;      ///< rotation target elevation
  double theta_deg = 0.0;    ///< rotation target azimuth
  double roll_deg = 0.0;     ///< docking roll (connect)

  static Action set_goal(ModuleId m, ConnectorId c, double phi, double theta) {
    Action x;
    x.kind = Kind::SetConnectorGoal;
    x.a = {std::move(m), c};
    x.phi_deg = phi;
    x.theta_deg = theta;
    return x;
  }
  static Action connect(ConnectorRef p, ConnectorRef q, double roll) {
    Action x;
    x.kind = Kind::Connect;
    x.a = std::move(p);
    x.b = std::move(q);
    x.roll_deg = roll;
    return x;
  }
  static Action disconnect(ConnectorRef p, ConnectorRef q) {
    Action x;
    x.kind = Kind::Disconnect;
    x.a = std::move(p);
    x.b = std::move(q);
    return x;
  }
};

using ActionScript = std::vector<Action>;

/// Five-step handover script: point the moved module's spare connector at the
/// receiver, point the receiving connector at the meeting direction, swing
/// the carrier until the faces meet, dock, release the old parent. Returns an
/// empty script when the moved module already docks the receiver. Throws
/// InfeasibleError when any requirement of the transfer check fails.
inline ActionScript plan_transition(const Assembly& a, const ModuleId& mc,
                                    const ModuleId& mp, const ModuleId& mr,
                                    const ReconfigOptions& opt = {}) {
  for (const auto& [c, l] : a.at(mc).links)
    if (l.peer == mr) return {};
  detail::TransitionGeometry g = detail::transition_geometry(a, mc, mp, mr, opt);
  if (!g.report.ok)
    throw InfeasibleError("transition planning failed: " + g.report.reason);
  ActionScript s;
  s.push_back(Action::set_goal(mc, g.moved, g.moved_phi, g.moved_theta));
  s.push_back(Action::set_goal(mr, g.receiver, g.receiver_phi, g.receiver_theta));
  s.push_back(Action::set_goal(mp, g.carrier, g.carrier_phi, g.carrier_theta));
  s.push_back(Action::connect({mc, g.moved}, {mr, g.receiver}, g.connect_roll));
  s.push_back(Action::disconnect({mc, ConnectorId::D}, {mp, g.carrier}));
  return s;
}

// ---------------------------------------------------------------------------
// Execution.

namespace detail {

/// Docking admission: the two connector faces must already be in contact
/// (points matching up to the configured gap, outward axes anti-aligned).
/// The roll mismatch about the shared axis is absorbed by the latch.
inline void require_docked(const Assembly& a, const ConnectorRef& x,
                           const ConnectorRef& y, const ReconfigOptions& opt,
                           const std::string& where) {
  auto placed = spanning_transforms(a, false);
  const ModuleNode& nx = a.at(x.module);
  const ModuleNode& ny = a.at(y.module);
  Transform tx = placed.at(x.module), ty = placed.at(y.module);
  Frame fx = dock_frame(nx.state, x.connector, a.L_mm);
  Frame fy = dock_frame(ny.state, y.connector, a.L_mm);
  Vec3 px = tx * fx.origin, py = ty * fy.origin;
  if (std::abs(distance(px, py) - a.dock_gap_mm) > opt.dock_position_tolerance_mm)
    throw InfeasibleError(where + "connector faces are not in contact");
  Vec3 zx = tx.R * fx.z_axis, zy = ty.R * fy.z_axis;
  if (angular_distance_deg(zx, -1.0 * zy) > opt.dock_axis_tolerance_deg)
    throw InfeasibleError(where + "connector axes are not aligned");
}

/// A floating module attached through an output connector adopts that
/// connector as its input. Grounded bases and modules that already hang on
/// something keep their labels.
inline void maybe_relabel_on_connect(Assembly& a, const ConnectorRef& ref) {
  if (ref.connector == ConnectorId::D) return;
  if (a.ground.count(ref.module)) return;
  const ModuleNode& node = a.at(ref.module);
  if (node.links.size() == 1 && !node.connected(ConnectorId::D))
    relabel_module(a, ref.module, ref.connector);
}

/// After a release, a module whose input came free but which still hangs on
/// an output connector re-establishes its labels around that connector (the
/// first of A, B, C when several remain).
inline void maybe_relabel_on_disconnect(Assembly& a, const ModuleId& id) {
  const ModuleNode& node = a.at(id);
  if (node.connected(ConnectorId::D) || node.links.empty()) return;
  relabel_module(a, id, node.links.begin()->first);
}

}  // namespace detail

/// Applies a script to a copy of the assembly, re-checking feasibility at
/// every step, and returns the resulting assembly. Any failure throws and
/// leaves the caller's assembly untouched (the transactional contract).
/// Docking and releasing relabel the moved module as described above; world
/// frames are re-propagated after every action. Loop closure is verified on
/// entry and after the final action — a transient double attachment mid-
/// script may be metrically over-constrained by the roll quantization.
/// `trace`, when given, receives the assembly before the first action and
/// after every action.
inline Assembly execute(const Assembly& input, const ActionScript& script,
                        const ReconfigOptions& opt = {},
                        std::vector<Assembly>* trace = nullptr) {
  opt.validate();
  Assembly a = input;
  detail::refresh_world_frames(a, true);
  if (trace) {
    trace->clear();
    trace->push_back(a);
  }
  for (size_t k = 0; k < script.size(); ++k) {
    const Action& act = script[k];
    std::string where = "action " + std::to_string(k + 1) + ": ";
    switch (act.kind) {
      case Action::Kind::SetConnectorGoal: {
        RotationCheck rc = check_rotation(a, act.a.module, act.a.connector,
                                          act.phi_deg, act.theta_deg, opt);
        if (!rc.ok)
          throw InfeasibleError(where + "rotation target unreachable (" + rc.reason + ")");
        ModuleNode& node = a.at(act.a.module);
        node.state = detail::with_connector(node.state, act.a.connector, act.phi_deg,
                                            act.theta_deg);
        break;
      }
      case Action::Kind::Connect: {
        detail::require_docked(a, act.a, act.b, opt, where);
        a.connect(act.a, act.b, act.roll_deg);
        detail::maybe_relabel_on_connect(a, act.a);
        detail::maybe_relabel_on_connect(a, act.b);
        break;
      }
      case Action::Kind::Disconnect: {
        a.disconnect(act.a, act.b);
        detail::maybe_relabel_on_disconnect(a, act.a.module);
        detail::maybe_relabel_on_disconnect(a, act.b.module);
        break;
      }
    }
    detail::refresh_world_frames(a, false);
    if (trace) trace->push_back(a);
  }
  detail::refresh_world_frames(a, true);
  a.audit();
  return a;
}

// ---------------------------------------------------------------------------
// Demonstration layout.

/// Three-module handover layout: two identical base modules stand on the
/// ground `separation_L` radii apart (2 = docking distance), the moved module
/// hangs on the first base's A connector in a regular-tetrahedron pose. The
/// base pose keeps its B and C connectors away from the transfer meridian, so
/// the whole handover sweep stays feasible; the second base faces the first
/// (yawed 180 degrees), which puts its own A connector on the transfer plane
/// as the natural receiver.
inline Assembly demo_transition_scene(double L_mm = kModuleRadiusMm,
                                      double separation_L = 2.0) {
  Assembly a;
  a.L_mm = L_mm;

  ModuleState base;
  base.phi_A = 75.0;
  base.phi_B = 0.0;
  base.theta_B = 120.0;
  base.phi_C = 30.0;
  base.theta_C = 210.0;

  ModuleState tetra;
  double e = asin_deg(1.0 / 3.0);
  tetra.phi_A = e;
  tetra.phi_B = e;
  tetra.theta_B = 120.0;
  tetra.phi_C = e;
  tetra.theta_C = 240.0;

  a.add("carrier", base, Frame{});
  a.add("receiver", base,
        Frame{{separation_L * L_mm, 0.0, 0.0}, {-1.0, 0.0, 0.0}, {0.0, 0.0, 1.0}});
  a.add("carried", tetra, Frame{});
  a.ground = {"carrier", "receiver"};
  a.connect({"carried", ConnectorId::D}, {"carrier", ConnectorId::A}, 0.0);
  detail::refresh_world_frames(a, true);
  return a;
}

}  // namespace modur
