#pragma once

// Actuation-error plant model, staged PID control of the six linkage angles,
// and the connector trajectory-tracking experiment.
//
// The module is driven by six motors although its pose has only five degrees
// of freedom, so commanded angle vectors are generally inconsistent: the
// plant resolves them by least-squares projection onto the closure manifold
// (the set of angle vectors realizable by an actual pose). Actuation error is
// modeled as a per-linkage offset, fixed for the duration of one
// command-measure-correct session — the physical error source is structural
// deflection, which repeats for a repeated command rather than re-rolling.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "modur/angles.hpp"
#include "modur/errors.hpp"
#include "modur/kinematics.hpp"
#include "modur/rng.hpp"
#include "modur/vec3.hpp"
#include "modur/workspace.hpp"

namespace modur {

enum class ErrorDistribution { kUniform, kConstantBias };
enum class ControlMode { kGlobal, kLocal };

inline const char* to_string(ErrorDistribution d) {
  return d == ErrorDistribution::kUniform ? "uniform" : "constant-bias";
}
inline const char* to_string(ControlMode m) {
  return m == ControlMode::kGlobal ? "global" : "local";
}

/// A point on the unit sphere in elevation/azimuth degrees.
struct SpherePoint {
  double phi = 0.0;
  double theta = 0.0;
};

inline SpherePoint sphere_point_of(const Vec3& v) {
  return {rad_to_deg(std::asin(clamp_to_unit(v.z))),
          wrap_360(rad_to_deg(std::atan2(v.y, v.x)))};
}

// ---------------------------------------------------------------------------
// Configuration types.

struct PlantConfig {
  double delta_e_bound = 9.0;  ///< actuation error bound per linkage, degrees
  ErrorDistribution error_distribution = ErrorDistribution::kUniform;
  double gravity_bias = 5.0;  ///< passive-linkage sag in non-redundant mode
  std::uint64_t seed = 0;
  bool redundant = true;  ///< six motors; otherwise delta_BC is passive

  void validate() const {
    if (!(delta_e_bound >= 0.0))
      throw std::domain_error("actuation error bound must be non-negative");
    if (!(gravity_bias >= 0.0))
      throw std::domain_error("gravity bias must be non-negative");
  }
};

struct PidGains {
  double kp = 1.0;
  double ki = 0.0;
  double kd = 0.0;
  double tolerance_final = 0.5;         ///< degrees, last stage
  double tolerance_intermediate = 2.0;  ///< degrees, loose mode
  int max_iterations = 40;

  void validate() const {
    if (!std::isfinite(kp) || !std::isfinite(ki) || !std::isfinite(kd))
      throw std::domain_error("PID gains must be finite");
    if (!(tolerance_final > 0.0) || !(tolerance_intermediate > 0.0))
      throw std::domain_error("PID tolerances must be positive");
    if (max_iterations < 0)
      throw std::domain_error("iteration limit must be non-negative");
  }
};

struct TrajectorySpec {
  SpherePoint center{30.0, 120.0};
  SpherePoint through{40.0, 160.0};
  int n_points = 50;
  double turns = 2.0;

  void validate() const {
    if (n_points < 2) throw std::domain_error("a trajectory needs at least two points");
    if (!(turns >= 0.0)) throw std::domain_error("winding count must be non-negative");
    Vec3 c = position_vector(center.phi, center.theta);
    Vec3 p = position_vector(through.phi, through.theta);
    if (angular_distance_deg(c, p) < 1e-9)
      throw std::domain_error("trajectory center and through-point coincide");
  }
};

// ---------------------------------------------------------------------------
// Stage planning.

struct HapidPlan {
  int steps = 1;
  std::vector<DeltaVector> stage_goals;  ///< steps entries; last one == target
  DeltaVector origin;
  DeltaVector target;
  DeltaVector delta_total;  ///< target - origin, componentwise
};

namespace detail {

inline void require_in_range(const DeltaVector& d, const char* label) {
  for (int i = 0; i < 6; ++i)
    if (d[i] < kDeltaMinDeg - 1e-9 || d[i] > kDeltaMaxDeg + 1e-9)
      throw InfeasibleError(std::string(label) + " " + DeltaVector::component_name(i) +
                            " = " + std::to_string(d[i]) +
                            " outside the unfold range");
}

inline double max_abs_component(const DeltaVector& d) {
  double m = 0.0;
  for (int i = 0; i < 6; ++i) m = std::max(m, std::abs(d[i]));
  return m;
}

}  // namespace detail

/// Splits the move from `origin` to `target` into equal stages such that no
/// single linkage changes by more than `delta_e` per stage.
inline HapidPlan plan_stages(const DeltaVector& origin, const DeltaVector& target,
                             double delta_e) {
  if (!(delta_e > 0.0))
    throw std::domain_error("stage size bound delta_e must be positive");
  detail::require_in_range(origin, "origin");
  detail::require_in_range(target, "target");
  HapidPlan plan;
  plan.origin = origin;
  plan.target = target;
  for (int i = 0; i < 6; ++i) plan.delta_total[i] = target[i] - origin[i];
  double span = detail::max_abs_component(plan.delta_total);
  plan.steps = std::max(1, static_cast<int>(std::ceil(span / delta_e - 1e-12)));
  plan.stage_goals.reserve(static_cast<size_t>(plan.steps));
  for (int k = 1; k <= plan.steps; ++k) {
    DeltaVector g;
    double f = static_cast<double>(k) / plan.steps;
    for (int i = 0; i < 6; ++i) g[i] = origin[i] + f * plan.delta_total[i];
    plan.stage_goals.push_back(g);
  }
  plan.stage_goals.back() = target;  // land exactly, no accumulation drift
  return plan;
}

// ---------------------------------------------------------------------------
// Plant model.

namespace detail {

inline std::array<double, 5> state_params(const ModuleState& s) {
  return {s.phi_A, s.phi_B, s.theta_B, s.phi_C, s.theta_C};
}

inline ModuleState state_from_params(const std::array<double, 5>& p) {
  ModuleState s;
  s.phi_A = std::clamp(p[0], -89.999, 89.999);
  s.phi_B = std::clamp(p[1], -89.999, 89.999);
  s.theta_B = p[2];
  s.phi_C = std::clamp(p[3], -89.999, 89.999);
  s.theta_C = p[4];
  return s;
}

/// Projects the parameter vector onto the elevation box. The optimizer must
/// keep its iterate inside: a parameter parked beyond the clamp flattens the
/// pose map and blinds the finite-difference Jacobian in that coordinate.
inline std::array<double, 5> box_clamped(const std::array<double, 5>& p) {
  auto q = p;
  q[0] = std::clamp(q[0], -89.999, 89.999);
  q[1] = std::clamp(q[1], -89.999, 89.999);
  q[3] = std::clamp(q[3], -89.999, 89.999);
  return q;
}

/// Solves the 5x5 linear system A x = b by Gaussian elimination with partial
/// pivoting (A in row-major order).
inline std::array<double, 5> solve5(std::array<std::array<double, 5>, 5> A,
                                    std::array<double, 5> b) {
  for (int col = 0; col < 5; ++col) {
    int piv = col;
    for (int r = col + 1; r < 5; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    std::swap(A[col], A[piv]);
    std::swap(b[col], b[piv]);
    double d = A[col][col];
    if (std::abs(d) < 1e-300) throw SingularityError("projection system is singular");
    for (int r = col + 1; r < 5; ++r) {
      double f = A[r][col] / d;
      if (f == 0.0) continue;
      for (int c = col; c < 5; ++c) A[r][c] -= f * A[col][c];
      b[r] -= f * b[col];
    }
  }
  std::array<double, 5> x{};
  for (int r = 4; r >= 0; --r) {
    double acc = b[r];
    for (int c = r + 1; c < 5; ++c) acc -= A[r][c] * x[c];
    x[r] = acc / A[r][r];
  }
  return x;
}

/// Weighted least-squares projection of a six-angle vector onto the closure
/// manifold: finds the pose whose angle vector minimizes
/// sum_i w_i (raw_i - delta_i(pose))^2, Levenberg-Marquardt from `init`.
inline ModuleState project_to_closure(const DeltaVector& raw,
                                      const std::array<double, 6>& weights,
                                      const ModuleState& init) {
  auto residuals = [&](const std::array<double, 5>& p, std::array<double, 6>& r) {
    ModuleState s = state_from_params(p);
    DeltaVector d = inverse_kinematics(s).delta;
    for (int i = 0; i < 6; ++i) r[i] = std::sqrt(weights[i]) * (d[i] - raw[i]);
  };
  auto cost_of = [](const std::array<double, 6>& r) {
    double c = 0.0;
    for (double x : r) c += x * x;
    return c;
  };

  std::array<double, 5> p = box_clamped(state_params(init));
  std::array<double, 6> r;
  residuals(p, r);
  double cost = cost_of(r);
  double mu = 1e-3;
  const double h = 1e-6;
  for (int iter = 0; iter < 200 && cost > 1e-24; ++iter) {
    std::array<std::array<double, 6>, 5> J;  // J[col] = d r / d p[col]
    for (int c = 0; c < 5; ++c) {
      // Central differences: a one-sided probe at the elevation clamp maps
      // onto the boundary itself and would read a spurious zero column.
      auto pp = p, pm = p;
      pp[c] += h;
      pm[c] -= h;
      std::array<double, 6> rp, rm;
      residuals(pp, rp);
      residuals(pm, rm);
      for (int i = 0; i < 6; ++i) J[c][i] = (rp[i] - rm[i]) / (2.0 * h);
    }
    std::array<std::array<double, 5>, 5> A{};
    std::array<double, 5> g{};
    double gnorm = 0.0;
    for (int a = 0; a < 5; ++a) {
      for (int b = a; b < 5; ++b) {
        double acc = 0.0;
        for (int i = 0; i < 6; ++i) acc += J[a][i] * J[b][i];
        A[a][b] = A[b][a] = acc;
      }
      double acc = 0.0;
      for (int i = 0; i < 6; ++i) acc += J[a][i] * r[i];
      g[a] = -acc;
      gnorm = std::max(gnorm, std::abs(acc));
    }
    // First-order optimality: the only trustworthy stop. A small *damped*
    // step says nothing when the damping is large.
    if (gnorm < 1e-10) break;
    bool stepped = false;
    // Enough damping growth that a pure (scaled-down) gradient step is always
    // reached: on a smooth residual that step must reduce the cost, so the
    // loop cannot stall at a point with a nonzero gradient.
    for (int attempt = 0; attempt < 30 && !stepped; ++attempt) {
      auto Ad = A;
      for (int d = 0; d < 5; ++d) Ad[d][d] += mu;
      std::array<double, 5> step{};
      try {
        step = solve5(Ad, g);
      } catch (const SingularityError&) {
        mu *= 10.0;
        continue;
      }
      auto pt = p;
      for (int d = 0; d < 5; ++d) pt[d] += step[d];
      pt = box_clamped(pt);
      std::array<double, 6> rt;
      residuals(pt, rt);
      double ct = cost_of(rt);
      if (ct < cost) {
        p = pt;
        r = rt;
        cost = ct;
        mu = std::max(mu * 0.3, 1e-12);
        stepped = true;
        double sn = 0.0;
        for (double sv : step) sn += sv * sv;
        // A tiny step only means convergence when it was a near-undamped one.
        if (sn < 1e-24 && mu < 1e-6) iter = 200;
      } else {
        mu *= 10.0;
      }
    }
    if (!stepped) break;
  }
  return state_from_params(p);
}

/// Initial pose estimate for the projection: reconstruct from the raw angles
/// directly when possible, otherwise fall back to seeded multistart.
inline ModuleState projection_init(const DeltaVector& raw) {
  DeltaVector clamped = raw;
  for (int i = 0; i < 6; ++i)
    clamped[i] = std::clamp(clamped[i], kDeltaMinDeg, kDeltaMaxDeg);
  FkOptions open;
  open.closure_tolerance_deg = 1e300;
  try {
    return forward_kinematics(clamped, open);
  } catch (const std::exception&) {
  }
  // Multistart fallback: the regular-tetrahedron pose plus a few seeded
  // random poses; pick the one closest to the raw vector.
  ModuleState best;
  best.phi_A = best.phi_B = best.phi_C = 19.47122063449069;
  best.theta_B = 120.0;
  best.theta_C = 240.0;
  auto raw_gap = [&](const ModuleState& s) {
    DeltaVector d = inverse_kinematics(s).delta;
    double acc = 0.0;
    for (int i = 0; i < 6; ++i) acc += (d[i] - raw[i]) * (d[i] - raw[i]);
    return acc;
  };
  double best_gap = raw_gap(best);
  Rng rng(0x9e3779b97f4a7c15ull);
  for (int k = 0; k < 16; ++k) {
    ModuleState s;
    s.phi_A = rng.uniform(-80.0, 80.0);
    s.phi_B = rng.uniform(-80.0, 80.0);
    s.theta_B = rng.uniform(5.0, 175.0);
    s.phi_C = rng.uniform(-80.0, 80.0);
    s.theta_C = rng.uniform(185.0, 355.0);
    double gp = raw_gap(s);
    if (gp < best_gap) {
      best_gap = gp;
      best = s;
    }
  }
  return best;
}

/// Plant response: the equilibrium pose and its actual angle vector.
struct PlantOutcome {
  DeltaVector achieved;
  ModuleState pose;
};

/// One command-measure session of the module: per-linkage actuation offsets
/// are sampled once at construction and reapplied to every command, matching
/// the repeatable structural-deflection error of the hardware. The session is
/// stateful: each equilibrium search starts from the previous pose, the way
/// the physical assembly moves. A six-angle vector cannot tell a pose from
/// its mirror image, so a cold solve of a noisy vector may land on the
/// reflected configuration; continuation from the last pose cannot.
class PlantSession {
 public:
  PlantSession(const PlantConfig& cfg, Rng& rng, std::array<bool, 6> actuated,
               std::optional<ModuleState> initial_pose = std::nullopt)
      : cfg_(cfg), actuated_(actuated), pose_(initial_pose) {
    cfg.validate();
    for (int i = 0; i < 6; ++i) {
      if (!actuated_[i]) continue;
      offsets_[i] = cfg.error_distribution == ErrorDistribution::kUniform
                        ? rng.uniform_pm(cfg.delta_e_bound)
                        : cfg.delta_e_bound;
    }
  }

  const std::array<bool, 6>& actuated() const { return actuated_; }

  /// Equilibrium for a commanded angle vector: offsets applied to actuated
  /// linkages, the passive linkage (non-redundant mode) set to its closure
  /// value plus gravity sag, and the result projected onto the closure
  /// manifold with unit weights.
  PlantOutcome respond(const DeltaVector& commanded) {
    detail::require_in_range(commanded, "commanded");
    DeltaVector raw = commanded;
    for (int i = 0; i < 6; ++i)
      if (actuated_[i])
        raw[i] = std::clamp(commanded[i] + offsets_[i], kDeltaMinDeg, kDeltaMaxDeg);
    ModuleState init = pose_ ? *pose_ : projection_init(raw);
    if (!cfg_.redundant) {
      // Five driven linkages define the pose; the passive one physically sags
      // below its closure value before the assembly re-equilibrates. The
      // closure value comes from fitting the five driven angles exactly
      // (zero weight frees the passive one).
      std::array<double, 6> five;
      five.fill(1.0);
      five[DeltaVector::kBC] = 0.0;
      ModuleState closure_pose = detail::project_to_closure(raw, five, init);
      raw.bc() = std::clamp(inverse_kinematics(closure_pose).delta.bc() +
                                cfg_.gravity_bias,
                            kDeltaMinDeg, kDeltaMaxDeg);
      init = closure_pose;
    }
    std::array<double, 6> weights;
    weights.fill(1.0);
    ModuleState projected = detail::project_to_closure(raw, weights, init);
    pose_ = projected;
    return {inverse_kinematics(projected).delta, projected};
  }

 private:
  PlantConfig cfg_;
  std::array<bool, 6> actuated_{};
  std::array<double, 6> offsets_{};
  std::optional<ModuleState> pose_;
};

inline std::array<bool, 6> default_actuated(const PlantConfig& cfg) {
  std::array<bool, 6> m;
  m.fill(true);
  if (!cfg.redundant) m[DeltaVector::kBC] = false;
  return m;
}

}  // namespace detail

/// One-shot plant evaluation: a fresh error sample (from `rng` if given, else
/// from a generator seeded with config.seed) applied to one command.
inline DeltaVector simulate_plant(const DeltaVector& commanded,
                                  const PlantConfig& config, Rng* rng = nullptr) {
  Rng local(config.seed);
  detail::PlantSession session(config, rng ? *rng : local,
                               detail::default_actuated(config));
  return session.respond(commanded).achieved;
}

// ---------------------------------------------------------------------------
// PID convergence.

struct PidResult {
  DeltaVector achieved;
  int iterations = 0;
  bool converged = false;
  double final_error_deg = 0.0;  ///< max error over driven linkages at stop
};

namespace detail {

/// Max goal error over the driven linkages only: a passive linkage cannot be
/// servoed, so it does not gate convergence.
inline double driven_error(const DeltaVector& goal, const DeltaVector& achieved,
                           const std::array<bool, 6>& actuated) {
  double m = 0.0;
  for (int i = 0; i < 6; ++i)
    if (actuated[i]) m = std::max(m, std::abs(goal[i] - achieved[i]));
  return m;
}

/// Six decoupled incremental PID loops around one plant session. When
/// `pose_out` is given it receives the equilibrium pose of the last plant
/// response (untouched if no iteration ran).
inline PidResult pid_session(const DeltaVector& goal, const PidGains& gains,
                             PlantSession& plant, double tolerance,
                             const DeltaVector& start,
                             ModuleState* pose_out = nullptr) {
  PidResult res;
  res.achieved = start;
  res.final_error_deg = driven_error(goal, start, plant.actuated());
  if (gains.max_iterations == 0) return res;  // flagged non-converged

  DeltaVector command = goal;  // feed-forward first command
  std::array<double, 6> integral{}, prev_err{};
  bool have_prev = false;
  for (int iter = 1; iter <= gains.max_iterations; ++iter) {
    DeltaVector clamped = command;
    for (int i = 0; i < 6; ++i)
      clamped[i] = std::clamp(clamped[i], kDeltaMinDeg, kDeltaMaxDeg);
    PlantOutcome out = plant.respond(clamped);
    res.achieved = out.achieved;
    if (pose_out) *pose_out = out.pose;
    res.iterations = iter;
    res.final_error_deg = driven_error(goal, out.achieved, plant.actuated());
    if (res.final_error_deg <= tolerance) {
      res.converged = true;
      return res;
    }
    for (int i = 0; i < 6; ++i) {
      if (!plant.actuated()[i]) continue;
      double e = goal[i] - out.achieved[i];
      integral[i] += e;
      double deriv = have_prev ? e - prev_err[i] : 0.0;
      command[i] += gains.kp * e + gains.ki * integral[i] + gains.kd * deriv;
      prev_err[i] = e;
    }
    have_prev = true;
  }
  return res;
}

}  // namespace detail

/// Command-measure-correct loop toward `goal`. `loose` selects the
/// intermediate tolerance (used for every stage except the last). `origin` is
/// the angle vector before the motion (defaults to the goal itself);
/// non-convergence is reported in the result, not thrown.
inline PidResult pid_converge(const DeltaVector& goal, const PidGains& gains,
                              const PlantConfig& plant, bool loose,
                              const std::optional<DeltaVector>& origin = std::nullopt,
                              Rng* rng = nullptr) {
  gains.validate();
  plant.validate();
  detail::require_in_range(goal, "goal");
  Rng local(plant.seed);
  detail::PlantSession session(plant, rng ? *rng : local,
                               detail::default_actuated(plant));
  double tol = loose ? gains.tolerance_intermediate : gains.tolerance_final;
  return detail::pid_session(goal, gains, session, tol, origin.value_or(goal));
}

// ---------------------------------------------------------------------------
// Trajectory generation and tracking.

/// Spiral of `n_points` poses for one connector, wound about `center`: the
/// angular radius shrinks linearly from the center-to-through distance to
/// zero across `turns` windings (turns = 0 degenerates to the circle through
/// the through-point). The first point is the through-point itself.
inline std::vector<SpherePoint> helix_trajectory(const TrajectorySpec& spec) {
  spec.validate();
  Vec3 c = position_vector(spec.center.phi, spec.center.theta);
  Vec3 p0 = position_vector(spec.through.phi, spec.through.theta);
  double r0 = angular_distance_deg(c, p0);
  Vec3 e1 = tangent_toward(c, p0);
  Vec3 e2 = cross(c, e1);
  std::vector<SpherePoint> pts;
  pts.reserve(static_cast<size_t>(spec.n_points));
  for (int k = 0; k < spec.n_points; ++k) {
    double u = static_cast<double>(k) / (spec.n_points - 1);
    double rho = spec.turns > 0.0 ? r0 * (1.0 - u) : r0;
    double psi = 360.0 * (spec.turns > 0.0 ? spec.turns : 1.0) * u;
    Vec3 dir = e1 * cos_deg(psi) + e2 * sin_deg(psi);
    Vec3 v = c * cos_deg(rho) + dir * sin_deg(rho);
    pts.push_back(sphere_point_of(v));
  }
  return pts;
}

struct PointResult {
  SpherePoint designed;
  SpherePoint achieved;
  double error_deg = 0.0;  ///< great-circle distance designed vs achieved
  int iterations = 0;      ///< plant evaluations spent on this point
  bool converged = false;
  DeltaVector target_deltas;
};

struct RmseReport {
  double rmse_vs_design = 0.0;  ///< degrees
  std::vector<PointResult> per_point;
  ControlMode controller_mode = ControlMode::kGlobal;
  bool redundant = true;
};

/// Default base placement for the tracking experiment: A and B parked so that
/// along the whole default helix every pair angle keeps the largest possible
/// distance from the travel limits (about 7 degrees) while the pose stays
/// feasible and on the principal labeling branch. The margin matters: a
/// linkage whose target sits closer to a stop than the actuation play can
/// become uncommandable (the compensating command would have to cross the
/// stop).
inline constexpr double kTrackBasePhiA = 32.0;
inline constexpr SpherePoint kTrackBaseB{-23.0, 40.0};

namespace detail {

inline ModuleState tracking_state(double base_phi_A, const SpherePoint& base_B,
                                  const SpherePoint& c) {
  ModuleState s;
  s.phi_A = base_phi_A;
  s.phi_B = base_B.phi;
  s.theta_B = base_B.theta;
  s.phi_C = c.phi;
  s.theta_C = c.theta;
  return s;
}

/// The plant output used as the next stage's planning origin: actual angles
/// can sit a hair outside the travel range after projection, but a plan must
/// start from commandable values, so they read as if at the hard stops.
inline DeltaVector clamped_to_range(const DeltaVector& d) {
  DeltaVector out = d;
  for (int i = 0; i < 6; ++i)
    out[i] = std::clamp(out[i], kDeltaMinDeg, kDeltaMaxDeg);
  return out;
}

}  // namespace detail

/// Runs the tracking experiment: for every trajectory point, solve the target
/// angles, split the move into stages, converge each stage with PID (loose
/// tolerance except the last stage), and record the achieved connector C
/// position. RMSE is the root-mean-square great-circle deviation.
inline RmseReport track_trajectory(const TrajectorySpec& spec, const PidGains& gains,
                                   const PlantConfig& plant, ControlMode mode,
                                   double base_phi_A = kTrackBasePhiA,
                                   const SpherePoint& base_B = kTrackBaseB) {
  gains.validate();
  plant.validate();
  auto points = helix_trajectory(spec);
  FeasibilityConfig wcfg;

  std::vector<DeltaVector> targets;
  targets.reserve(points.size());
  for (size_t k = 0; k < points.size(); ++k) {
    ModuleState s = detail::tracking_state(base_phi_A, base_B, points[k]);
    if (!feasible(s, wcfg))
      throw InfeasibleError("trajectory point " + std::to_string(k) + " at (" +
                            std::to_string(points[k].phi) + ", " +
                            std::to_string(points[k].theta) +
                            ") is not feasible for connector C");
    targets.push_back(inverse_kinematics(s).delta);
  }

  // The staged decomposition uses the known error bound; a noiseless plant
  // needs no staging at all.
  double stage_bound = plant.delta_e_bound > 0.0 ? plant.delta_e_bound : 360.0;
  std::array<bool, 6> global_mask = detail::default_actuated(plant);
  std::array<bool, 6> local_mask{};
  local_mask[DeltaVector::kAC] = true;
  local_mask[DeltaVector::kCD] = true;
  local_mask[DeltaVector::kBC] = plant.redundant;

  RmseReport report;
  report.controller_mode = mode;
  report.redundant = plant.redundant;
  report.per_point.reserve(points.size());

  Rng rng(plant.seed);
  DeltaVector current = targets.front();
  ModuleState current_pose =
      detail::tracking_state(base_phi_A, base_B, points.front());
  double sq_sum = 0.0;
  for (size_t k = 0; k < points.size(); ++k) {
    PointResult pr;
    pr.designed = points[k];
    pr.target_deltas = targets[k];
    if (mode == ControlMode::kLocal) {
      // Only the three linkages incident to C are driven; the rest are held.
      detail::PlantSession session(plant, rng, local_mask, current_pose);
      double tol = gains.tolerance_final;
      PidResult r = detail::pid_session(targets[k], gains, session, tol, current,
                                        &current_pose);
      pr.iterations = r.iterations;
      pr.converged = r.converged;
      current = r.achieved;
    } else {
      HapidPlan plan =
          plan_stages(detail::clamped_to_range(current), targets[k], stage_bound);
      bool all_ok = true;
      int iters = 0;
      for (int j = 0; j < plan.steps; ++j) {
        bool last = j + 1 == plan.steps;
        detail::PlantSession session(plant, rng, global_mask, current_pose);
        double tol = last ? gains.tolerance_final : gains.tolerance_intermediate;
        PidResult r =
            detail::pid_session(plan.stage_goals[static_cast<size_t>(j)], gains,
                                session, tol, current, &current_pose);
        iters += r.iterations;
        all_ok = all_ok && r.converged;
        current = r.achieved;
      }
      pr.iterations = iters;
      pr.converged = all_ok;
    }
    pr.achieved = {current_pose.phi_C, current_pose.theta_C};
    Vec3 want = position_vector(pr.designed.phi, pr.designed.theta);
    Vec3 got = position_vector(pr.achieved.phi, pr.achieved.theta);
    pr.error_deg = angular_distance_deg(want, got);
    sq_sum += pr.error_deg * pr.error_deg;
    report.per_point.push_back(pr);
  }
  report.rmse_vs_design = std::sqrt(sq_sum / static_cast<double>(points.size()));
  return report;
}

/// Single-connector control: with A, B, D held, the mechanism reduces to a
/// 3-RPR spherical linkage driven by the three C-incident linkages. Moves C
/// from its pose in `base` to `target_C` and reports the achieved position.
inline PointResult local_control(const SpherePoint& target_C, const PidGains& gains,
                                 const PlantConfig& plant, const ModuleState& base,
                                 Rng* rng = nullptr) {
  gains.validate();
  plant.validate();
  FeasibilityConfig wcfg;
  ModuleState target_state = base;
  target_state.phi_C = target_C.phi;
  target_state.theta_C = target_C.theta;
  if (!feasible(target_state, wcfg))
    throw InfeasibleError("target (" + std::to_string(target_C.phi) + ", " +
                          std::to_string(target_C.theta) +
                          ") is outside connector C's workspace");

  std::array<bool, 6> mask{};
  mask[DeltaVector::kAC] = true;
  mask[DeltaVector::kCD] = true;
  mask[DeltaVector::kBC] = plant.redundant;

  Rng local(plant.seed);
  detail::PlantSession session(plant, rng ? *rng : local, mask, base);
  DeltaVector target = inverse_kinematics(target_state).delta;
  DeltaVector start = inverse_kinematics(base).delta;
  ModuleState pose = base;
  PidResult r = detail::pid_session(target, gains, session,
                                    gains.tolerance_final, start, &pose);

  PointResult pr;
  pr.designed = target_C;
  pr.target_deltas = target;
  pr.iterations = r.iterations;
  pr.converged = r.converged;
  pr.achieved = {pose.phi_C, pose.theta_C};
  Vec3 want = position_vector(target_C.phi, target_C.theta);
  Vec3 got = position_vector(pr.achieved.phi, pr.achieved.theta);
  pr.error_deg = angular_distance_deg(want, got);
  return pr;
}

}  // namespace modur
