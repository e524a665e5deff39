#pragma once

// Planar scissor-linkage-group (SLG) synthesis: from the collision-avoidance
// inputs to rod length, overall radius and connector radius, plus the
// sensor-angle correction and an invariant checker.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "modur/angles.hpp"

namespace modur::slg {

/// Inputs of the planar synthesis. Angles in degrees, lengths in mm.
struct DesignInput {
  double delta_min = 60.0;  ///< minimum unfold angle
  double alpha = 20.0;      ///< edge-rod deflection
  double r = 3.0;           ///< hinge-hole radius
  double w = 9.0;           ///< rod width
  double lambda = 7.0;      ///< interference adjustment length
  // Recorded-only parameters; no equation consumes them.
  double kappa = 0.0;  ///< lever-arm adjustment factor
  double zeta = 0.0;   ///< drive-rod length
  double l_dk = 0.0;   ///< gap between two connected connectors
};

/// Synthesized SLG geometry.
struct Design {
  DesignInput input;
  double delta_col = 0.0;  ///< unfold angle at first collision interference
  double l = 0.0;          ///< rod length (integer-mm floor applied)
  double L = 0.0;          ///< overall SLG radius
  double R = 0.0;          ///< connector radius
  double kappa = 0.0;
  double zeta = 0.0;
  double l_dk = 0.0;
};

/// Unfold angle at which rod collision interference occurs.
inline double collision_angle(double delta_min_deg, double alpha_deg) {
  double col = delta_min_deg - 2.0 * alpha_deg;
  if (col <= 0.0) throw std::domain_error("collision angle non-positive");
  return col;
}

/// Rod length: integer-millimeter floor of the hinge clearance quotient, then
/// the interference adjustment is added.
inline double rod_length(double delta_col_deg, double r_mm, double w_mm,
                         double lambda_mm) {
  double s = sin_deg(delta_col_deg / 2.0);
  if (s <= 0.0) throw std::domain_error("rod length undefined: sin(delta_col/2) <= 0");
  return std::floor((r_mm + w_mm / 2.0) / (2.0 * s)) + lambda_mm;
}

/// Overall SLG radius for a rod of length l at edge deflection alpha.
inline double overall_radius(double l_mm, double alpha_deg) {
  return l_mm * (1.0 + cos_deg(alpha_deg) + cos_deg(2.0 * alpha_deg));
}

/// Connector radius for a rod of length l at edge deflection alpha and rod
/// width w.
inline double connector_radius(double l_mm, double alpha_deg, double w_mm) {
  return l_mm * (sin_deg(alpha_deg) + sin_deg(2.0 * alpha_deg)) - w_mm / 2.0;
}

/// Maps a sensor-measured unfold angle to the actual one: the structural
/// deflection contributes 2*alpha and the play of the linkage delta_e.
inline double sensor_to_actual(double delta_s_deg, double alpha_deg,
                               double delta_e_deg) {
  return delta_s_deg + 2.0 * alpha_deg + delta_e_deg;
}

/// Full synthesis from validated inputs.
inline Design synthesize(const DesignInput& in) {
  if (!(in.delta_min > 0.0 && in.delta_min < 180.0))
    throw std::domain_error("delta_min must lie in (0, 180)");
  if (!(in.alpha >= 0.0 && in.alpha < in.delta_min / 2.0))
    throw std::domain_error("alpha must lie in [0, delta_min/2)");
  if (!(in.r > 0.0 && in.w > 0.0 && in.lambda > 0.0))
    throw std::domain_error("r, w and lambda must be positive");
  Design d;
  d.input = in;
  d.delta_col = collision_angle(in.delta_min, in.alpha);
  d.l = rod_length(d.delta_col, in.r, in.w, in.lambda);
  d.L = overall_radius(d.l, in.alpha);
  d.R = connector_radius(d.l, in.alpha, in.w);
  d.kappa = in.kappa;
  d.zeta = in.zeta;
  d.l_dk = in.l_dk;
  return d;
}

/// Invariant report; empty means the design is sound and the full working
/// unfold range [60, 180] degrees is achievable.
inline std::vector<std::string> validate(const Design& d) {
  std::vector<std::string> report;
  if (d.delta_col <= 0.0) report.push_back("collision angle non-positive");
  if (d.delta_col != d.input.delta_min - 2.0 * d.input.alpha)
    report.push_back("collision angle inconsistent with delta_min - 2*alpha");
  if (d.l <= 0.0) report.push_back("non-positive rod length");
  if (d.L <= 0.0) report.push_back("non-positive overall radius");
  if (d.R <= 0.0) report.push_back("non-positive connector radius");
  if (d.input.delta_min > 180.0) report.push_back("empty unfold range");
  if (d.input.delta_min > 60.0)
    report.push_back("unfold range does not cover [60, 180] degrees");
  return report;
}

/// Reference hardware parameter set (the shipped prototype's values). These
/// are recorded constants, intentionally distinct from what synthesize()
/// returns for the same inputs; validate() never compares the two.
inline const Design reference_design = [] {
  Design d;
  d.input = {60.0, 20.0, 3.0, 9.0, 7.0, 0.38, 31.0, 8.0};
  d.delta_col = 20.0;
  d.l = 31.0;
  d.L = 98.26;
  d.R = 16.7;
  d.kappa = 0.38;
  d.zeta = 31.0;
  d.l_dk = 8.0;
  return d;
}();

}  // namespace modur::slg
