#pragma once

// Latitude/longitude cell grid over (part of) the unit sphere, with exact
// solid-angle weights normalized against the full sphere. Weights of a
// full-sphere grid therefore sum to 1; a sub-region grid sums to the
// fraction of the sphere it covers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "modur/angles.hpp"
#include "modur/vec3.hpp"

namespace modur {

struct SphericalGrid {
  double phi_min = -90.0, phi_max = 90.0;
  double theta_min = 0.0, theta_max = 360.0;
  int n_phi = 0, n_theta = 0;
  double phi_step = 0.0, theta_step = 0.0;
  std::vector<std::uint8_t> flags;   ///< per-cell feasibility, row-major in phi
  std::vector<double> weights;       ///< per-cell solid angle / (4 pi)

  /// Grid over a latitude/longitude box. Steps are adjusted to the nearest
  /// exact divisor of each extent.
  static SphericalGrid band(double phi_lo, double phi_hi, double theta_lo,
                            double theta_hi, double phi_step_deg,
                            double theta_step_deg) {
    if (!(phi_hi > phi_lo) || !(theta_hi > theta_lo))
      throw std::domain_error("grid extents must be non-empty");
    if (!(phi_step_deg > 0.0) || !(theta_step_deg > 0.0))
      throw std::domain_error("grid steps must be positive");
    SphericalGrid g;
    g.phi_min = phi_lo;
    g.phi_max = phi_hi;
    g.theta_min = theta_lo;
    g.theta_max = theta_hi;
    g.n_phi = std::max(1, static_cast<int>(std::lround((phi_hi - phi_lo) / phi_step_deg)));
    g.n_theta =
        std::max(1, static_cast<int>(std::lround((theta_hi - theta_lo) / theta_step_deg)));
    g.phi_step = (phi_hi - phi_lo) / g.n_phi;
    g.theta_step = (theta_hi - theta_lo) / g.n_theta;
    g.flags.assign(static_cast<size_t>(g.n_phi) * g.n_theta, 0);
    g.weights.resize(g.flags.size());
    for (int i = 0; i < g.n_phi; ++i) {
      double lo = sin_deg(phi_lo + i * g.phi_step);
      double hi = sin_deg(phi_lo + (i + 1) * g.phi_step);
      double w = deg_to_rad(g.theta_step) * (hi - lo) / (4.0 * kPi);
      for (int j = 0; j < g.n_theta; ++j) g.weights[g.index(i, j)] = w;
    }
    return g;
  }

  static SphericalGrid full_sphere(double phi_step_deg, double theta_step_deg) {
    return band(-90.0, 90.0, 0.0, 360.0, phi_step_deg, theta_step_deg);
  }

  size_t index(int i_phi, int i_theta) const {
    return static_cast<size_t>(i_phi) * n_theta + i_theta;
  }

  double phi_center(int i_phi) const { return phi_min + (i_phi + 0.5) * phi_step; }
  double theta_center(int i_theta) const {
    return theta_min + (i_theta + 0.5) * theta_step;
  }

  bool at(int i_phi, int i_theta) const { return flags[index(i_phi, i_theta)] != 0; }
  void set(int i_phi, int i_theta, bool v) {
    flags[index(i_phi, i_theta)] = v ? 1 : 0;
  }

  void clear_flags() { std::fill(flags.begin(), flags.end(), 0); }

  size_t cell_count() const { return flags.size(); }

  /// Sum of weights (covered fraction of the sphere): 1 for full-sphere grids.
  double total_weight() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }

  /// Area-weighted fraction of the full sphere currently flagged feasible.
  double feasible_fraction() const {
    double s = 0.0;
    for (size_t k = 0; k < flags.size(); ++k)
      if (flags[k]) s += weights[k];
    return s;
  }

  /// True when the two grids partition the same box the same way (flags may
  /// differ).
  bool same_layout(const SphericalGrid& o) const {
    return n_phi == o.n_phi && n_theta == o.n_theta && phi_min == o.phi_min &&
           phi_max == o.phi_max && theta_min == o.theta_min && theta_max == o.theta_max;
  }
};

}  // namespace modur
