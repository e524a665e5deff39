#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "modur/workspace.hpp"
#include "oracles.hpp"
#include "random_states.hpp"

using namespace modur;
using Catch::Approx;

namespace {

ModuleState make_state(double pa, double pb, double tb, double pc, double tc) {
  ModuleState s;
  s.phi_A = pa;
  s.phi_B = pb;
  s.theta_B = tb;
  s.phi_C = pc;
  s.theta_C = tc;
  return s;
}

ModuleState tetra_state() {
  return make_state(19.47122063449069, 19.47122063449069, 120.0,
                    19.47122063449069, 240.0);
}

// Pose whose B-C linkage arc sags across the A-D meridian arc; every pair
// angle stays inside the working range.
ModuleState crossing_state() { return make_state(-28.0, -25.0, 70.0, -25.0, 290.0); }

/// Reflection across the plane of the A-D linkage (swap B and C labels and
/// negate azimuths).
ModuleState mirrored(const ModuleState& s) {
  return make_state(s.phi_A, s.phi_C, wrap_360(-s.theta_C), s.phi_B,
                    wrap_360(-s.theta_B));
}

bool closed_form_any_pair_crosses(const ModuleState& s) {
  Vec3 A = connector_position(s, ConnectorId::A);
  Vec3 B = connector_position(s, ConnectorId::B);
  Vec3 C = connector_position(s, ConnectorId::C);
  Vec3 D = connector_position(s, ConnectorId::D);
  return oracles::arcs_cross(A, B, C, D) || oracles::arcs_cross(A, C, B, D) ||
         oracles::arcs_cross(A, D, B, C);
}

}  // namespace

TEST_CASE("spherical grid weights") {
  for (double step : {5.0, 3.0, 10.0}) {
    SphericalGrid g = SphericalGrid::full_sphere(step, step);
    CHECK(g.total_weight() == Approx(1.0).margin(1e-6));
  }
  SECTION("band grids carry the covered fraction") {
    CHECK(SphericalGrid::band(0, 90, 0, 360, 5, 5).total_weight() ==
          Approx(0.5).margin(1e-9));
    CHECK(SphericalGrid::band(-90, 90, 180, 360, 5, 5).total_weight() ==
          Approx(0.5).margin(1e-9));
    CHECK(SphericalGrid::band(-30, 90, 0, 360, 5, 5).total_weight() ==
          Approx(0.75).margin(1e-9));  // (sin 90 - sin -30) / 2
  }
  SECTION("cell geometry") {
    SphericalGrid g = SphericalGrid::band(-30, 90, 180, 360, 5, 5);
    CHECK(g.n_phi == 24);
    CHECK(g.n_theta == 36);
    CHECK(g.phi_center(0) == Approx(-27.5));
    CHECK(g.theta_center(0) == Approx(182.5));
    CHECK(g.same_layout(SphericalGrid::band(-30, 90, 180, 360, 5, 5)));
    CHECK_FALSE(g.same_layout(SphericalGrid::band(-30, 90, 180, 360, 5, 10)));
  }
  SECTION("invalid construction") {
    CHECK_THROWS_AS(SphericalGrid::band(10, 10, 0, 360, 5, 5), std::domain_error);
    CHECK_THROWS_AS(SphericalGrid::band(0, 90, 0, 360, -1, 5), std::domain_error);
  }
}

TEST_CASE("ray-triangle intersection basics") {
  std::array<Vec3, 3> tri = {Vec3{-1, -1, 0}, Vec3{1, -1, 0}, Vec3{0, 1, 0}};
  auto hit = moller_trumbore(Vec3{0, 0, -1}, Vec3{0, 0, 1}, tri);
  REQUIRE(hit.has_value());
  CHECK(hit->t == Approx(1.0).margin(1e-12));
  CHECK(hit->u == Approx(0.25).margin(1e-12));
  CHECK(hit->v == Approx(0.5).margin(1e-12));

  CHECK_FALSE(moller_trumbore(Vec3{0, 0, -1}, Vec3{0, 0, -1}, tri).has_value());
  // Ray parallel to the triangle plane: determinant cutoff.
  CHECK_FALSE(moller_trumbore(Vec3{0, 0, 1}, Vec3{1, 0, 0}, tri).has_value());
}

TEST_CASE("ray-triangle agrees with the plane + barycentric oracle") {
  Rng rng(11);
  int checked = 0, disagreements = 0, guard = 0;
  while (checked < 10000 && ++guard < 400000) {
    Vec3 orig{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    Vec3 dir{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    if (norm(dir) < 1e-3) continue;
    std::array<Vec3, 3> tri;
    for (auto& v : tri)
      v = Vec3{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    Vec3 n = cross(tri[1] - tri[0], tri[2] - tri[0]);
    if (norm(n) < 1e-3) continue;
    // Marginal configurations (near-parallel ray, origin on the plane, hit on
    // the triangle boundary) may legitimately flip either way; exclude them.
    if (std::abs(dot(n, dir)) < 1e-6) continue;
    auto mt = moller_trumbore(orig, dir, tri, 1e-9);
    auto pb = oracles::ray_triangle_oracle(orig, dir, tri[0], tri[1], tri[2]);
    if ((mt && mt->t < 1e-6) || (pb && *pb < 1e-6)) continue;
    Vec3 cen = (tri[0] + tri[1] + tri[2]) * (1.0 / 3.0);
    std::array<Vec3, 3> shrunk, grown;
    for (int k = 0; k < 3; ++k) {
      shrunk[k] = cen + (tri[k] - cen) * (1.0 - 1e-5);
      grown[k] = cen + (tri[k] - cen) * (1.0 + 1e-5);
    }
    auto o_in = oracles::ray_triangle_oracle(orig, dir, shrunk[0], shrunk[1], shrunk[2]);
    auto o_out = oracles::ray_triangle_oracle(orig, dir, grown[0], grown[1], grown[2]);
    if (o_in.has_value() != o_out.has_value()) continue;

    ++checked;
    if (mt.has_value() != pb.has_value())
      ++disagreements;
    else if (mt && std::abs(mt->t - *pb) > 1e-7 * std::max(1.0, std::abs(*pb)))
      ++disagreements;
  }
  REQUIRE(checked == 10000);
  CHECK(disagreements == 0);
}

TEST_CASE("opposite linkage interference on the reference poses") {
  FeasibilityConfig cfg;
  SECTION("regular tetrahedron has no interference") {
    CHECK_FALSE(opposite_slg_intersect(tetra_state(), cfg));
    CHECK_FALSE(closed_form_any_pair_crosses(tetra_state()));
    // Dense brute-force pass over the same pairs.
    ModuleState s = tetra_state();
    Vec3 A = connector_position(s, ConnectorId::A);
    Vec3 B = connector_position(s, ConnectorId::B);
    Vec3 C = connector_position(s, ConnectorId::C);
    Vec3 D = connector_position(s, ConnectorId::D);
    CHECK_FALSE(oracles::arcs_cross_dense(A, B, C, D, 256));
    CHECK_FALSE(oracles::arcs_cross_dense(A, C, B, D, 256));
    CHECK_FALSE(oracles::arcs_cross_dense(A, D, B, C, 256));
  }
  SECTION("constructed pose with the B-C arc sagging across A-D") {
    ModuleState s = crossing_state();
    // All six pair angles are inside the working range...
    CHECK(inverse_kinematics(s).feasible());
    // ...yet the opposite pair (AD, BC) crosses.
    CHECK(opposite_slg_intersect(s, cfg));
    Vec3 A = connector_position(s, ConnectorId::A);
    Vec3 B = connector_position(s, ConnectorId::B);
    Vec3 C = connector_position(s, ConnectorId::C);
    Vec3 D = connector_position(s, ConnectorId::D);
    CHECK(oracles::arcs_cross(A, D, B, C));
    CHECK(oracles::arcs_cross_dense(A, D, B, C, 256));
    CHECK_FALSE(feasible(s, cfg));
  }
  SECTION("C antipodal to its tetrahedral position does not cross") {
    // Moving C to the antipode keeps every opposite pair disjoint (the
    // closed-form oracle confirms); the interference test must agree.
    ModuleState s = tetra_state();
    s.phi_C = -s.phi_C;
    s.theta_C = wrap_360(s.theta_C - 180.0);
    CHECK(opposite_slg_intersect(s, cfg) == closed_form_any_pair_crosses(s));
    CHECK_FALSE(opposite_slg_intersect(s, cfg));
  }
}

TEST_CASE("interference test agrees with the closed-form arc-crossing oracle") {
  FeasibilityConfig cfg;
  Rng rng(909);
  int n = 10000, disagreements = 0;
  for (int i = 0; i < n; ++i) {
    ModuleState s = test_support::random_valid_state(rng);
    bool impl = opposite_slg_intersect(s, cfg);
    bool oracle = closed_form_any_pair_crosses(s);
    if (impl != oracle) {
      ++disagreements;
      // Any disagreement must be a grazing configuration: within a loosened
      // tolerance the arcs do (nearly) touch.
      Vec3 A = connector_position(s, ConnectorId::A);
      Vec3 B = connector_position(s, ConnectorId::B);
      Vec3 C = connector_position(s, ConnectorId::C);
      Vec3 D = connector_position(s, ConnectorId::D);
      bool near = oracles::arcs_cross(A, B, C, D, 0.2) ||
                  oracles::arcs_cross(A, C, B, D, 0.2) ||
                  oracles::arcs_cross(A, D, B, C, 0.2);
      CHECK(near);
    }
  }
  CHECK(disagreements <= n / 1000);  // >= 99.9% agreement
}

TEST_CASE("pose feasibility") {
  FeasibilityConfig cfg;
  CHECK(feasible(tetra_state(), cfg));
  CHECK_FALSE(feasible(crossing_state(), cfg));

  SECTION("angle-range violation") {
    ModuleState s = make_state(0, 0, 50, 0, 180);  // delta_AB = 50
    CHECK_FALSE(feasible(s, cfg));
  }
  SECTION("the A arc spans exactly [-30, 90]") {
    ModuleState low = make_state(-31, 25, 90, 25, 270);
    CHECK_FALSE(feasible(low, cfg));  // delta_AD = 59
    ModuleState edge = make_state(-30, 25, 90, 25, 270);
    CHECK_FALSE(closed_form_any_pair_crosses(edge));
    CHECK(feasible(edge, cfg));  // boundary inclusive
  }
  SECTION("clearance knob tightens the lower bound") {
    FeasibilityConfig tight = cfg;
    tight.min_clearance = 115.0;
    CHECK_FALSE(feasible(tetra_state(), tight));  // 109.47 < 115
    tight.min_clearance = 100.0;
    CHECK(feasible(tetra_state(), tight));
  }
  SECTION("config validation") {
    FeasibilityConfig bad = cfg;
    bad.delta_range = {0.0, 180.0};
    CHECK_THROWS_AS(feasible(tetra_state(), bad), std::domain_error);
    bad = cfg;
    bad.delta_range = {90.0, 60.0};
    CHECK_THROWS_AS(feasible(tetra_state(), bad), std::domain_error);
    bad = cfg;
    bad.arc_samples = 1;
    CHECK_THROWS_AS(feasible(tetra_state(), bad), std::domain_error);
  }
}

TEST_CASE("feasibility is invariant under the mirror symmetry") {
  FeasibilityConfig cfg;
  Rng rng(808);
  for (int i = 0; i < 1000; ++i) {
    // Raw uniform poses: most are infeasible, which must mirror too.
    ModuleState s = make_state(rng.uniform(-90, 90), rng.uniform(-90, 90),
                               rng.uniform(0, 360), rng.uniform(-90, 90),
                               rng.uniform(0, 360));
    CHECK(feasible(s, cfg) == feasible(mirrored(s), cfg));
  }
  for (int i = 0; i < 300; ++i) {
    ModuleState s = test_support::random_valid_state(rng);
    CHECK(feasible(s, cfg) == feasible(mirrored(s), cfg));
  }
}

TEST_CASE("single-placement C workspace") {
  FeasibilityConfig cfg;
  SECTION("infeasible A-B placement yields an empty workspace") {
    SphericalGrid g = SphericalGrid::full_sphere(15, 15);
    CWorkspace w = workspace_of_C(0.0, 10.0, 0.0, g, cfg);  // delta_AB = 10
    CHECK(w.ws == 0.0);
    CHECK(w.grid.feasible_fraction() == 0.0);
  }
  SECTION("interference constraint only shrinks the workspace") {
    SphericalGrid g = SphericalGrid::full_sphere(10, 10);
    FeasibilityConfig no3 = cfg;
    no3.check_opposite_intersect = false;
    CWorkspace with3 = workspace_of_C(19.47, 19.47, 120.0, g, cfg);
    CWorkspace without3 = workspace_of_C(19.47, 19.47, 120.0, g, no3);
    CHECK(with3.ws <= without3.ws);
    for (size_t k = 0; k < g.cell_count(); ++k)
      CHECK(with3.grid.flags[k] <= without3.grid.flags[k]);
  }
  SECTION("workspace grows monotonically with the angle range") {
    SphericalGrid g = SphericalGrid::full_sphere(10, 10);
    FeasibilityConfig narrow = cfg;
    narrow.delta_range = {70.0, 170.0};
    CWorkspace n = workspace_of_C(10.0, 30.0, 90.0, g, narrow);
    CWorkspace w = workspace_of_C(10.0, 30.0, 90.0, g, cfg);
    CHECK(n.ws <= w.ws);
    for (size_t k = 0; k < g.cell_count(); ++k)
      CHECK(n.grid.flags[k] <= w.grid.flags[k]);
  }
}

TEST_CASE("range-only workspace matches the analytic area oracle") {
  FeasibilityConfig cfg;
  cfg.check_opposite_intersect = false;
  SphericalGrid g = SphericalGrid::full_sphere(2, 2);
  struct Case {
    double phi_A, phi_B, theta_B;
  } cases[] = {{10.0, 35.0, 100.0}, {-20.0, 60.0, 150.0}, {45.0, 0.0, 90.0}};
  for (auto& c : cases) {
    CWorkspace w = workspace_of_C(c.phi_A, c.phi_B, c.theta_B, g, cfg);
    double analytic = oracles::band_region_area(c.phi_A, c.phi_B, c.theta_B);
    CHECK(w.ws == Approx(analytic).margin(5e-3));
  }
}

TEST_CASE("swept workspace metrics") {
  FeasibilityConfig cfg;
  SphericalGrid b = default_b_grid(15);
  SphericalGrid c = default_c_grid(15);
  WorkspaceMetrics m = total_workspace_C(5, b, c, cfg);

  CHECK(m.a_values.size() == 5);
  CHECK(m.a_values.front() == Approx(-30.0));
  CHECK(m.a_values.back() == Approx(90.0));
  CHECK(m.ws > 0.0);
  CHECK(m.ws <= 0.5 + 1e-12);  // the C grid covers half the sphere
  for (double f : m.wsb) {
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
  }
  REQUIRE(m.wsa_raw.size() == 5);
  REQUIRE(m.wsa_normalized.size() == 5);
  for (size_t i = 0; i < 5; ++i)
    CHECK(m.wsa_normalized[i] ==
          Approx(m.wsa_raw[i] / static_cast<double>(b.cell_count())).margin(1e-12));

  SECTION("union contains each individual workspace") {
    for (double phi_A : {-30.0, 30.0, 90.0}) {
      CWorkspace w = workspace_of_C(phi_A, 37.5, 97.5, c, cfg);
      for (size_t k = 0; k < c.cell_count(); ++k)
        CHECK(w.grid.flags[k] <= m.c_union.flags[k]);
    }
  }
  SECTION("wsa row equals the recomputed per-B sum") {
    double acc = 0.0;
    double phi_A = m.a_values[2];
    for (int bi = 0; bi < b.n_phi; ++bi)
      for (int bj = 0; bj < b.n_theta; ++bj)
        acc += workspace_of_C(phi_A, b.phi_center(bi), b.theta_center(bj), c, cfg).ws;
    CHECK(m.wsa_raw[2] == Approx(acc).margin(1e-12));
  }
}

TEST_CASE("per-B fraction of productive A samples") {
  // B fixed at elevation 80, azimuth 180: the pair angle to A at elevation a
  // is 180 - (a + 80), so exactly the six lowest of ten A samples stay in
  // range and each has a non-empty C workspace.
  FeasibilityConfig cfg;
  SphericalGrid b = SphericalGrid::band(75, 85, 175, 185, 10, 10);
  REQUIRE(b.cell_count() == 1);
  REQUIRE(b.phi_center(0) == Approx(80.0));
  REQUIRE(b.theta_center(0) == Approx(180.0));
  WorkspaceMetrics m = total_workspace_C(10, b, default_c_grid(10), cfg);
  REQUIRE(m.wsb.size() == 1);
  CHECK(m.wsb[0] == Approx(0.6).margin(1e-12));
}

TEST_CASE("heatmap over B placements") {
  FeasibilityConfig cfg;
  SphericalGrid b = SphericalGrid::band(-30, 90, 0, 360, 20, 20);
  SphericalGrid c = SphericalGrid::full_sphere(10, 10);
  std::vector<double> a_values = {0.0, 30.0};
  auto rows = heatmap_C(a_values, b, c, cfg);
  REQUIRE(rows.size() == 2);
  REQUIRE(rows[0].size() == b.cell_count());

  for (auto& row : rows)
    for (double v : row) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }

  SECTION("mirror-symmetric B placements give equal workspace") {
    for (auto& row : rows)
      for (int bi = 0; bi < b.n_phi; ++bi)
        for (int bj = 0; bj < b.n_theta; ++bj) {
          int mj = b.n_theta - 1 - bj;  // theta_center(mj) = 360 - theta_center(bj)
          CHECK(row[b.index(bi, bj)] == Approx(row[b.index(bi, mj)]).margin(1e-12));
        }
  }
  SECTION("every entry is bounded by the row union") {
    SphericalGrid union_grid = c;
    union_grid.clear_flags();
    double row_max = 0.0;
    for (int bi = 0; bi < b.n_phi; ++bi)
      for (int bj = 0; bj < b.n_theta; ++bj) {
        CWorkspace w =
            workspace_of_C(30.0, b.phi_center(bi), b.theta_center(bj), c, cfg);
        row_max = std::max(row_max, w.ws);
        for (size_t k = 0; k < c.cell_count(); ++k)
          if (w.grid.flags[k]) union_grid.flags[k] = 1;
      }
    double union_ws = union_grid.feasible_fraction();
    double max_entry = *std::max_element(rows[1].begin(), rows[1].end());
    CHECK(max_entry == Approx(row_max).margin(1e-12));
    CHECK(max_entry <= union_ws + 1e-12);
  }
}
