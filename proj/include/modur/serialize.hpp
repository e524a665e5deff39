#pragma once

// JSON and CSV adapters for the toolkit's value types, plus the
// reproducibility metadata every artifact carries: toolkit version, seed and
// a fingerprint of the generating configuration. Data files never contain
// timestamps, so identical inputs produce byte-identical outputs.

#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "modur/control.hpp"
#include "modur/reconfig.hpp"
#include "modur/slg_design.hpp"
#include "modur/workspace.hpp"

namespace modur {

inline constexpr const char* kToolkitVersion = "1.0.0";

// ---------------------------------------------------------------------------
// Configuration fingerprint and artifact metadata.

/// FNV-1a 64-bit hash; stable across platforms, used only as a fingerprint.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

/// Fingerprint of a configuration document (hash of its canonical dump).
inline std::string config_fingerprint(const nlohmann::json& config) {
  return hex64(fnv1a64(config.dump()));
}

/// Reproducibility block stamped into every artifact.
struct ArtifactMeta {
  std::uint64_t seed = 0;
  std::string config_hash = "none";
};

inline nlohmann::json meta_json(const ArtifactMeta& m) {
  return {{"toolkit_version", kToolkitVersion},
          {"seed", m.seed},
          {"config_hash", m.config_hash}};
}

/// First line of every CSV artifact.
inline std::string csv_banner(const ArtifactMeta& m) {
  return "# toolkit=" + std::string(kToolkitVersion) + " seed=" +
         std::to_string(m.seed) + " config=" + m.config_hash + "\n";
}

// ---------------------------------------------------------------------------
// Number formatting: shortest representation that parses back bit-exactly.

inline void append_number(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

inline std::string number_string(double v) {
  std::string s;
  append_number(s, v);
  return s;
}

// ---------------------------------------------------------------------------
// Enum names.

inline ErrorDistribution error_distribution_from_string(const std::string& s) {
  if (s == "uniform") return ErrorDistribution::kUniform;
  if (s == "constant-bias") return ErrorDistribution::kConstantBias;
  throw std::invalid_argument("unknown error distribution: " + s);
}

inline ControlMode control_mode_from_string(const std::string& s) {
  if (s == "global") return ControlMode::kGlobal;
  if (s == "local") return ControlMode::kLocal;
  throw std::invalid_argument("unknown control mode: " + s);
}

inline const char* to_string(Action::Kind k) {
  switch (k) {
    case Action::Kind::SetConnectorGoal: return "set_connector_goal";
    case Action::Kind::Connect: return "connect";
    default: return "disconnect";
  }
}

inline Action::Kind action_kind_from_string(const std::string& s) {
  if (s == "set_connector_goal") return Action::Kind::SetConnectorGoal;
  if (s == "connect") return Action::Kind::Connect;
  if (s == "disconnect") return Action::Kind::Disconnect;
  throw std::invalid_argument("unknown action kind: " + s);
}

// ---------------------------------------------------------------------------
// JSON adapters. Required fields are read with at() so a missing key raises
// an error naming it; configuration types start from their defaults and
// override only the keys present.

inline void to_json(nlohmann::json& j, const Vec3& v) { j = {v.x, v.y, v.z}; }
inline void from_json(const nlohmann::json& j, Vec3& v) {
  if (!j.is_array() || j.size() != 3)
    throw std::invalid_argument("a vector must be a 3-element array");
  v = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline void to_json(nlohmann::json& j, const Frame& f) {
  j = {{"origin", f.origin}, {"x_axis", f.x_axis}, {"z_axis", f.z_axis}};
}
inline void from_json(const nlohmann::json& j, Frame& f) {
  f.origin = j.at("origin").get<Vec3>();
  f.x_axis = j.at("x_axis").get<Vec3>();
  f.z_axis = j.at("z_axis").get<Vec3>();
}

inline void to_json(nlohmann::json& j, const SpherePoint& p) {
  j = {{"phi", p.phi}, {"theta", p.theta}};
}
inline void from_json(const nlohmann::json& j, SpherePoint& p) {
  p.phi = j.at("phi").get<double>();
  p.theta = j.at("theta").get<double>();
}

inline void to_json(nlohmann::json& j, const DeltaVector& d) {
  j = nlohmann::json::object();
  for (int i = 0; i < 6; ++i) j[DeltaVector::component_name(i)] = d[i];
}
inline void from_json(const nlohmann::json& j, DeltaVector& d) {
  for (int i = 0; i < 6; ++i)
    d[i] = j.at(DeltaVector::component_name(i)).get<double>();
}

inline void to_json(nlohmann::json& j, const ModuleState& s) {
  j = {{"phi_A", s.phi_A},
       {"phi_B", s.phi_B},
       {"theta_B", s.theta_B},
       {"phi_C", s.phi_C},
       {"theta_C", s.theta_C}};
  if (!s.deflections.empty()) {
    nlohmann::json d = nlohmann::json::object();
    for (const auto& [id, v] : s.deflections) d[to_string(id)] = v;
    j["deflections"] = std::move(d);
  }
}
inline void from_json(const nlohmann::json& j, ModuleState& s) {
  s.phi_A = j.at("phi_A").get<double>();
  s.phi_B = j.at("phi_B").get<double>();
  s.theta_B = j.at("theta_B").get<double>();
  s.phi_C = j.at("phi_C").get<double>();
  s.theta_C = j.at("theta_C").get<double>();
  s.deflections.clear();
  if (auto it = j.find("deflections"); it != j.end())
    for (const auto& [key, v] : it->items())
      s.deflections[connector_from_string(key)] = v.get<double>();
}

inline void to_json(nlohmann::json& j, const FeasibilityConfig& c) {
  j = {{"delta_range", {c.delta_range[0], c.delta_range[1]}},
       {"arc_samples", c.arc_samples},
       {"grazing_tolerance", c.grazing_tolerance},
       {"check_opposite_intersect", c.check_opposite_intersect}};
  j["min_clearance"] =
      c.min_clearance ? nlohmann::json(*c.min_clearance) : nlohmann::json();
}
inline void from_json(const nlohmann::json& j, FeasibilityConfig& c) {
  c = FeasibilityConfig{};
  if (auto it = j.find("delta_range"); it != j.end()) {
    c.delta_range[0] = it->at(0).get<double>();
    c.delta_range[1] = it->at(1).get<double>();
  }
  if (auto it = j.find("arc_samples"); it != j.end()) c.arc_samples = it->get<int>();
  if (auto it = j.find("grazing_tolerance"); it != j.end())
    c.grazing_tolerance = it->get<double>();
  if (auto it = j.find("check_opposite_intersect"); it != j.end())
    c.check_opposite_intersect = it->get<bool>();
  if (auto it = j.find("min_clearance"); it != j.end() && !it->is_null())
    c.min_clearance = it->get<double>();
}

inline void to_json(nlohmann::json& j, const PlantConfig& c) {
  j = {{"delta_e_bound", c.delta_e_bound},
       {"error_distribution", to_string(c.error_distribution)},
       {"gravity_bias", c.gravity_bias},
       {"seed", c.seed},
       {"redundant", c.redundant}};
}
inline void from_json(const nlohmann::json& j, PlantConfig& c) {
  c = PlantConfig{};
  if (auto it = j.find("delta_e_bound"); it != j.end())
    c.delta_e_bound = it->get<double>();
  if (auto it = j.find("error_distribution"); it != j.end())
    c.error_distribution = error_distribution_from_string(it->get<std::string>());
  if (auto it = j.find("gravity_bias"); it != j.end())
    c.gravity_bias = it->get<double>();
  if (auto it = j.find("seed"); it != j.end()) c.seed = it->get<std::uint64_t>();
  if (auto it = j.find("redundant"); it != j.end()) c.redundant = it->get<bool>();
}

inline void to_json(nlohmann::json& j, const PidGains& g) {
  j = {{"kp", g.kp},
       {"ki", g.ki},
       {"kd", g.kd},
       {"tolerance_final", g.tolerance_final},
       {"tolerance_intermediate", g.tolerance_intermediate},
       {"max_iterations", g.max_iterations}};
}
inline void from_json(const nlohmann::json& j, PidGains& g) {
  g = PidGains{};
  if (auto it = j.find("kp"); it != j.end()) g.kp = it->get<double>();
  if (auto it = j.find("ki"); it != j.end()) g.ki = it->get<double>();
  if (auto it = j.find("kd"); it != j.end()) g.kd = it->get<double>();
  if (auto it = j.find("tolerance_final"); it != j.end())
    g.tolerance_final = it->get<double>();
  if (auto it = j.find("tolerance_intermediate"); it != j.end())
    g.tolerance_intermediate = it->get<double>();
  if (auto it = j.find("max_iterations"); it != j.end())
    g.max_iterations = it->get<int>();
}

inline void to_json(nlohmann::json& j, const TrajectorySpec& s) {
  j = {{"center", s.center},
       {"through", s.through},
       {"n_points", s.n_points},
       {"turns", s.turns}};
}
inline void from_json(const nlohmann::json& j, TrajectorySpec& s) {
  s = TrajectorySpec{};
  if (auto it = j.find("center"); it != j.end()) s.center = it->get<SpherePoint>();
  if (auto it = j.find("through"); it != j.end()) s.through = it->get<SpherePoint>();
  if (auto it = j.find("n_points"); it != j.end()) s.n_points = it->get<int>();
  if (auto it = j.find("turns"); it != j.end()) s.turns = it->get<double>();
}

inline void to_json(nlohmann::json& j, const PointResult& p) {
  j = {{"designed", p.designed},
       {"achieved", p.achieved},
       {"error_deg", p.error_deg},
       {"iterations", p.iterations},
       {"converged", p.converged},
       {"target_deltas", p.target_deltas}};
}

inline void to_json(nlohmann::json& j, const RmseReport& r) {
  j = {{"rmse_vs_design", r.rmse_vs_design},
       {"controller_mode", to_string(r.controller_mode)},
       {"redundant", r.redundant},
       {"per_point", r.per_point}};
}

/// Layout of a spherical grid (per-cell flags travel in the CSV artifact).
inline nlohmann::json grid_layout_json(const SphericalGrid& g) {
  return {{"phi_min", g.phi_min},     {"phi_max", g.phi_max},
          {"theta_min", g.theta_min}, {"theta_max", g.theta_max},
          {"n_phi", g.n_phi},         {"n_theta", g.n_theta}};
}

inline void to_json(nlohmann::json& j, const WorkspaceMetrics& m) {
  j = {{"ws", m.ws},
       {"a_values", m.a_values},
       {"wsa_raw", m.wsa_raw},
       {"wsa_normalized", m.wsa_normalized},
       {"wsb", m.wsb},
       {"b_layout", grid_layout_json(m.b_layout)},
       {"c_union", grid_layout_json(m.c_union)}};
}

inline void to_json(nlohmann::json& j, const TransitionReport& r) {
  j = {{"ok", r.ok},
       {"spare_connector_reachable", r.spare_connector_reachable},
       {"carrier_reachable", r.carrier_reachable},
       {"receiver_reachable", r.receiver_reachable},
       {"connectors_coplanar", r.connectors_coplanar},
       {"meeting_point_consistent", r.meeting_point_consistent},
       {"reason", r.reason}};
}

namespace slg {

inline void to_json(nlohmann::json& j, const DesignInput& in) {
  j = {{"delta_min", in.delta_min}, {"alpha", in.alpha}, {"r", in.r},
       {"w", in.w},                 {"lambda", in.lambda}, {"kappa", in.kappa},
       {"zeta", in.zeta},           {"l_dk", in.l_dk}};
}
inline void from_json(const nlohmann::json& j, DesignInput& in) {
  in.delta_min = j.at("delta_min").get<double>();
  in.alpha = j.at("alpha").get<double>();
  in.r = j.at("r").get<double>();
  in.w = j.at("w").get<double>();
  in.lambda = j.at("lambda").get<double>();
  in.kappa = j.value("kappa", 0.0);
  in.zeta = j.value("zeta", 0.0);
  in.l_dk = j.value("l_dk", 0.0);
}

inline void to_json(nlohmann::json& j, const Design& d) {
  j = {{"input", d.input}, {"delta_col", d.delta_col}, {"l", d.l},
       {"L", d.L},         {"R", d.R},                 {"kappa", d.kappa},
       {"zeta", d.zeta},   {"l_dk", d.l_dk}};
}
inline void from_json(const nlohmann::json& j, Design& d) {
  d.input = j.at("input").get<DesignInput>();
  d.delta_col = j.at("delta_col").get<double>();
  d.l = j.at("l").get<double>();
  d.L = j.at("L").get<double>();
  d.R = j.at("R").get<double>();
  d.kappa = j.value("kappa", 0.0);
  d.zeta = j.value("zeta", 0.0);
  d.l_dk = j.value("l_dk", 0.0);
}

}  // namespace slg

inline void to_json(nlohmann::json& j, const ConnectorRef& r) {
  j = {{"module", r.module}, {"connector", to_string(r.connector)}};
}
inline void from_json(const nlohmann::json& j, ConnectorRef& r) {
  r.module = j.at("module").get<std::string>();
  r.connector = connector_from_string(j.at("connector").get<std::string>());
}

inline void to_json(nlohmann::json& j, const Link& l) {
  j = {{"peer", l.peer},
       {"peer_connector", to_string(l.peer_connector)},
       {"roll_deg", l.roll_deg}};
}
inline void from_json(const nlohmann::json& j, Link& l) {
  l.peer = j.at("peer").get<std::string>();
  l.peer_connector = connector_from_string(j.at("peer_connector").get<std::string>());
  l.roll_deg = j.at("roll_deg").get<double>();
}

inline void to_json(nlohmann::json& j, const Assembly& a) {
  nlohmann::json mods = nlohmann::json::object();
  for (const auto& [id, node] : a.modules) {
    nlohmann::json links = nlohmann::json::object();
    for (const auto& [c, link] : node.links) links[to_string(c)] = link;
    mods[id] = {{"state", node.state},
                {"world_frame", node.world_frame},
                {"links", std::move(links)}};
  }
  j = {{"L_mm", a.L_mm},
       {"dock_gap_mm", a.dock_gap_mm},
       {"ground", a.ground},
       {"modules", std::move(mods)}};
}
inline void from_json(const nlohmann::json& j, Assembly& a) {
  a = Assembly{};
  a.L_mm = j.value("L_mm", kModuleRadiusMm);
  a.dock_gap_mm = j.value("dock_gap_mm", 0.0);
  if (auto it = j.find("ground"); it != j.end())
    a.ground = it->get<std::set<ModuleId>>();
  for (const auto& [id, mj] : j.at("modules").items()) {
    ModuleNode node;
    node.id = id;
    node.state = mj.at("state").get<ModuleState>();
    if (auto it = mj.find("world_frame"); it != mj.end())
      node.world_frame = it->get<Frame>();
    if (auto it = mj.find("links"); it != mj.end())
      for (const auto& [key, lj] : it->items())
        node.links[connector_from_string(key)] = lj.get<Link>();
    a.modules.emplace(id, std::move(node));
  }
}

inline void to_json(nlohmann::json& j, const Action& x) {
  j = {{"kind", to_string(x.kind)}};
  switch (x.kind) {
    case Action::Kind::SetConnectorGoal:
      j["a"] = x.a;
      j["phi_deg"] = x.phi_deg;
      j["theta_deg"] = x.theta_deg;
      break;
    case Action::Kind::Connect:
      j["a"] = x.a;
      j["b"] = x.b;
      j["roll_deg"] = x.roll_deg;
      break;
    case Action::Kind::Disconnect:
      j["a"] = x.a;
      j["b"] = x.b;
      break;
  }
}
inline void from_json(const nlohmann::json& j, Action& x) {
  x = Action{};
  x.kind = action_kind_from_string(j.at("kind").get<std::string>());
  x.a = j.at("a").get<ConnectorRef>();
  if (x.kind == Action::Kind::SetConnectorGoal) {
    x.phi_deg = j.at("phi_deg").get<double>();
    x.theta_deg = j.at("theta_deg").get<double>();
  } else {
    x.b = j.at("b").get<ConnectorRef>();
    if (x.kind == Action::Kind::Connect) x.roll_deg = j.at("roll_deg").get<double>();
  }
}

inline void from_json(const nlohmann::json& j, ReconfigOptions& o) {
  o = ReconfigOptions{};
  if (auto it = j.find("feasibility"); it != j.end())
    o.feasibility = it->get<FeasibilityConfig>();
  if (auto it = j.find("sweep_samples"); it != j.end())
    o.sweep_samples = it->get<int>();
  if (auto it = j.find("check_module_overlap"); it != j.end())
    o.check_module_overlap = it->get<bool>();
  if (auto it = j.find("overlap_half_angle_deg"); it != j.end())
    o.overlap_half_angle_deg = it->get<double>();
  if (auto it = j.find("meridian_tolerance_deg"); it != j.end())
    o.meridian_tolerance_deg = it->get<double>();
  if (auto it = j.find("coplanar_tolerance_deg"); it != j.end())
    o.coplanar_tolerance_deg = it->get<double>();
  if (auto it = j.find("meeting_tolerance_mm"); it != j.end())
    o.meeting_tolerance_mm = it->get<double>();
}

// ---------------------------------------------------------------------------
// CSV artifacts. One banner comment line, one fixed header line, then data;
// numbers are written in their shortest form that parses back bit-exactly.

inline constexpr const char* kDeltaCsvHeader = "dAB,dAC,dAD,dBC,dBD,dCD";
inline constexpr const char* kGridCsvHeader = "phi,theta,feasible";
inline constexpr const char* kTrackCsvHeader =
    "index,designed_phi,designed_theta,achieved_phi,achieved_theta,error_deg,"
    "iterations,converged";
inline constexpr const char* kSceneCsvHeader = "step,module,point,x,y,z";
inline constexpr const char* kDesignSweepCsvHeader = "alpha,delta_min,delta_col,l,L,R";

inline void write_delta_csv(std::ostream& os, const std::vector<DeltaVector>& rows,
                            const ArtifactMeta& meta) {
  std::string out = csv_banner(meta);
  out += kDeltaCsvHeader;
  out += '\n';
  for (const DeltaVector& d : rows) {
    for (int i = 0; i < 6; ++i) {
      if (i) out += ',';
      append_number(out, d[i]);
    }
    out += '\n';
  }
  os << out;
}

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  size_t start = 0;
  while (true) {
    size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline double parse_number(std::string_view field) {
  double v = 0.0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
    throw std::invalid_argument("malformed number in CSV: '" + std::string(field) + "'");
  return v;
}

}  // namespace detail

/// Reads a six-angle batch written by write_delta_csv (banner and blank lines
/// are skipped; the header is verified).
inline std::vector<DeltaVector> read_delta_csv(std::istream& is) {
  std::vector<DeltaVector> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kDeltaCsvHeader)
        throw std::invalid_argument("expected CSV header '" +
                                    std::string(kDeltaCsvHeader) + "', got '" +
                                    line + "'");
      header_seen = true;
      continue;
    }
    auto fields = detail::split_csv_line(line);
    if (fields.size() != 6)
      throw std::invalid_argument("expected 6 columns, got " +
                                  std::to_string(fields.size()));
    DeltaVector d;
    for (int i = 0; i < 6; ++i) d[i] = detail::parse_number(fields[static_cast<size_t>(i)]);
    rows.push_back(d);
  }
  if (!header_seen)
    throw std::invalid_argument("CSV contains no header line");
  return rows;
}

/// Per-cell feasibility dump of a spherical grid (cell centers, flag 0/1).
inline void write_grid_csv(std::ostream& os, const SphericalGrid& g,
                           const ArtifactMeta& meta) {
  std::string out = csv_banner(meta);
  out += kGridCsvHeader;
  out += '\n';
  for (int i = 0; i < g.n_phi; ++i) {
    for (int j = 0; j < g.n_theta; ++j) {
      append_number(out, g.phi_center(i));
      out += ',';
      append_number(out, g.theta_center(j));
      out += ',';
      out += g.at(i, j) ? '1' : '0';
      out += '\n';
    }
  }
  os << out;
}

/// Per-point designed/achieved record of a tracking run.
inline void write_track_csv(std::ostream& os, const RmseReport& r,
                            const ArtifactMeta& meta) {
  std::string out = csv_banner(meta);
  out += kTrackCsvHeader;
  out += '\n';
  for (size_t k = 0; k < r.per_point.size(); ++k) {
    const PointResult& p = r.per_point[k];
    out += std::to_string(k);
    out += ',';
    append_number(out, p.designed.phi);
    out += ',';
    append_number(out, p.designed.theta);
    out += ',';
    append_number(out, p.achieved.phi);
    out += ',';
    append_number(out, p.achieved.theta);
    out += ',';
    append_number(out, p.error_deg);
    out += ',';
    out += std::to_string(p.iterations);
    out += ',';
    out += p.converged ? '1' : '0';
    out += '\n';
  }
  os << out;
}

/// Scene dump of an assembly sequence: world position of every module center
/// and connector at every step, for plotting.
inline void write_scene_csv(std::ostream& os, const std::vector<Assembly>& steps,
                            const ArtifactMeta& meta) {
  std::string out = csv_banner(meta);
  out += kSceneCsvHeader;
  out += '\n';
  auto row = [&out](size_t step, const ModuleId& id, const char* label,
                    const Vec3& p) {
    out += std::to_string(step);
    out += ',';
    out += id;
    out += ',';
    out += label;
    out += ',';
    append_number(out, p.x);
    out += ',';
    append_number(out, p.y);
    out += ',';
    append_number(out, p.z);
    out += '\n';
  };
  for (size_t s = 0; s < steps.size(); ++s) {
    const Assembly& a = steps[s];
    for (const auto& [id, node] : a.modules) {
      Transform T = node.world_frame.transform();
      row(s, id, "center", node.world_frame.origin);
      for (ConnectorId c :
           {ConnectorId::A, ConnectorId::B, ConnectorId::C, ConnectorId::D})
        row(s, id, to_string(c), T * (connector_position(node.state, c) * a.L_mm));
    }
  }
  os << out;
}

/// Parameter-sweep table of synthesized linkage designs.
inline void write_design_sweep_csv(std::ostream& os,
                                   const std::vector<slg::Design>& designs,
                                   const ArtifactMeta& meta) {
  std::string out = csv_banner(meta);
  out += kDesignSweepCsvHeader;
  out += '\n';
  for (const slg::Design& d : designs) {
    append_number(out, d.input.alpha);
    out += ',';
    append_number(out, d.input.delta_min);
    out += ',';
    append_number(out, d.delta_col);
    out += ',';
    append_number(out, d.l);
    out += ',';
    append_number(out, d.L);
    out += ',';
    append_number(out, d.R);
    out += '\n';
  }
  os << out;
}

}  // namespace modur
