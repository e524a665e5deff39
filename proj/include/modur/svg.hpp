#pragma once

// Deterministic SVG renderers for the toolkit's artifacts: workspace grids
// and heatmaps (equirectangular projection, azimuth horizontal, elevation
// vertical), tracking overlays, and reconfiguration step sequences projected
// onto the world x-z plane. Output carries no timestamps; identical inputs
// render byte-identical documents.

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "modur/control.hpp"
#include "modur/reconfig.hpp"
#include "modur/spherical_grid.hpp"

namespace modur::svg {

namespace detail {

inline std::string fixed(double v, int decimals = 2) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

inline void open_document(std::string& out, double width, double height,
                          const std::string& comment) {
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(width, 0) +
         "\" height=\"" + fixed(height, 0) + "\" viewBox=\"0 0 " + fixed(width, 0) +
         " " + fixed(height, 0) + "\">\n";
  if (!comment.empty()) out += "<!-- " + comment + " -->\n";
}

inline void rect(std::string& out, double x, double y, double w, double h,
                 const std::string& fill) {
  out += "<rect x=\"" + fixed(x) + "\" y=\"" + fixed(y) + "\" width=\"" + fixed(w) +
         "\" height=\"" + fixed(h) + "\" fill=\"" + fill + "\"/>\n";
}

inline void text(std::string& out, double x, double y, const std::string& s,
                 int size = 12, const std::string& fill = "#333333") {
  out += "<text x=\"" + fixed(x) + "\" y=\"" + fixed(y) + "\" font-family=\"sans-serif\" font-size=\"" +
         std::to_string(size) + "\" fill=\"" + fill + "\">" + s + "</text>\n";
}

inline void circle(std::string& out, double cx, double cy, double r,
                   const std::string& fill, const std::string& stroke = "none",
                   double stroke_width = 1.0) {
  out += "<circle cx=\"" + fixed(cx) + "\" cy=\"" + fixed(cy) + "\" r=\"" + fixed(r) +
         "\" fill=\"" + fill + "\"";
  if (stroke != "none")
    out += " stroke=\"" + stroke + "\" stroke-width=\"" + fixed(stroke_width) + "\"";
  out += "/>\n";
}

inline void line(std::string& out, double x1, double y1, double x2, double y2,
                 const std::string& stroke, double width = 1.0) {
  out += "<line x1=\"" + fixed(x1) + "\" y1=\"" + fixed(y1) + "\" x2=\"" + fixed(x2) +
         "\" y2=\"" + fixed(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
         fixed(width) + "\"/>\n";
}

inline void polyline(std::string& out, const std::vector<std::pair<double, double>>& pts,
                     const std::string& stroke, double width = 1.5) {
  if (pts.empty()) return;
  out += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" +
         fixed(width) + "\" points=\"";
  for (size_t i = 0; i < pts.size(); ++i) {
    if (i) out += ' ';
    out += fixed(pts[i].first) + "," + fixed(pts[i].second);
  }
  out += "\"/>\n";
}

}  // namespace detail

/// Feasibility grid in equirectangular projection: azimuth left-to-right over
/// the grid's theta extent, elevation bottom-to-top over its phi extent;
/// flagged cells are filled.
inline void write_grid(std::ostream& os, const SphericalGrid& g,
                       const std::string& title, const std::string& comment) {
  const double cell = 6.0;
  const double margin = 44.0;
  double plot_w = cell * g.n_theta;
  double plot_h = cell * g.n_phi;
  std::string out;
  detail::open_document(out, plot_w + 2 * margin, plot_h + 2 * margin, comment);
  detail::rect(out, 0, 0, plot_w + 2 * margin, plot_h + 2 * margin, "#ffffff");
  detail::text(out, margin, margin - 18, title, 14);
  detail::rect(out, margin, margin, plot_w, plot_h, "#f2f2f2");
  for (int i = 0; i < g.n_phi; ++i)
    for (int j = 0; j < g.n_theta; ++j)
      if (g.at(i, j))
        // phi grows upward: row 0 (lowest elevation) renders at the bottom.
        detail::rect(out, margin + j * cell, margin + (g.n_phi - 1 - i) * cell,
                     cell, cell, "#2b6cb0");
  detail::rect(out, margin, margin, plot_w, 0.01, "#333333");
  detail::text(out, margin, margin + plot_h + 16,
               "theta " + detail::fixed(g.theta_min, 0) + ".." +
                   detail::fixed(g.theta_max, 0) + " deg", 11);
  detail::text(out, 4, margin + 10,
               "phi " + detail::fixed(g.phi_max, 0), 11);
  detail::text(out, 4, margin + plot_h,
               detail::fixed(g.phi_min, 0), 11);
  out += "</svg>\n";
  os << out;
}

/// Scalar matrix as a grayscale heatmap: one row per entry of `row_labels`
/// (rendered top to bottom), one column per inner element. Darker = larger.
inline void write_heatmap(std::ostream& os, const std::vector<std::vector<double>>& rows,
                          const std::vector<double>& row_labels,
                          const std::string& title, const std::string& comment) {
  size_t n_cols = rows.empty() ? 0 : rows[0].size();
  const double cell_w = std::max(2.0, std::min(8.0, 720.0 / std::max<size_t>(1, n_cols)));
  const double cell_h = 10.0;
  const double margin = 52.0;
  double plot_w = cell_w * static_cast<double>(n_cols);
  double plot_h = cell_h * static_cast<double>(rows.size());
  double vmax = 0.0;
  for (const auto& r : rows)
    for (double v : r) vmax = std::max(vmax, v);
  std::string out;
  detail::open_document(out, plot_w + 2 * margin, plot_h + 2 * margin, comment);
  detail::rect(out, 0, 0, plot_w + 2 * margin, plot_h + 2 * margin, "#ffffff");
  detail::text(out, margin, margin - 18, title, 14);
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < rows[i].size(); ++j) {
      int level = vmax > 0.0
                      ? 255 - static_cast<int>(std::lround(215.0 * rows[i][j] / vmax))
                      : 255;
      std::string fill = "rgb(" + std::to_string(level) + "," +
                         std::to_string(level) + "," + std::to_string(level) + ")";
      detail::rect(out, margin + static_cast<double>(j) * cell_w,
                   margin + static_cast<double>(i) * cell_h, cell_w, cell_h, fill);
    }
    if (i < row_labels.size() && (i % 4 == 0 || i + 1 == rows.size()))
      detail::text(out, 4, margin + static_cast<double>(i) * cell_h + cell_h,
                   detail::fixed(row_labels[i], 0), 10);
  }
  out += "</svg>\n";
  os << out;
}

/// Designed-versus-achieved tracking overlay in the equirectangular plane.
inline void write_track(std::ostream& os, const RmseReport& report,
                        const std::string& title, const std::string& comment) {
  const double margin = 50.0;
  const double plot_w = 640.0, plot_h = 420.0;
  double phi_lo = 1e9, phi_hi = -1e9, th_lo = 1e9, th_hi = -1e9;
  for (const PointResult& p : report.per_point) {
    for (const SpherePoint* q : {&p.designed, &p.achieved}) {
      phi_lo = std::min(phi_lo, q->phi);
      phi_hi = std::max(phi_hi, q->phi);
      th_lo = std::min(th_lo, q->theta);
      th_hi = std::max(th_hi, q->theta);
    }
  }
  if (report.per_point.empty()) {
    phi_lo = -90;
    phi_hi = 90;
    th_lo = 0;
    th_hi = 360;
  }
  double phi_pad = std::max(1.0, 0.05 * (phi_hi - phi_lo));
  double th_pad = std::max(1.0, 0.05 * (th_hi - th_lo));
  phi_lo -= phi_pad;
  phi_hi += phi_pad;
  th_lo -= th_pad;
  th_hi += th_pad;
  auto px = [&](double theta) {
    return margin + (theta - th_lo) / (th_hi - th_lo) * plot_w;
  };
  auto py = [&](double phi) {
    return margin + (phi_hi - phi) / (phi_hi - phi_lo) * plot_h;
  };
  std::vector<std::pair<double, double>> designed, achieved;
  designed.reserve(report.per_point.size());
  achieved.reserve(report.per_point.size());
  for (const PointResult& p : report.per_point) {
    designed.emplace_back(px(p.designed.theta), py(p.designed.phi));
    achieved.emplace_back(px(p.achieved.theta), py(p.achieved.phi));
  }
  std::string out;
  detail::open_document(out, plot_w + 2 * margin, plot_h + 2 * margin, comment);
  detail::rect(out, 0, 0, plot_w + 2 * margin, plot_h + 2 * margin, "#ffffff");
  detail::rect(out, margin, margin, plot_w, plot_h, "#f7f7f7");
  detail::text(out, margin, margin - 22, title, 14);
  detail::polyline(out, designed, "#2b6cb0", 2.0);
  detail::polyline(out, achieved, "#c53030", 1.2);
  for (auto& [x, y] : achieved) detail::circle(out, x, y, 1.6, "#c53030");
  detail::text(out, margin, margin + plot_h + 18,
               "designed (blue) vs achieved (red); theta right, phi up", 11);
  detail::text(out, margin, margin + plot_h + 34,
               "rmse " + detail::fixed(report.rmse_vs_design, 4) + " deg", 11);
  out += "</svg>\n";
  os << out;
}

/// Reconfiguration step sequence: one panel per assembly snapshot, world x
/// rightward and world z upward, modules as circles of radius L with their
/// connector points marked and docked pairs joined.
inline void write_transition_steps(std::ostream& os, const std::vector<Assembly>& steps,
                                   const std::string& title,
                                   const std::string& comment) {
  const double margin = 40.0;
  const double panel_w = 260.0, panel_h = 240.0, gap = 18.0;
  double x_lo = 1e9, x_hi = -1e9, z_lo = 1e9, z_hi = -1e9;
  for (const Assembly& a : steps) {
    for (const auto& [id, node] : a.modules) {
      x_lo = std::min(x_lo, node.world_frame.origin.x - 1.2 * a.L_mm);
      x_hi = std::max(x_hi, node.world_frame.origin.x + 1.2 * a.L_mm);
      z_lo = std::min(z_lo, node.world_frame.origin.z - 1.2 * a.L_mm);
      z_hi = std::max(z_hi, node.world_frame.origin.z + 1.2 * a.L_mm);
    }
  }
  if (steps.empty() || x_lo > x_hi) {
    x_lo = z_lo = -1;
    x_hi = z_hi = 1;
  }
  double scale = std::min(panel_w / (x_hi - x_lo), panel_h / (z_hi - z_lo));
  double width = margin * 2 + static_cast<double>(steps.size()) * (panel_w + gap);
  double height = margin * 2 + panel_h + 24;
  std::string out;
  detail::open_document(out, width, height, comment);
  detail::rect(out, 0, 0, width, height, "#ffffff");
  detail::text(out, margin, margin - 14, title, 14);
  for (size_t s = 0; s < steps.size(); ++s) {
    double ox = margin + static_cast<double>(s) * (panel_w + gap);
    double oy = margin;
    auto px = [&](double wx) { return ox + (wx - x_lo) * scale; };
    auto pz = [&](double wz) { return oy + panel_h - (wz - z_lo) * scale; };
    detail::rect(out, ox, oy, panel_w, panel_h, "#f7f7f7");
    detail::text(out, ox + 4, oy + panel_h + 16, "step " + std::to_string(s), 11);
    const Assembly& a = steps[s];
    // Docked pairs first so the joining lines sit under the markers.
    for (const auto& [id, node] : a.modules) {
      Transform T = node.world_frame.transform();
      for (const auto& [c, link] : node.links) {
        if (id > link.peer) continue;  // draw each edge once
        const ModuleNode& peer = a.modules.at(link.peer);
        Vec3 p = T * (connector_position(node.state, c) * a.L_mm);
        Vec3 q = peer.world_frame.transform() *
                 (connector_position(peer.state, link.peer_connector) * a.L_mm);
        detail::line(out, px(p.x), pz(p.z), px(q.x), pz(q.z), "#2f855a", 2.0);
      }
    }
    for (const auto& [id, node] : a.modules) {
      Transform T = node.world_frame.transform();
      const Vec3& c = node.world_frame.origin;
      detail::circle(out, px(c.x), pz(c.z), a.L_mm * scale, "none", "#4a5568", 1.2);
      detail::text(out, px(c.x) - 4, pz(c.z) + 4, id, 11, "#4a5568");
      for (ConnectorId cid :
           {ConnectorId::A, ConnectorId::B, ConnectorId::C, ConnectorId::D}) {
        Vec3 p = T * (connector_position(node.state, cid) * a.L_mm);
        detail::circle(out, px(p.x), pz(p.z), 2.4,
                       node.connected(cid) ? "#2f855a" : "#a0aec0");
      }
    }
  }
  out += "</svg>\n";
  os << out;
}

}  // namespace modur::svg
