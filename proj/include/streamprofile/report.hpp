// Copyright 2026 the streamprofile authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "streamprofile/core.hpp"
#include "streamprofile/io.hpp"
#include "streamprofile/metrics.hpp"

namespace streamprofile::report {

inline constexpr std::string_view kToolVersion = "0.1.0";

// Tables -------------------------------------------------------------------------

/// Fixed two-decimal percentage; "-" when the value is undefined.
inline std::string percent(std::optional<double> v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v * 100.0);
  return buf;
}

inline std::string fixed(std::optional<double> v, int digits = 3) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, *v);
  return buf;
}

inline std::string rho_cell(const metrics::TradeoffPoint& t) {
  if (t.rho_infinite) return "inf";
  return fixed(t.rho);
}

inline std::vector<std::string> platform_columns(const std::vector<metrics::AggregateReport>& reports) {
  std::set<std::string> ids;
  for (const auto& r : reports) {
    for (const auto& [p, row] : r.platforms) ids.insert(p);
  }
  return {ids.begin(), ids.end()};
}

namespace detail {

inline std::string join(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) s += '\t';
    s += cells[i];
  }
  return s + "\n";
}

template <typename Cell>
std::string wide_table(const std::vector<metrics::AggregateReport>& reports, Cell cell, Cell avg) {
  auto cols = platform_columns(reports);
  std::vector<std::string> header{"agent"};
  header.insert(header.end(), cols.begin(), cols.end());
  header.push_back("Avg");
  std::string s = join(header);
  for (const auto& r : reports) {
    std::vector<std::string> row{r.agent};
    for (const auto& p : cols) {
      auto it = r.platforms.find(p);
      row.push_back(it == r.platforms.end() ? "-" : cell(it->second));
    }
    row.push_back(avg(r.overall));
    s += join(row);
  }
  return s;
}

}  // namespace detail

/// Agent x platform table of macro recall, Avg being the platform mean.
inline std::string recall_table(const std::vector<metrics::AggregateReport>& reports) {
  auto cell = [](const metrics::MetricRow& row) { return percent(row.get(metrics::Metric::R)); };
  return detail::wide_table(reports, +cell, +cell);
}

/// Agent x platform F1^NS; the Avg cell is computed from the overall recalls.
inline std::string f1_table(const std::vector<metrics::AggregateReport>& reports) {
  auto cell = [](const metrics::MetricRow& row) { return percent(row.f1); };
  return detail::wide_table(reports, +cell, +cell);
}

/// Long table of decomposed recalls and the tradeoff coordinates.
inline std::string decomposition_table(const std::vector<metrics::AggregateReport>& reports) {
  std::string s = detail::join({"agent", "platform", "R_stab", "R_nov", "F1_NS", "alpha", "B", "rho"});
  auto line = [&](const std::string& agent, const std::string& p, const metrics::MetricRow& row) {
    s += detail::join({agent, p, percent(row.get(metrics::Metric::R_stab)), percent(row.get(metrics::Metric::R_nov)),
                       percent(row.f1), percent(row.get(metrics::Metric::alpha)),
                       percent(row.get(metrics::Metric::B)), rho_cell(row.tradeoff)});
  };
  for (const auto& r : reports) {
    for (const auto& [p, row] : r.platforms) line(r.agent, p, row);
    line(r.agent, "Avg", r.overall);
  }
  return s;
}

/// Long table of the four distractor error rates.
inline std::string error_table(const std::vector<metrics::AggregateReport>& reports) {
  std::string s = detail::join({"agent", "platform", "E_decay", "E_peer", "E_viral", "E_random"});
  auto line = [&](const std::string& agent, const std::string& p, const metrics::MetricRow& row) {
    s += detail::join({agent, p, percent(row.get(metrics::Metric::E_decay)), percent(row.get(metrics::Metric::E_peer)),
                       percent(row.get(metrics::Metric::E_viral)), percent(row.get(metrics::Metric::E_random))});
  };
  for (const auto& r : reports) {
    for (const auto& [p, row] : r.platforms) line(r.agent, p, row);
    line(r.agent, "Avg", r.overall);
  }
  return s;
}

// Plots ---------------------------------------------------------------------------

struct PlotPoint {
  std::string label;
  metrics::TradeoffPoint point;
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

/// Unit-square plot frame mapping data coordinates into a fixed canvas.
struct Frame {
  double x0 = 60, y0 = 20, w = 400, h = 400;
  double xmax = 1.0, ymax = 1.0;

  double px(double x) const { return x0 + w * x / xmax; }
  double py(double y) const { return y0 + h * (1.0 - y / ymax); }
};

inline std::string open_svg(const Frame& f, std::string_view xlabel, std::string_view ylabel) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(f.x0 + f.w + 160) + "\" height=\"" +
                  num(f.y0 + f.h + 60) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect x=\"" + num(f.x0) + "\" y=\"" + num(f.y0) + "\" width=\"" + num(f.w) + "\" height=\"" + num(f.h) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    double fx = f.xmax * i / 4.0, fy = f.ymax * i / 4.0;
    s += "<text x=\"" + num(f.px(fx)) + "\" y=\"" + num(f.y0 + f.h + 16) + "\" text-anchor=\"middle\">" + num(fx) +
         "</text>\n";
    s += "<text x=\"" + num(f.x0 - 6) + "\" y=\"" + num(f.py(fy) + 4) + "\" text-anchor=\"end\">" + num(fy) +
         "</text>\n";
  }
  s += "<text x=\"" + num(f.x0 + f.w / 2) + "\" y=\"" + num(f.y0 + f.h + 40) + "\" text-anchor=\"middle\">" +
       escape(xlabel) + "</text>\n";
  s += "<text x=\"16\" y=\"" + num(f.y0 + f.h / 2) + "\" transform=\"rotate(-90 16 " + num(f.y0 + f.h / 2) +
       ")\" text-anchor=\"middle\">" + escape(ylabel) + "</text>\n";
  return s;
}

inline std::string polyline(const Frame& f, const std::vector<metrics::Point>& pts, std::string_view style) {
  if (pts.empty()) return {};
  std::string s = "<polyline fill=\"none\" " + std::string(style) + " points=\"";
  for (const auto& p : pts) s += num(f.px(p.x)) + "," + num(f.py(p.y)) + " ";
  s.pop_back();
  return s + "\"/>\n";
}

}  // namespace detail

/// Scatter of (B, rho) per agent. Infinite rho is drawn on the top edge with
/// an upward triangle.
inline std::string tradeoff_scatter_svg(const std::vector<PlotPoint>& points) {
  if (points.empty()) throw InvalidInput("tradeoff plot needs at least one point");
  detail::Frame f;
  double top = 2.0;
  for (const auto& p : points) {
    if (p.point.rho) top = std::max(top, std::ceil(*p.point.rho));
  }
  f.ymax = top;
  std::string s = detail::open_svg(f, "B (budget)", "rho (R_nov / R_stab)");
  s += "<line x1=\"" + detail::num(f.px(0)) + "\" y1=\"" + detail::num(f.py(1)) + "\" x2=\"" + detail::num(f.px(1)) +
       "\" y2=\"" + detail::num(f.py(1)) + "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  for (const auto& p : points) {
    double x = f.px(std::clamp(p.point.B, 0.0, 1.0));
    if (p.point.rho_infinite) {
      double y = f.py(f.ymax);
      s += "<polygon points=\"" + detail::num(x - 6) + "," + detail::num(y + 8) + " " + detail::num(x + 6) + "," +
           detail::num(y + 8) + " " + detail::num(x) + "," + detail::num(y - 2) + "\" fill=\"crimson\"/>\n";
      s += "<text x=\"" + detail::num(x + 8) + "\" y=\"" + detail::num(y + 10) + "\">" + detail::escape(p.label) +
           " (inf)</text>\n";
    } else if (p.point.rho) {
      double y = f.py(*p.point.rho);
      s += "<circle cx=\"" + detail::num(x) + "\" cy=\"" + detail::num(y) + "\" r=\"4\" fill=\"steelblue\"/>\n";
      s += "<text x=\"" + detail::num(x + 6) + "\" y=\"" + detail::num(y - 6) + "\">" + detail::escape(p.label) +
           "</text>\n";
    }
  }
  return s + "</svg>\n";
}

/// Budget constraint lines (one per agent) and iso-F1^NS contours in the
/// (R_stab, R_nov) plane at a fixed alpha.
inline std::string constraint_svg(const std::vector<PlotPoint>& points, double alpha,
                                  const std::vector<double>& f1_levels) {
  if (points.empty()) throw InvalidInput("constraint plot needs at least one point");
  detail::Frame f;
  std::string s = detail::open_svg(f, "R_stab", "R_nov");
  for (double c : f1_levels) {
    auto g = metrics::geometry_curves(alpha, 0.5, c);
    s += detail::polyline(f, g.iso, "stroke=\"gray\" stroke-dasharray=\"3 3\"");
    if (!g.iso.empty()) {
      const auto& last = g.iso.back();
      s += "<text x=\"" + detail::num(f.px(last.x) + 4) + "\" y=\"" + detail::num(f.py(last.y) + 4) +
           "\" fill=\"gray\">F1=" + detail::num(c) + "</text>\n";
    }
  }
  for (const auto& p : points) {
    auto g = metrics::geometry_curves(alpha, std::clamp(p.point.B, 0.0, 1.0), 0.0);
    s += detail::polyline(f, g.line, "stroke=\"steelblue\"");
    if (!g.line.empty()) {
      const auto& first = g.line.front();
      s += "<text x=\"" + detail::num(f.px(first.x) + 4) + "\" y=\"" + detail::num(f.py(first.y) - 4) + "\">" +
           detail::escape(p.label) + " B=" + detail::num(p.point.B) + "</text>\n";
    }
  }
  s += "<text x=\"" + detail::num(f.x0 + f.w + 10) + "\" y=\"" + detail::num(f.y0 + 12) + "\">alpha=" +
       detail::num(alpha) + "</text>\n";
  return s + "</svg>\n";
}

// Manifest ----------------------------------------------------------------------------

/// Provenance record written once per output directory. Credentials never
/// appear here; only the names of the environment variables consulted.
struct RunManifest {
  std::string command;
  std::string config_digest;
  std::map<std::string, std::uint64_t> seeds;
  Json mode = Json::object();
  std::map<std::string, std::string> inputs;
  std::map<std::string, std::string> outputs;  // relative path -> sha256
  std::map<std::string, std::string> versions{{"streamprofile", std::string(kToolVersion)}};
  std::string started;
  double wall_clock_seconds = 0.0;
};

inline void to_json(Json& j, const RunManifest& m) {
  j = Json{{"command", m.command},   {"config_digest", m.config_digest},
           {"seeds", m.seeds},       {"mode", m.mode},
           {"inputs", m.inputs},     {"outputs", m.outputs},
           {"versions", m.versions}, {"started", m.started},
           {"wall_clock_seconds", m.wall_clock_seconds}};
}

inline void from_json(const Json& j, RunManifest& m) {
  m.command = j.at("command").get<std::string>();
  m.config_digest = j.at("config_digest").get<std::string>();
  streamprofile::detail::get_opt(j, "seeds", m.seeds);
  streamprofile::detail::get_opt(j, "mode", m.mode);
  streamprofile::detail::get_opt(j, "inputs", m.inputs);
  streamprofile::detail::get_opt(j, "outputs", m.outputs);
  streamprofile::detail::get_opt(j, "versions", m.versions);
  streamprofile::detail::get_opt(j, "started", m.started);
  streamprofile::detail::get_opt(j, "wall_clock_seconds", m.wall_clock_seconds);
}

inline std::string config_digest(const Json& config) { return io::sha256_hex(config.dump()); }

inline constexpr std::string_view kManifestName = "manifest.json";

/// Digests every regular file under `dir` except the manifest itself.
inline std::map<std::string, std::string> digest_outputs(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    auto rel = std::filesystem::relative(e.path(), dir).generic_string();
    if (rel == kManifestName) continue;
    out[rel] = io::sha256_hex(io::read_file(e.path()));
  }
  return out;
}

inline void write_manifest(const std::filesystem::path& dir, RunManifest m) {
  m.outputs = digest_outputs(dir);
  io::write_json(dir / kManifestName, Json(m));
}

}  // namespace streamprofile::report
