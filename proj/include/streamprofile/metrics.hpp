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
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "streamprofile/core.hpp"
#include "streamprofile/tasks.hpp"

namespace streamprofile::metrics {

using OptRational = std::optional<Rational>;

struct StepScore {
  std::string platform_id;
  std::string user_id;
  std::size_t step_index = 0;
  OptRational R;
  OptRational R_stab;
  OptRational R_nov;
  std::size_t delta = 0;     // distractor hits + out-of-pool selections
  std::size_t delta_gt = 0;  // K - positive hits
  std::array<OptRational, 4> E;  // decay, peer, viral, random
  Rational alpha{0};
  std::size_t K = 0;  // |C+|
  std::size_t out_of_pool = 0;
  bool failed = false;

  OptRational error(TagLabel l) const {
    for (std::size_t i = 0; i < 4; ++i) {
      if (kDistractorLabels[i] == l) return E[i];
    }
    return std::nullopt;
  }
};

namespace detail {
inline OptRational ratio(std::size_t hits, std::size_t size) {
  if (size == 0) return std::nullopt;
  return Rational(static_cast<std::int64_t>(hits), static_cast<std::int64_t>(size));
}
}  // namespace detail

/// Scores one prediction against the labelled pool. Predictions are
/// deduplicated after normalization; tags outside the pool never hit.
inline StepScore score_step(const tasks::StepTask& task, const Prediction& pred, bool failed = false) {
  StepScore s;
  s.platform_id = task.platform_id;
  s.user_id = task.user.user_id;
  s.step_index = task.step_index;
  s.failed = failed;
  std::map<std::string, TagLabel> label_of;
  std::map<TagLabel, std::size_t> size_of;
  for (const auto& t : task.pool.tags) {
    label_of.emplace(normalize_tag(t.tag), t.label);
    ++size_of[t.label];
  }
  std::map<TagLabel, std::size_t> hits;
  if (!failed) {
    std::set<std::string> seen;
    for (const auto& raw : pred.predicted_tags) {
      auto t = normalize_tag(raw);
      if (!seen.insert(t).second) continue;
      auto it = label_of.find(t);
      if (it == label_of.end()) {
        ++s.out_of_pool;
      } else {
        ++hits[it->second];
      }
    }
  }
  const std::size_t keep = size_of[TagLabel::keep];
  const std::size_t fresh = size_of[TagLabel::new_tag];
  const std::size_t pos_hits = hits[TagLabel::keep] + hits[TagLabel::new_tag];
  s.K = keep + fresh;
  s.R = detail::ratio(pos_hits, s.K);
  s.R_stab = detail::ratio(hits[TagLabel::keep], keep);
  s.R_nov = detail::ratio(hits[TagLabel::new_tag], fresh);
  std::size_t distractor_hits = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    auto l = kDistractorLabels[i];
    s.E[i] = detail::ratio(hits[l], size_of[l]);
    distractor_hits += hits[l];
  }
  s.delta = failed ? s.K : distractor_hits + s.out_of_pool;
  s.delta_gt = s.K - pos_hits;
  s.alpha = task.alpha();
  return s;
}

/// Residual of alpha*R_stab + (1-alpha)*R_nov - (1 - delta_gt/K); exact zero
/// whenever both recalls are defined.
inline OptRational verify_identity(const StepScore& s) {
  if (!s.R_stab || !s.R_nov || s.K == 0) return std::nullopt;
  Rational lhs = s.alpha * *s.R_stab + (Rational(1) - s.alpha) * *s.R_nov;
  Rational rhs = Rational(1) - Rational(static_cast<std::int64_t>(s.delta_gt), static_cast<std::int64_t>(s.K));
  return lhs - rhs;
}

inline double f1_ns(double stab, double nov) {
  if (stab + nov <= 0) return 0.0;
  return 2.0 * stab * nov / (stab + nov);
}

inline Rational f1_ns(const Rational& stab, const Rational& nov) {
  if ((stab + nov).numerator() == 0) return Rational(0);
  return Rational(2) * stab * nov / (stab + nov);
}

struct TradeoffPoint {
  double B = 0.0;
  std::optional<double> rho;  // empty with rho_infinite=false: undefined
  bool rho_infinite = false;
  double alpha = 0.0;
};

struct ExactTradeoff {
  Rational B{0};
  OptRational rho;
  bool rho_infinite = false;
  Rational alpha{0};
};

inline ExactTradeoff tradeoff_decompose(const StepScore& s) {
  if (s.K == 0) throw InvalidInput("tradeoff_decompose: K must be > 0");
  ExactTradeoff t;
  t.alpha = s.alpha;
  t.B = Rational(1) - Rational(static_cast<std::int64_t>(s.delta), static_cast<std::int64_t>(s.K));
  if (s.R_stab && s.R_nov) {
    if (*s.R_stab > 0) {
      t.rho = *s.R_nov / *s.R_stab;
    } else if (*s.R_nov > 0) {
      t.rho_infinite = true;
    }
  }
  return t;
}

inline TradeoffPoint tradeoff_decompose(double alpha, double B, double stab, double nov) {
  TradeoffPoint t;
  t.alpha = alpha;
  t.B = B;
  if (stab > 0) {
    t.rho = nov / stab;
  } else if (nov > 0) {
    t.rho_infinite = true;
  }
  return t;
}

// Aggregation -------------------------------------------------------------------

enum class Metric { R, R_stab, R_nov, E_decay, E_peer, E_viral, E_random, alpha, B };

inline constexpr std::array<Metric, 9> kAllMetrics{Metric::R,       Metric::R_stab,  Metric::R_nov,
                                                   Metric::E_decay, Metric::E_peer,  Metric::E_viral,
                                                   Metric::E_random, Metric::alpha,  Metric::B};

inline std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::R: return "R";
    case Metric::R_stab: return "R_stab";
    case Metric::R_nov: return "R_nov";
    case Metric::E_decay: return "E_decay";
    case Metric::E_peer: return "E_peer";
    case Metric::E_viral: return "E_viral";
    case Metric::E_random: return "E_random";
    case Metric::alpha: return "alpha";
    case Metric::B: return "B";
  }
  return "?";
}

inline OptRational metric_value(const StepScore& s, Metric m) {
  switch (m) {
    case Metric::R: return s.R;
    case Metric::R_stab: return s.R_stab;
    case Metric::R_nov: return s.R_nov;
    case Metric::E_decay: return s.E[0];
    case Metric::E_peer: return s.E[1];
    case Metric::E_viral: return s.E[2];
    case Metric::E_random: return s.E[3];
    case Metric::alpha:
      if (s.K == 0) return std::nullopt;
      return s.alpha;
    case Metric::B:
      if (s.K == 0) return std::nullopt;
      return tradeoff_decompose(s).B;
  }
  return std::nullopt;
}

/// Mean over each user's defined values, then over users that have any.
inline std::optional<double> two_level_macro(const std::vector<std::vector<double>>& per_user) {
  double total = 0;
  std::size_t users = 0;
  for (const auto& steps : per_user) {
    if (steps.empty()) continue;
    double sum = 0;
    for (double v : steps) sum += v;
    total += sum / static_cast<double>(steps.size());
    ++users;
  }
  if (users == 0) return std::nullopt;
  return total / static_cast<double>(users);
}

/// Mean over all steps pooled together; weights users by their step count.
inline std::optional<double> micro_average(const std::vector<std::vector<double>>& per_user) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& steps : per_user) {
    for (double v : steps) sum += v;
    n += steps.size();
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

/// Per-user step values of one metric, undefined steps dropped; users in id order.
inline std::vector<std::vector<double>> per_user_values(const std::vector<StepScore>& scores, Metric m) {
  std::map<std::string, std::vector<double>> by_user;
  for (const auto& s : scores) {
    auto& vals = by_user[s.user_id];
    if (auto v = metric_value(s, m)) vals.push_back(to_double(*v));
  }
  std::vector<std::vector<double>> out;
  for (auto& [u, v] : by_user) out.push_back(std::move(v));
  return out;
}

struct MetricRow {
  std::map<Metric, std::optional<double>> values;
  std::optional<double> f1;
  TradeoffPoint tradeoff;
  std::size_t users = 0;
  std::size_t steps = 0;
  std::size_t failed_steps = 0;

  std::optional<double> get(Metric m) const {
    auto it = values.find(m);
    return it == values.end() ? std::nullopt : it->second;
  }
};

struct AggregateReport {
  std::string agent;
  std::map<std::string, MetricRow> platforms;
  MetricRow overall;  // arithmetic mean of platform macros; F1 from overall recalls
};

inline MetricRow aggregate_rows(const std::vector<StepScore>& scores) {
  MetricRow row;
  std::set<std::string> users;
  for (const auto& s : scores) {
    users.insert(s.user_id);
    row.failed_steps += s.failed ? 1 : 0;
  }
  row.users = users.size();
  row.steps = scores.size();
  for (auto m : kAllMetrics) row.values[m] = two_level_macro(per_user_values(scores, m));
  auto stab = row.get(Metric::R_stab);
  auto nov = row.get(Metric::R_nov);
  if (stab && nov) row.f1 = f1_ns(*stab, *nov);
  if (stab && nov && row.get(Metric::alpha) && row.get(Metric::B)) {
    row.tradeoff = tradeoff_decompose(*row.get(Metric::alpha), *row.get(Metric::B), *stab, *nov);
  }
  return row;
}

/// Two-level macro per platform; the overall row averages platforms
/// arithmetically and takes F1 as the harmonic mean of the overall recalls.
inline AggregateReport aggregate(const std::vector<StepScore>& scores, std::string agent = {}) {
  AggregateReport rep;
  rep.agent = std::move(agent);
  std::map<std::string, std::vector<StepScore>> by_platform;
  for (const auto& s : scores) by_platform[s.platform_id].push_back(s);
  for (const auto& [p, ss] : by_platform) rep.platforms[p] = aggregate_rows(ss);

  for (auto m : kAllMetrics) {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& [p, row] : rep.platforms) {
      if (auto v = row.get(m)) {
        sum += *v;
        ++n;
      }
    }
    rep.overall.values[m] = n ? std::optional<double>(sum / static_cast<double>(n)) : std::nullopt;
  }
  for (const auto& [p, row] : rep.platforms) {
    rep.overall.users += row.users;
    rep.overall.steps += row.steps;
    rep.overall.failed_steps += row.failed_steps;
  }
  auto stab = rep.overall.get(Metric::R_stab);
  auto nov = rep.overall.get(Metric::R_nov);
  if (stab && nov) rep.overall.f1 = f1_ns(*stab, *nov);
  if (stab && nov && rep.overall.get(Metric::alpha) && rep.overall.get(Metric::B)) {
    rep.overall.tradeoff =
        tradeoff_decompose(*rep.overall.get(Metric::alpha), *rep.overall.get(Metric::B), *stab, *nov);
  }
  return rep;
}

// Coarse-level stability -------------------------------------------------------

using ClusterMap = std::function<std::string(const std::string&)>;

struct AlphaSample {
  std::string platform_id;
  std::string user_id;
  std::vector<std::string> history;  // anchors of batches 1..n
  std::vector<std::string> future;   // positives of step n
};

struct CoarseAlpha {
  double alpha = 0.0;
  double alpha_coarse = 0.0;
};

inline AlphaSample alpha_sample(const tasks::StepTask& t, const std::vector<std::string>& history) {
  AlphaSample s{t.platform_id, t.user.user_id, history, t.gt_keep};
  s.future.insert(s.future.end(), t.gt_new.begin(), t.gt_new.end());
  return s;
}

/// Fine alpha counts a future anchor as kept when it occurred in history;
/// coarse alpha when its cluster did. Both use the two-level macro average.
inline CoarseAlpha coarse_alpha(const std::vector<AlphaSample>& samples, const ClusterMap& cluster_of) {
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_user;
  for (const auto& s : samples) {
    if (s.future.empty()) continue;
    std::set<std::string> hist;
    std::set<std::string> hist_clusters;
    for (const auto& h : s.history) {
      hist.insert(normalize_tag(h));
      hist_clusters.insert(cluster_of(normalize_tag(h)));
    }
    std::size_t fine = 0;
    std::size_t coarse = 0;
    for (const auto& f : s.future) {
      auto t = normalize_tag(f);
      fine += hist.count(t);
      coarse += hist_clusters.count(cluster_of(t));
    }
    auto& [a, c] = by_user[s.platform_id + "\x1f" + s.user_id];
    a.push_back(static_cast<double>(fine) / static_cast<double>(s.future.size()));
    c.push_back(static_cast<double>(coarse) / static_cast<double>(s.future.size()));
  }
  std::vector<std::vector<double>> fine_vals;
  std::vector<std::vector<double>> coarse_vals;
  for (auto& [u, v] : by_user) {
    fine_vals.push_back(std::move(v.first));
    coarse_vals.push_back(std::move(v.second));
  }
  return {two_level_macro(fine_vals).value_or(0.0), two_level_macro(coarse_vals).value_or(0.0)};
}

// Geometry ------------------------------------------------------------------------

struct Point {
  double x = 0.0;  // R_stab
  double y = 0.0;  // R_nov
};

struct Geometry {
  std::vector<Point> line;  // alpha*x + (1-alpha)*y = B inside the unit box
  std::vector<Point> iso;   // f1_ns(x, y) = level
  double slope = 0.0;
};

/// Samples the budget constraint line, truncated to the feasible box, and the
/// iso-F1 contour y = c*x / (2x - c).
inline Geometry geometry_curves(double alpha, double B, double f1_level, std::size_t samples = 101) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("geometry_curves: alpha must be in (0, 1)");
  if (B < 0.0 || B > 1.0) throw InvalidInput("geometry_curves: B must be in [0, 1]");
  if (samples < 2) samples = 2;
  Geometry g;
  g.slope = -alpha / (1.0 - alpha);
  double x_lo = std::max(0.0, (B - (1.0 - alpha)) / alpha);
  double x_hi = std::min(1.0, B / alpha);
  for (std::size_t i = 0; i < samples; ++i) {
    double x = x_lo + (x_hi - x_lo) * static_cast<double>(i) / static_cast<double>(samples - 1);
    double y = (B - alpha * x) / (1.0 - alpha);
    g.line.push_back({x, std::clamp(y, 0.0, 1.0)});
  }
  const double c = f1_level;
  if (c > 0.0 && c <= 1.0) {
    double lo = c / (2.0 - c);
    for (std::size_t i = 0; i < samples; ++i) {
      double x = lo + (1.0 - lo) * static_cast<double>(i) / static_cast<double>(samples - 1);
      double denom = 2.0 * x - c;
      if (denom <= 0) continue;
      g.iso.push_back({x, std::min(1.0, c * x / denom)});
    }
  }
  return g;
}

// Serialization ------------------------------------------------------------------

inline Json rational_json(const OptRational& r) {
  if (!r) return nullptr;
  return std::to_string(r->numerator()) + "/" + std::to_string(r->denominator());
}

inline OptRational rational_from_json(const Json& j) {
  if (j.is_null()) return std::nullopt;
  auto s = j.get<std::string>();
  auto slash = s.find('/');
  if (slash == std::string::npos) throw DataError("bad rational " + s);
  return Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
}

inline void to_json(Json& j, const StepScore& s) {
  j = Json{{"platform", s.platform_id},
           {"user_id", s.user_id},
           {"step_index", s.step_index},
           {"R", rational_json(s.R)},
           {"R_stab", rational_json(s.R_stab)},
           {"R_nov", rational_json(s.R_nov)},
           {"delta", s.delta},
           {"delta_gt", s.delta_gt},
           {"E_decay", rational_json(s.E[0])},
           {"E_peer", rational_json(s.E[1])},
           {"E_viral", rational_json(s.E[2])},
           {"E_random", rational_json(s.E[3])},
           {"alpha", rational_json(s.alpha)},
           {"K", s.K},
           {"out_of_pool", s.out_of_pool},
           {"failed", s.failed}};
}

inline void from_json(const Json& j, StepScore& s) {
  s.platform_id = j.at("platform").get<std::string>();
  s.user_id = j.at("user_id").get<std::string>();
  s.step_index = j.at("step_index").get<std::size_t>();
  s.R = rational_from_json(j.at("R"));
  s.R_stab = rational_from_json(j.at("R_stab"));
  s.R_nov = rational_from_json(j.at("R_nov"));
  s.delta = j.at("delta").get<std::size_t>();
  s.delta_gt = j.at("delta_gt").get<std::size_t>();
  s.E[0] = rational_from_json(j.at("E_decay"));
  s.E[1] = rational_from_json(j.at("E_peer"));
  s.E[2] = rational_from_json(j.at("E_viral"));
  s.E[3] = rational_from_json(j.at("E_random"));
  s.alpha = rational_from_json(j.at("alpha")).value_or(Rational(0));
  s.K = j.at("K").get<std::size_t>();
  s.out_of_pool = j.at("out_of_pool").get<std::size_t>();
  s.failed = j.at("failed").get<bool>();
}

inline Json row_json(const MetricRow& row) {
  Json j = Json::object();
  for (const auto& [m, v] : row.values) j[std::string(metric_name(m))] = v ? Json(*v) : Json(nullptr);
  j["F1_NS"] = row.f1 ? Json(*row.f1) : Json(nullptr);
  j["users"] = row.users;
  j["steps"] = row.steps;
  j["failed_steps"] = row.failed_steps;
  j["rho"] = row.tradeoff.rho_infinite ? Json("inf") : (row.tradeoff.rho ? Json(*row.tradeoff.rho) : Json(nullptr));
  return j;
}

inline Json report_json(const AggregateReport& r) {
  Json platforms = Json::object();
  for (const auto& [p, row] : r.platforms) platforms[p] = row_json(row);
  return Json{{"agent", r.agent}, {"platforms", platforms}, {"overall", row_json(r.overall)}};
}

}  // namespace streamprofile::metrics
