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

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "streamprofile/anchors.hpp"
#include "streamprofile/buffer.hpp"
#include "streamprofile/chat.hpp"
#include "streamprofile/cluster.hpp"
#include "streamprofile/core.hpp"
#include "streamprofile/embedding.hpp"
#include "streamprofile/filter.hpp"
#include "streamprofile/harness.hpp"
#include "streamprofile/ingest.hpp"
#include "streamprofile/metrics.hpp"
#include "streamprofile/tasks.hpp"
#include "streamprofile/trending.hpp"

namespace streamprofile::pipeline {

struct PipelineConfig {
  PlatformProfile profile = platform_profile("xiaohongshu");
  filter::CoarseFilterConfig coarse;
  std::optional<filter::StrataConfig> strata;  // platform defaults when empty
  bool reaudit = true;
  harness::Granularity granularity = harness::Granularity::standard;
  std::size_t trending_sample = 0;  // posts sampled per day; 0 samples every post
  Rational tau = trending::kDefaultTau;
  cluster::KMeansConfig kmeans;
  std::size_t embedding_dim = 512;
  std::uint64_t seed = 0;
  std::size_t max_positives = 12;

  filter::StrataConfig effective_strata() const {
    return strata ? *strata : filter::default_strata(profile, seed);
  }
  tasks::TaskBuilderConfig builder() const { return {seed, max_positives}; }
  PlatformProfile buffer_profile() const {
    return profile.with_trigger(harness::granularity_trigger(granularity, profile));
  }
};

inline void to_json(Json& j, const PipelineConfig& c) {
  j = Json{{"platform", c.profile},
           {"coarse_filter", c.coarse},
           {"strata", c.effective_strata()},
           {"reaudit", c.reaudit},
           {"granularity", c.granularity},
           {"trending_sample", c.trending_sample},
           {"tau", rational_string(c.tau)},
           {"kmeans",
            {{"batch_size", c.kmeans.batch_size},
             {"max_iterations", c.kmeans.max_iterations},
             {"n_init", c.kmeans.n_init},
             {"seed", c.kmeans.seed}}},
           {"embedding_dim", c.embedding_dim},
           {"seed", c.seed},
           {"max_positives", c.max_positives}};
}

inline void from_json(const Json& j, PipelineConfig& c) {
  if (j.contains("platform")) {
    const auto& p = j["platform"];
    c.profile = p.is_string() ? platform_profile(p.get<std::string>()) : profile_from_json(p);
  }
  streamprofile::detail::get_opt(j, "coarse_filter", c.coarse);
  if (j.contains("strata")) c.strata = j["strata"].get<filter::StrataConfig>();
  streamprofile::detail::get_opt(j, "reaudit", c.reaudit);
  streamprofile::detail::get_opt(j, "granularity", c.granularity);
  streamprofile::detail::get_opt(j, "trending_sample", c.trending_sample);
  if (j.contains("tau")) c.tau = parse_rational(j["tau"]);
  if (c.tau <= 0) throw InvalidInput("tau must be > 0");
  if (j.contains("kmeans")) {
    const auto& k = j["kmeans"];
    streamprofile::detail::get_opt(k, "batch_size", c.kmeans.batch_size);
    streamprofile::detail::get_opt(k, "max_iterations", c.kmeans.max_iterations);
    streamprofile::detail::get_opt(k, "n_init", c.kmeans.n_init);
    streamprofile::detail::get_opt(k, "seed", c.kmeans.seed);
  }
  streamprofile::detail::get_opt(j, "embedding_dim", c.embedding_dim);
  streamprofile::detail::get_opt(j, "seed", c.seed);
  streamprofile::detail::get_opt(j, "max_positives", c.max_positives);
  if (c.embedding_dim < 1 || c.max_positives < 1) throw InvalidInput("embedding_dim and max_positives must be >= 1");
}

// Trending ------------------------------------------------------------------------

struct TrendingResult {
  std::map<std::string, trending::TrendingTable> tables;  // by date
  anchors::Blacklist blacklist;                           // empty unless the platform uses one
};

/// Daily coverage tables over the extracted anchors of every ingested post,
/// and the cumulative blacklist for platforms that apply it.
inline TrendingResult build_trending(const std::vector<UserStream>& corpus, const PipelineConfig& cfg) {
  std::map<std::string, std::vector<std::vector<std::string>>> by_day;
  auto profile = cfg.profile;
  profile.use_trending_blacklist = false;
  for (const auto& u : corpus) {
    for (const auto& p : u.posts) {
      std::vector<std::string> tags;
      for (auto& a : anchors::post_anchors(p, profile, {})) tags.push_back(std::move(a.text));
      by_day[text::format_date(p.timestamp)].push_back(std::move(tags));
    }
  }
  TrendingResult res;
  for (auto& [date, posts] : by_day) {
    if (cfg.trending_sample > 0 && posts.size() > cfg.trending_sample) {
      posts = trending::sample_posts(posts, cfg.trending_sample, derive_seed(cfg.seed, "trending:" + date));
    }
    auto table = trending::sample_coverage(posts, date);
    if (cfg.profile.use_trending_blacklist) trending::update_blacklist(table, cfg.tau, res.blacklist);
    res.tables.emplace(date, std::move(table));
  }
  return res;
}

/// Mean daily coverage per tag, used by the popularity oracle.
inline std::map<std::string, double> popularity(const std::map<std::string, trending::TrendingTable>& tables) {
  std::map<std::string, double> out;
  if (tables.empty()) return out;
  for (const auto& [date, t] : tables) {
    for (const auto& e : t.entries) out[e.tag] += to_double(t.coverage(e));
  }
  for (auto& [tag, v] : out) v /= static_cast<double>(tables.size());
  return out;
}

// Filtering -------------------------------------------------------------------------

struct FilterResult {
  std::vector<UserStream> coarse;  // every user, kept days only, anchors attached
  std::vector<filter::UserActivitySummary> summaries;
  std::vector<std::string> selected;  // longitudinal sample, after the audit when one ran
  std::map<std::string, std::size_t> drop_counts;
  std::map<std::string, filter::AuditOutcome> audits;

  std::vector<UserStream> selected_streams() const {
    std::set<std::string> ids(selected.begin(), selected.end());
    std::vector<UserStream> out;
    for (const auto& u : coarse) {
      if (ids.count(u.meta.user_id)) out.push_back(u);
    }
    return out;
  }
};

struct Judge {
  chat::Client* client = nullptr;
  chat::ModelClientConfig config;
  bool keep_unaudited = false;
};

inline FilterResult run_filter(const std::vector<UserStream>& corpus, const PipelineConfig& cfg,
                               const anchors::Blacklist& blacklist, const std::optional<Judge>& judge = std::nullopt) {
  FilterResult res;
  for (const auto& u : corpus) {
    auto r = filter::filter_user(u, cfg.profile, cfg.coarse, blacklist);
    for (const auto& d : r.days) {
      if (d.dropped) ++res.drop_counts[std::string(filter::reason_name(*d.dropped))];
    }
    res.summaries.push_back(r.summary);
    res.coarse.push_back(std::move(r.stream));
  }
  res.selected = filter::longitudinal_filter(res.summaries, cfg.effective_strata());
  if (judge && judge->client) {
    std::set<std::string> ids(res.selected.begin(), res.selected.end());
    std::vector<std::string> kept;
    for (const auto& u : res.coarse) {
      if (!ids.count(u.meta.user_id)) continue;
      auto outcome = filter::audit_user(u, *judge->client, judge->config);
      if (outcome.keep(judge->keep_unaudited)) kept.push_back(u.meta.user_id);
      res.audits.emplace(u.meta.user_id, std::move(outcome));
    }
    res.selected = std::move(kept);
  }
  return res;
}

// Buffering ----------------------------------------------------------------------------

struct BufferedUser {
  UserMeta meta;
  std::vector<StreamBatch> batches;
};

struct BufferResult {
  std::vector<BufferedUser> users;  // unflagged users, by user id
  std::vector<buffer::BufferState> states;
  std::vector<std::string> flagged;
  std::size_t discarded = 0;
};

inline BufferResult run_buffer(const std::vector<UserStream>& users, const PipelineConfig& cfg) {
  BufferResult res;
  const auto profile = cfg.buffer_profile();
  for (const auto& u : users) {
    auto run = buffer::run_user(u, profile, {cfg.reaudit});
    res.discarded += run.discarded;
    if (run.final_state.flagged) {
      res.flagged.push_back(u.meta.user_id);
    } else {
      res.users.push_back({u.meta, std::move(run.batches)});
    }
    res.states.push_back(std::move(run.final_state));
  }
  return res;
}

// Index ------------------------------------------------------------------------------

/// Registry over every anchor that survived coarse filtering, a base
/// clustering of the frequent tags and incremental placement of the rest.
inline cluster::ClusterIndex build_index(const std::vector<UserStream>& coarse, const PipelineConfig& cfg,
                                         const Embedder& embedder) {
  cluster::TagRegistry registry;
  for (const auto& u : coarse) {
    for (const auto& p : u.posts) {
      for (const auto& a : p.anchors) registry.observe(a, text::format_date(p.timestamp));
    }
  }
  auto kmeans = cfg.kmeans;
  kmeans.seed = derive_seed(cfg.seed, kmeans.seed);
  auto index = cluster::base_cluster(registry, embedder, cfg.profile, kmeans);
  std::vector<std::string> rest;
  for (const auto& [tag, e] : registry.entries()) {
    if (!index.cluster_of(tag)) rest.push_back(tag);
  }
  cluster::assign_incremental(index, rest, embedder);
  return index;
}

inline std::vector<std::string> global_pool(const cluster::ClusterIndex& index) {
  return index.registry().eligible(1);
}

// Tasks ------------------------------------------------------------------------------

inline std::vector<std::vector<tasks::StepTask>> build_tasks(const BufferResult& buffered,
                                                             const cluster::ClusterIndex& index,
                                                             const std::map<std::string, trending::TrendingTable>& tables,
                                                             const PipelineConfig& cfg) {
  const auto pool = global_pool(index);
  tasks::DistractorSources src{&index, nullptr, &pool};
  std::vector<std::vector<tasks::StepTask>> out;
  for (const auto& u : buffered.users) {
    auto t = tasks::build_user_tasks(cfg.profile.platform_id, u.meta, u.batches, src, cfg.builder(), &tables);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

// Scoring ------------------------------------------------------------------------------

/// Scores each transcript record against its task. Records without a task
/// are a data error.
inline std::vector<metrics::StepScore> score_records(const std::vector<std::vector<tasks::StepTask>>& users,
                                                     const std::vector<harness::StepRecord>& records) {
  std::map<std::pair<std::string, std::size_t>, const tasks::StepTask*> by_key;
  for (const auto& u : users) {
    for (const auto& t : u) by_key[{t.user.user_id, t.step_index}] = &t;
  }
  std::vector<metrics::StepScore> out;
  for (const auto& r : records) {
    auto it = by_key.find({r.user_id, r.step_index});
    if (it == by_key.end()) {
      throw DataError("transcript record " + r.user_id + "#" + std::to_string(r.step_index) + " has no task");
    }
    out.push_back(metrics::score_step(*it->second, r.prediction, r.failed()));
  }
  return out;
}

// End to end ---------------------------------------------------------------------------

struct Benchmark {
  PipelineConfig config;
  TrendingResult trending;
  FilterResult filtered;
  BufferResult buffered;
  cluster::ClusterIndex index;
  std::vector<std::vector<tasks::StepTask>> tasks;

  std::size_t step_count() const {
    std::size_t n = 0;
    for (const auto& u : tasks) n += u.size();
    return n;
  }
};

inline Benchmark build_benchmark(const std::vector<UserStream>& corpus, const PipelineConfig& cfg,
                                 const Embedder& embedder) {
  Benchmark b;
  b.config = cfg;
  b.trending = build_trending(corpus, cfg);
  b.filtered = run_filter(corpus, cfg, b.trending.blacklist);
  b.buffered = run_buffer(b.filtered.selected_streams(), cfg);
  b.index = build_index(b.filtered.coarse, cfg, embedder);
  b.tasks = build_tasks(b.buffered, b.index, b.trending.tables, cfg);
  return b;
}

struct Evaluation {
  std::vector<harness::StepRecord> records;
  std::vector<metrics::StepScore> scores;
  metrics::AggregateReport report;
};

inline Evaluation evaluate(const Benchmark& b, harness::Agent& agent, const harness::RunMode& mode = {},
                           std::size_t max_in_flight = 1) {
  Evaluation e;
  e.records = harness::run_all(b.tasks, agent, mode, max_in_flight);
  e.scores = score_records(b.tasks, e.records);
  e.report = metrics::aggregate(e.scores, agent.name());
  return e;
}

}  // namespace streamprofile::pipeline
