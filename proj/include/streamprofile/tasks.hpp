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
#include <map>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "streamprofile/cluster.hpp"
#include "streamprofile/core.hpp"
#include "streamprofile/random.hpp"
#include "streamprofile/trending.hpp"

namespace streamprofile::tasks {

struct StepTask {
  std::string platform_id;
  UserMeta user;
  std::size_t step_index = 0;
  StreamBatch input_batch;
  CandidatePool pool;
  std::vector<std::string> gt_keep;
  std::vector<std::string> gt_new;

  Rational alpha() const {
    auto total = gt_keep.size() + gt_new.size();
    if (total == 0) return Rational(0);
    return Rational(static_cast<std::int64_t>(gt_keep.size()), static_cast<std::int64_t>(total));
  }
};

using TagSet = std::set<std::string>;

namespace detail {
inline TagSet normalized_set(const std::vector<std::string>& tags) {
  TagSet s;
  for (const auto& t : tags) s.insert(normalize_tag(t));
  return s;
}
}  // namespace detail

struct GroundTruth {
  std::vector<std::string> keep;
  std::vector<std::string> fresh;
};

/// T_keep = future ∩ history, T_new = future \ history, in future order.
inline GroundTruth split_ground_truth(const std::vector<std::string>& history, const std::vector<std::string>& future) {
  auto hist = detail::normalized_set(history);
  GroundTruth gt;
  TagSet seen;
  for (const auto& raw : future) {
    auto t = normalize_tag(raw);
    if (t.empty() || !seen.insert(t).second) continue;
    (hist.count(t) ? gt.keep : gt.fresh).push_back(t);
  }
  return gt;
}

/// History anchors absent from the future batch, by historical frequency
/// descending then lexicographically.
inline std::vector<std::string> build_decay_candidates(const std::map<std::string, std::size_t>& history_freq,
                                                       const std::vector<std::string>& future) {
  auto fut = detail::normalized_set(future);
  std::vector<std::pair<std::string, std::size_t>> c;
  for (const auto& [tag, f] : history_freq) {
    if (!fut.count(normalize_tag(tag))) c.emplace_back(normalize_tag(tag), f);
  }
  std::stable_sort(c.begin(), c.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (auto& [t, f] : c) out.push_back(std::move(t));
  return out;
}

inline constexpr std::array<TagLabel, 4> kFillOrder{TagLabel::decay, TagLabel::peer, TagLabel::viral,
                                                   TagLabel::random};

/// Splits `total` slots as evenly as possible across classes in kFillOrder,
/// capping each at its availability and redistributing the shortfall
/// uniformly over the classes that still have candidates.
inline std::array<std::size_t, 4> water_fill(std::size_t total, const std::array<std::size_t, 4>& available) {
  std::array<std::size_t, 4> alloc{};
  std::size_t remaining = total;
  while (remaining > 0) {
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < 4; ++i) {
      if (alloc[i] < available[i]) open.push_back(i);
    }
    if (open.empty()) break;
    std::size_t share = remaining / open.size();
    std::size_t extra = remaining % open.size();
    for (std::size_t j = 0; j < open.size(); ++j) {
      auto i = open[j];
      std::size_t want = share + (j < extra ? 1 : 0);
      std::size_t give = std::min(want, available[i] - alloc[i]);
      alloc[i] += give;
      remaining -= give;
    }
  }
  if (remaining > 0) {
    throw DataError("not enough distractor candidates: need " + std::to_string(total) + ", short by " +
                    std::to_string(remaining));
  }
  return alloc;
}

struct DistractorSources {
  const cluster::ClusterIndex* index = nullptr;
  const trending::TrendingTable* trending = nullptr;
  const std::vector<std::string>* global_pool = nullptr;
};

struct UserContext {
  TagSet engaged;  // every anchor of the user's history and future batch
  std::map<std::string, std::size_t> history_freq;
};

struct DistractorCandidates {
  std::vector<std::string> decay;
  std::vector<std::string> peer;
  std::vector<std::string> viral;
  std::vector<std::string> random;  // shuffled with the task seed

  const std::vector<std::string>& of(TagLabel l) const {
    switch (l) {
      case TagLabel::decay: return decay;
      case TagLabel::peer: return peer;
      case TagLabel::viral: return viral;
      default: return random;
    }
  }
};

/// Disjoint eligibility lists for the four families.
inline DistractorCandidates eligible_distractors(const GroundTruth& gt, const std::vector<std::string>& future,
                                                 const UserContext& user, const DistractorSources& src,
                                                 std::uint64_t seed) {
  DistractorCandidates c;
  TagSet taken;
  for (const auto& t : gt.keep) taken.insert(t);
  for (const auto& t : gt.fresh) taken.insert(t);

  for (auto& t : build_decay_candidates(user.history_freq, future)) {
    if (taken.insert(t).second) c.decay.push_back(std::move(t));
  }

  TagSet user_clusters;
  if (src.index) {
    TagSet exclude = user.engaged;
    exclude.insert(taken.begin(), taken.end());
    std::vector<std::string> positives = gt.keep;
    positives.insert(positives.end(), gt.fresh.begin(), gt.fresh.end());
    for (const auto& p : positives) {
      for (auto& t : cluster::peer_lookup(*src.index, p, exclude)) {
        if (taken.insert(t).second) c.peer.push_back(std::move(t));
      }
    }
    for (const auto& t : user.engaged) {
      auto k = src.index->cluster_of(t);
      if (k && *k != cluster::kOutlierCluster) user_clusters.insert(src.index->cluster_key(t));
    }
  }

  if (src.trending) {
    for (const auto& e : src.trending->entries) {
      if (user.engaged.count(e.tag) || taken.count(e.tag)) continue;
      if (src.index && user_clusters.count(src.index->cluster_key(e.tag))) continue;
      taken.insert(e.tag);
      c.viral.push_back(e.tag);
    }
  }

  if (src.global_pool) {
    std::vector<std::string> pool;
    for (const auto& t : *src.global_pool) {
      if (!user.engaged.count(t) && !taken.count(t)) pool.push_back(t);
    }
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    Rng rng(derive_seed(seed, "random"));
    rng.shuffle(pool);
    c.random = std::move(pool);
  }
  return c;
}

/// Exactly 3 * positives distractors, labelled, in class order.
inline std::vector<LabeledTag> build_distractors(std::size_t positives, const DistractorCandidates& c) {
  std::array<std::size_t, 4> available{c.decay.size(), c.peer.size(), c.viral.size(), c.random.size()};
  auto alloc = water_fill(3 * positives, available);
  std::vector<LabeledTag> out;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& list = c.of(kFillOrder[i]);
    for (std::size_t j = 0; j < alloc[i]; ++j) out.push_back({list[j], kFillOrder[i]});
  }
  return out;
}

/// Keeps at most `max_positives`, preserving the keep/new proportion.
inline GroundTruth cap_positives(GroundTruth gt, std::size_t max_positives, std::uint64_t seed) {
  auto total = gt.keep.size() + gt.fresh.size();
  if (total <= max_positives) return gt;
  auto keep_n = static_cast<std::size_t>(
      std::floor(static_cast<double>(max_positives * gt.keep.size()) / static_cast<double>(total) + 0.5));
  keep_n = std::min(keep_n, gt.keep.size());
  auto new_n = std::min(max_positives - keep_n, gt.fresh.size());
  Rng rng(derive_seed(seed, "positives"));
  auto pick = [&](std::vector<std::string> v, std::size_t n) {
    std::sort(v.begin(), v.end());
    return rng.sample(std::move(v), n);
  };
  gt.keep = pick(std::move(gt.keep), keep_n);
  gt.fresh = pick(std::move(gt.fresh), new_n);
  return gt;
}

inline StepTask assemble_task(const StreamBatch& batch, const GroundTruth& gt, const std::vector<LabeledTag>& distractors,
                              std::uint64_t seed) {
  StepTask task;
  task.step_index = batch.step_index;
  task.input_batch = batch;
  task.gt_keep = gt.keep;
  task.gt_new = gt.fresh;
  std::set<std::string> seen;
  auto add = [&](const std::string& tag, TagLabel label) {
    if (!seen.insert(normalize_tag(tag)).second) throw DataError("duplicate tag in candidate pool: " + tag);
    task.pool.tags.push_back({tag, label});
  };
  for (const auto& t : gt.keep) add(t, TagLabel::keep);
  for (const auto& t : gt.fresh) add(t, TagLabel::new_tag);
  for (const auto& d : distractors) {
    if (is_positive(d.label)) throw DataError("distractor carries a positive label: " + d.tag);
    add(d.tag, d.label);
  }
  if (task.pool.tags.empty()) throw DataError("empty candidate pool");
  Rng rng(derive_seed(seed, "shuffle"));
  rng.shuffle(task.pool.tags);
  task.pool.k = selection_budget(task.pool.tags.size());
  return task;
}

struct TaskBuilderConfig {
  std::uint64_t seed = 0;
  std::size_t max_positives = 12;
};

inline void to_json(Json& j, const TaskBuilderConfig& c) {
  j = Json{{"seed", c.seed}, {"max_positives", c.max_positives}};
}
inline void from_json(const Json& j, TaskBuilderConfig& c) {
  streamprofile::detail::get_opt(j, "seed", c.seed);
  streamprofile::detail::get_opt(j, "max_positives", c.max_positives);
  if (c.max_positives < 1) throw InvalidInput("max_positives must be >= 1");
}

/// Seed for one (user, step) task.
inline std::uint64_t task_seed(std::uint64_t seed, const std::string& user_id, std::size_t step) {
  return derive_seed(derive_seed(seed, user_id), step);
}

/// One task per batch n whose successor n+1 carries anchors: m batches give
/// m-1 tasks when every future batch is non-empty.
inline std::vector<StepTask> build_user_tasks(const std::string& platform_id, const UserMeta& user,
                                              const std::vector<StreamBatch>& batches,
                                              const DistractorSources& src, const TaskBuilderConfig& cfg,
                                              const std::map<std::string, trending::TrendingTable>* tables = nullptr) {
  std::vector<StepTask> out;
  std::map<std::string, std::size_t> freq;
  std::vector<std::string> history;
  for (std::size_t n = 0; n + 1 < batches.size(); ++n) {
    for (const auto& p : batches[n].posts) {
      for (const auto& a : p.anchors) ++freq[normalize_tag(a)];
    }
    for (const auto& a : batches[n].anchors) history.push_back(a);
    const auto& future = batches[n + 1].anchors;
    if (future.empty()) continue;

    auto seed = task_seed(cfg.seed, user.user_id, batches[n].step_index);
    auto gt = cap_positives(split_ground_truth(history, future), cfg.max_positives, seed);
    UserContext ctx;
    ctx.history_freq = freq;
    for (const auto& [t, f] : freq) ctx.engaged.insert(t);
    for (const auto& t : history) ctx.engaged.insert(normalize_tag(t));
    for (const auto& t : future) ctx.engaged.insert(normalize_tag(t));

    DistractorSources day_src = src;
    if (tables) {
      if (auto* t = trending::table_for(*tables, text::format_date(batches[n].window_end))) day_src.trending = t;
    }
    auto candidates = eligible_distractors(gt, future, ctx, day_src, seed);
    auto distractors = build_distractors(gt.keep.size() + gt.fresh.size(), candidates);
    auto task = assemble_task(batches[n], gt, distractors, seed);
    task.platform_id = platform_id;
    task.user = user;
    out.push_back(std::move(task));
  }
  return out;
}

// Serialization ----------------------------------------------------------------

/// What the agent sees: no labels, no ground truth. Batch anchors stay since
/// they are derived from the visible post text.
inline Json agent_view(const StepTask& t) {
  return Json{{"platform", t.platform_id},
              {"user", t.user},
              {"step_index", t.step_index},
              {"batch", t.input_batch},
              {"pool", t.pool.tag_strings()},
              {"k", t.pool.k}};
}

inline Json answer_key(const StepTask& t) {
  return Json{{"user_id", t.user.user_id},
              {"step_index", t.step_index},
              {"labels", t.pool.tags},
              {"gt_keep", t.gt_keep},
              {"gt_new", t.gt_new}};
}

/// Rejoins an agent-view record with its answer key.
inline StepTask join(const Json& view, const Json& key) {
  StepTask t;
  t.platform_id = view.at("platform").get<std::string>();
  t.user = view.at("user").get<UserMeta>();
  t.step_index = view.at("step_index").get<std::size_t>();
  if (key.at("user_id").get<std::string>() != t.user.user_id || key.at("step_index").get<std::size_t>() != t.step_index) {
    throw DataError("answer key does not match task " + t.user.user_id + "#" + std::to_string(t.step_index));
  }
  t.input_batch = view.at("batch").get<StreamBatch>();
  t.pool.tags = key.at("labels").get<std::vector<LabeledTag>>();
  t.pool.k = view.at("k").get<std::size_t>();
  t.gt_keep = key.at("gt_keep").get<std::vector<std::string>>();
  t.gt_new = key.at("gt_new").get<std::vector<std::string>>();
  if (t.pool.tag_strings() != view.at("pool").get<std::vector<std::string>>()) {
    throw DataError("answer key pool order differs from agent view");
  }
  return t;
}

}  // namespace streamprofile::tasks
