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
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "streamprofile/anchors.hpp"
#include "streamprofile/core.hpp"
#include "streamprofile/harness.hpp"
#include "streamprofile/ingest.hpp"
#include "streamprofile/metrics.hpp"
#include "streamprofile/pipeline.hpp"
#include "streamprofile/random.hpp"
#include "streamprofile/tasks.hpp"
#include "streamprofile/text.hpp"

namespace streamprofile::synth {

/// Inclusive integer range sampled uniformly.
struct IntRange {
  std::size_t lo = 1;
  std::size_t hi = 1;

  std::size_t draw(Rng& rng) const { return lo + rng.index(hi - lo + 1); }
};

inline void to_json(Json& j, const IntRange& r) { j = Json::array({r.lo, r.hi}); }
inline void from_json(const Json& j, IntRange& r) {
  if (j.is_number()) {
    r.lo = r.hi = j.get<std::size_t>();
  } else {
    r.lo = j.at(0).get<std::size_t>();
    r.hi = j.at(1).get<std::size_t>();
  }
}

struct DriftConfig {
  std::uint64_t seed = 1;
  std::string platform_id = "xiaohongshu";
  std::size_t users = 200;
  IntRange steps{6, 10};  // batches per user, one calendar day each
  IntRange initial_interests{2, 3};
  std::size_t max_interests = 8;
  Rational keep_probability{3, 10};
  Rational decay_half_life{4};  // steps
  Rational novelty_rate{7, 2};  // expected arrivals per step
  double home_cluster_bias = 0.6;
  std::size_t home_clusters = 2;
  std::size_t cluster_count = 40;
  std::size_t tags_per_cluster = 12;
  IntRange posts_per_interest{1, 2};
  // One-day crowd accounts that make viral topics trend; the longitudinal
  // floor removes them before task building.
  std::size_t crowd_users_per_day = 12;
  std::size_t crowd_posts_per_user = 4;
  std::size_t viral_topics = 24;
  std::string start_date = "2025-06-01";

  void validate(const PlatformProfile& profile) const {
    auto in_unit = [](const Rational& r) { return r >= 0 && r <= 1; };
    if (users < 1) throw InvalidInput("users must be >= 1");
    if (steps.lo < 1 || steps.lo > steps.hi) throw InvalidInput("steps range must satisfy 1 <= lo <= hi");
    if (initial_interests.hi < 1 || initial_interests.lo > initial_interests.hi) {
      throw InvalidInput("interests per step must be >= 1");
    }
    if (max_interests < initial_interests.hi) throw InvalidInput("max_interests below initial interests");
    if (max_interests > profile.buffer_cap) {
      throw InvalidInput("max_interests exceeds the buffer cap, so some interests could not post every step");
    }
    if (!in_unit(keep_probability)) throw InvalidInput("keep_probability must be in [0, 1]");
    if (decay_half_life <= 0) throw InvalidInput("decay_half_life must be positive");
    if (novelty_rate < 0) throw InvalidInput("novelty_rate must be non-negative");
    if (home_cluster_bias < 0 || home_cluster_bias > 1) throw InvalidInput("home_cluster_bias must be in [0, 1]");
    if (cluster_count < 1 || tags_per_cluster < 1) throw InvalidInput("cluster structure counts must be >= 1");
    if (posts_per_interest.lo < 1 || posts_per_interest.lo > posts_per_interest.hi) {
      throw InvalidInput("posts per interest must be >= 1");
    }
    if (crowd_users_per_day > 0 && (viral_topics < 1 || crowd_posts_per_user < 1)) {
      throw InvalidInput("crowd needs viral topics and posts");
    }
    Timestamp t;
    if (!text::parse_timestamp(start_date + "T00:00:00Z", t)) throw InvalidInput("bad start_date: " + start_date);
  }
};

inline void to_json(Json& j, const DriftConfig& c) {
  j = Json{{"seed", c.seed},
           {"platform_id", c.platform_id},
           {"users", c.users},
           {"steps", c.steps},
           {"initial_interests", c.initial_interests},
           {"max_interests", c.max_interests},
           {"keep_probability", rational_string(c.keep_probability)},
           {"decay_half_life", rational_string(c.decay_half_life)},
           {"novelty_rate", rational_string(c.novelty_rate)},
           {"home_cluster_bias", c.home_cluster_bias},
           {"home_clusters", c.home_clusters},
           {"cluster_count", c.cluster_count},
           {"tags_per_cluster", c.tags_per_cluster},
           {"posts_per_interest", c.posts_per_interest},
           {"crowd_users_per_day", c.crowd_users_per_day},
           {"crowd_posts_per_user", c.crowd_posts_per_user},
           {"viral_topics", c.viral_topics},
           {"start_date", c.start_date}};
}

inline void from_json(const Json& j, DriftConfig& c) {
  streamprofile::detail::get_opt(j, "seed", c.seed);
  streamprofile::detail::get_opt(j, "platform_id", c.platform_id);
  streamprofile::detail::get_opt(j, "users", c.users);
  streamprofile::detail::get_opt(j, "steps", c.steps);
  streamprofile::detail::get_opt(j, "initial_interests", c.initial_interests);
  streamprofile::detail::get_opt(j, "max_interests", c.max_interests);
  if (j.contains("keep_probability")) c.keep_probability = parse_rational(j["keep_probability"]);
  if (j.contains("decay_half_life")) c.decay_half_life = parse_rational(j["decay_half_life"]);
  if (j.contains("novelty_rate")) c.novelty_rate = parse_rational(j["novelty_rate"]);
  streamprofile::detail::get_opt(j, "home_cluster_bias", c.home_cluster_bias);
  streamprofile::detail::get_opt(j, "home_clusters", c.home_clusters);
  streamprofile::detail::get_opt(j, "cluster_count", c.cluster_count);
  streamprofile::detail::get_opt(j, "tags_per_cluster", c.tags_per_cluster);
  streamprofile::detail::get_opt(j, "posts_per_interest", c.posts_per_interest);
  streamprofile::detail::get_opt(j, "crowd_users_per_day", c.crowd_users_per_day);
  streamprofile::detail::get_opt(j, "crowd_posts_per_user", c.crowd_posts_per_user);
  streamprofile::detail::get_opt(j, "viral_topics", c.viral_topics);
  streamprofile::detail::get_opt(j, "start_date", c.start_date);
}

// Vocabulary -------------------------------------------------------------------

namespace detail {

inline constexpr std::string_view kStemChars =
    "山河风雨花草星月云海湖江林森石木火光雪霜竹松梅兰菊桃李杏柳枫叶春夏秋冬晨夕朝暮"
    "金银铜铁玉珠琴棋书画诗词歌舞茶酒米面糖果蔬菜鱼虾蟹鸡鸭牛羊猫狗马鹿熊虎龙凤鹤燕"
    "城乡街巷桥塔楼阁园庭院宫殿寺庙村镇岛港湾峰谷岭坡原野田池泉溪瀑洞岩沙丘漠";
inline constexpr std::string_view kSuffixChars = "日记攻略指南心得合集教程推荐分享测评清单打卡笔记故事";
inline constexpr std::string_view kViralChars = "热搜爆料官宣首发突发直播现场名场面全网刷屏年度";
inline constexpr std::string_view kWords =
    "今天|周末|终于|真的|感觉|不错|有点|一起|朋友|下午|晚上|早上|出门|回家|记录|慢慢|"
    "认真|随手|开心|放松|努力|坚持|第一次|又一次|路上|窗外|阳光|小雨|安静|热闹|新鲜|"
    "喜欢|期待|收获|惊喜|平常|简单|舒服|满足|顺便|附近|偶然|发现|尝试|计划|完成|整理|"
    "分享|推荐|值得|体验|感受|想法|问题|答案|方法|时间|地方|味道|颜色|声音|心情|生活";

inline std::vector<std::string> split_chars(std::string_view s) {
  std::vector<std::string> out;
  for (char32_t c : text::decode_utf8(s)) {
    std::string one;
    text::append_utf8(one, c);
    out.push_back(std::move(one));
  }
  return out;
}

inline std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto bar = s.find('|', pos);
    if (bar == std::string_view::npos) bar = s.size();
    if (bar > pos) out.emplace_back(s.substr(pos, bar - pos));
    pos = bar + 1;
  }
  return out;
}

inline std::string draw_chars(const std::vector<std::string>& bank, std::size_t n, Rng& rng) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += bank[rng.index(bank.size())];
  return s;
}

}  // namespace detail

/// Cluster-structured tag bodies: members of a cluster share a three
/// character stem and differ in a two character suffix.
struct Vocabulary {
  std::vector<std::vector<std::string>> clusters;
  std::vector<std::string> viral;
};

inline Vocabulary build_vocabulary(const DriftConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, "vocabulary"));
  const auto stems = detail::split_chars(detail::kStemChars);
  const auto suffixes = detail::split_chars(detail::kSuffixChars);
  const auto viral = detail::split_chars(detail::kViralChars);
  Vocabulary v;
  std::set<std::string> used_stems;
  std::set<std::string> used_tags;
  while (v.clusters.size() < cfg.cluster_count) {
    auto stem = detail::draw_chars(stems, 3, rng);
    if (!used_stems.insert(stem).second) continue;
    std::vector<std::string> members;
    for (std::size_t guard = 0; members.size() < cfg.tags_per_cluster; ++guard) {
      if (guard > 100 * cfg.tags_per_cluster) throw InvalidInput("tags_per_cluster too large for the suffix bank");
      auto tag = stem + detail::draw_chars(suffixes, 2, rng);
      if (used_tags.insert(tag).second) members.push_back(std::move(tag));
    }
    v.clusters.push_back(std::move(members));
  }
  while (v.viral.size() < cfg.viral_topics) {
    auto tag = detail::draw_chars(viral, 4, rng) + detail::draw_chars(stems, 1, rng);
    if (used_tags.insert(tag).second) v.viral.push_back(std::move(tag));
  }
  return v;
}

// Rendering --------------------------------------------------------------------

inline constexpr std::array<std::string_view, 5> kItemActions{"watched", "want_to_watch", "read", "want_to_read",
                                                            "listened"};

/// Anchor string a post about `body` carries after extraction on this platform.
inline std::string anchor_for(const PlatformProfile& profile, std::string_view body, std::string_view action) {
  if (profile.anchor_rule == AnchorRule::item_action) return anchors::item_action_anchor(action, body);
  return std::string(body);
}

namespace detail {

inline std::string filler(Rng& rng, std::size_t words) {
  static const auto bank = split_words(kWords);
  std::string s;
  for (std::size_t i = 0; i < words; ++i) s += bank[rng.index(bank.size())];
  return s;
}

inline Post render_post(const PlatformProfile& profile, std::string_view body, std::string_view action, Rng& rng) {
  Post p;
  auto a = filler(rng, 3 + rng.index(3));
  auto b = filler(rng, 3 + rng.index(3));
  auto n = std::to_string(1 + rng.index(99));
  switch (profile.anchor_rule) {
    case AnchorRule::double_hash:
      p.content = a + "#" + std::string(body) + "#" + b + n;
      break;
    case AnchorRule::single_hash:
      p.title = a;
      p.content = b + n + "，" + filler(rng, 4) + " #" + std::string(body) + " ";
      break;
    case AnchorRule::question_title_tfidf:
      p.title = std::string(body);
      p.content = a + b + n + filler(rng, 12) + filler(rng, 12);
      break;
    case AnchorRule::item_action:
      p.action = std::string(action);
      p.item = std::string(body);
      p.content = a + "《" + std::string(body) + "》" + b + n;
      break;
  }
  return p;
}

}  // namespace detail

// Generation ------------------------------------------------------------------

struct SynthCorpus {
  PlatformProfile profile;
  std::vector<UserStream> users;  // longitudinal accounts
  std::vector<UserStream> crowd;  // one-day accounts

  std::vector<UserStream> all() const {
    auto out = users;
    out.insert(out.end(), crowd.begin(), crowd.end());
    return out;
  }
};

namespace detail {

struct Interest {
  std::size_t cluster = 0;
  std::size_t member = 0;
  std::size_t age = 0;
  std::string action;
};

inline double survival(const DriftConfig& cfg, std::size_t age) {
  // Geometric decay: keep^(1 + age / half_life).
  double keep = to_double(cfg.keep_probability);
  if (keep <= 0) return 0.0;
  return std::pow(keep, 1.0 + static_cast<double>(age) / to_double(cfg.decay_half_life));
}

inline std::string user_id(std::size_t i) {
  auto s = std::to_string(i + 1);
  return "u" + std::string(s.size() < 5 ? 5 - s.size() : 0, '0') + s;
}

inline UserStream generate_user(const DriftConfig& cfg, const PlatformProfile& profile, const Vocabulary& vocab,
                                std::size_t index, Timestamp start) {
  UserStream u;
  u.meta.user_id = user_id(index);
  u.meta.username = "synthetic user " + std::to_string(index + 1);
  Rng rng(derive_seed(cfg.seed, u.meta.user_id));
  u.meta.bio = filler(rng, 4);
  u.meta.posts_count = 0;

  std::vector<std::size_t> home;
  for (std::size_t i = 0; i < std::min(cfg.home_clusters, vocab.clusters.size()); ++i) {
    home.push_back(rng.index(vocab.clusters.size()));
  }
  std::set<std::pair<std::size_t, std::size_t>> ever;
  std::vector<Interest> active;
  auto arrive = [&]() -> bool {
    for (int attempt = 0; attempt < 64; ++attempt) {
      std::size_t c = (!home.empty() && rng.bernoulli(cfg.home_cluster_bias)) ? home[rng.index(home.size())]
                                                                             : rng.index(vocab.clusters.size());
      std::size_t m = rng.index(vocab.clusters[c].size());
      if (!ever.insert({c, m}).second) continue;
      active.push_back({c, m, 0, std::string(kItemActions[rng.index(kItemActions.size())])});
      return true;
    }
    return false;
  };

  const std::size_t steps = cfg.steps.draw(rng);
  for (std::size_t s = 0; s < steps; ++s) {
    if (s == 0) {
      for (auto n = cfg.initial_interests.draw(rng); n > 0; --n) arrive();
    } else {
      std::vector<Interest> kept;
      for (auto& in : active) {
        if (rng.bernoulli(survival(cfg, in.age))) {
          ++in.age;
          kept.push_back(std::move(in));
        }
      }
      active = std::move(kept);
      auto arrivals = rng.poisson(to_double(cfg.novelty_rate));
      for (; arrivals > 0 && active.size() < cfg.max_interests; --arrivals) arrive();
      if (active.empty()) {
        for (auto n = cfg.initial_interests.draw(rng); n > 0; --n) arrive();
      }
    }
    if (active.empty()) throw InvalidInput("vocabulary exhausted for user " + u.meta.user_id);

    std::vector<std::size_t> owners;
    for (std::size_t i = 0; i < active.size(); ++i) {
      for (auto n = cfg.posts_per_interest.draw(rng); n > 0; --n) owners.push_back(i);
    }
    while (owners.size() < profile.buffer_trigger) owners.push_back(rng.index(active.size()));
    while (owners.size() > profile.buffer_cap) {
      // Drop a post of an interest that still has another one.
      std::map<std::size_t, std::size_t> count;
      for (auto o : owners) ++count[o];
      std::vector<std::size_t> removable;
      for (std::size_t i = 0; i < owners.size(); ++i) {
        if (count[owners[i]] > 1) removable.push_back(i);
      }
      owners.erase(owners.begin() + static_cast<std::ptrdiff_t>(removable[rng.index(removable.size())]));
    }
    rng.shuffle(owners);

    auto t = start + std::chrono::days(s) + std::chrono::hours(8);
    for (std::size_t i = 0; i < owners.size(); ++i) {
      const auto& in = active[owners[i]];
      t += std::chrono::minutes(10 + rng.index(31));
      auto post = render_post(profile, vocab.clusters[in.cluster][in.member], in.action, rng);
      post.post_id = u.meta.user_id + "-" + std::to_string(s + 1) + "-" + std::to_string(i + 1);
      post.user_id = u.meta.user_id;
      post.timestamp = t;
      u.posts.push_back(std::move(post));
    }
  }
  u.meta.posts_count = u.posts.size();
  return u;
}

inline std::vector<UserStream> generate_crowd(const DriftConfig& cfg, const PlatformProfile& profile,
                                              const Vocabulary& vocab, Timestamp start) {
  std::vector<UserStream> out;
  if (cfg.crowd_users_per_day == 0) return out;
  Rng rng(derive_seed(cfg.seed, "crowd"));
  for (std::size_t day = 0; day < cfg.steps.hi; ++day) {
    // A few topics dominate each day.
    auto topics = rng.sample(vocab.viral, std::min<std::size_t>(vocab.viral.size(), 6));
    for (std::size_t c = 0; c < cfg.crowd_users_per_day; ++c) {
      UserStream u;
      u.meta.user_id = "c" + std::to_string(day + 1) + "-" + std::to_string(c + 1);
      u.meta.username = "crowd account " + u.meta.user_id;
      auto t = start + std::chrono::days(day) + std::chrono::hours(7);
      for (std::size_t i = 0; i < cfg.crowd_posts_per_user; ++i) {
        const auto& topic = topics[std::min(rng.index(topics.size()), rng.index(topics.size()))];
        t += std::chrono::minutes(10 + rng.index(31));
        auto post = render_post(profile, topic, kItemActions[0], rng);
        post.post_id = u.meta.user_id + "-" + std::to_string(i + 1);
        post.user_id = u.meta.user_id;
        post.timestamp = t;
        u.posts.push_back(std::move(post));
      }
      u.meta.posts_count = u.posts.size();
      out.push_back(std::move(u));
    }
  }
  return out;
}

}  // namespace detail

/// Deterministic corpus for a fixed config. Users are generated in parallel
/// from per-user derived seeds.
inline SynthCorpus generate_stream(const DriftConfig& cfg) {
  SynthCorpus corpus;
  corpus.profile = platform_profile(cfg.platform_id);
  cfg.validate(corpus.profile);
  const auto vocab = build_vocabulary(cfg);
  Timestamp start;
  text::parse_timestamp(cfg.start_date + "T00:00:00Z", start);
  corpus.users.resize(cfg.users);
  std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 8);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (auto i = next++; i < cfg.users; i = next++) {
        try {
          corpus.users[i] = detail::generate_user(cfg, corpus.profile, vocab, i, start);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  corpus.crowd = detail::generate_crowd(cfg, corpus.profile, vocab, start);
  return corpus;
}

/// Pipeline settings matched to a generated corpus: K follows the cluster
/// structure, every user past the active-day floor is kept and the trending
/// blacklist is off since every tag of a small corpus clears tau.
inline pipeline::PipelineConfig pipeline_config(const DriftConfig& cfg) {
  pipeline::PipelineConfig p;
  p.profile = platform_profile(cfg.platform_id);
  p.profile.use_trending_blacklist = false;
  p.profile.cluster_count = cfg.cluster_count + (cfg.viral_topics > 0 ? 1 : 0);
  p.strata = filter::StrataConfig{3, {}, cfg.seed};
  p.seed = cfg.seed;
  return p;
}

// Oracles ----------------------------------------------------------------------

enum class OracleKind { perfect, copy_history, random, popularity };

NLOHMANN_JSON_SERIALIZE_ENUM(OracleKind, {{OracleKind::perfect, "perfect"},
                                          {OracleKind::copy_history, "copy_history"},
                                          {OracleKind::random, "random"},
                                          {OracleKind::popularity, "popularity"}})

inline OracleKind parse_oracle(std::string_view s) {
  if (s == "perfect") return OracleKind::perfect;
  if (s == "copy_history") return OracleKind::copy_history;
  if (s == "random") return OracleKind::random;
  if (s == "popularity") return OracleKind::popularity;
  throw InvalidInput("unknown oracle kind: " + std::string(s));
}

using Frequency = std::map<std::string, std::size_t>;

/// k pool tags ranked by score descending, ties lexicographic.
inline std::vector<std::string> top_k(std::vector<std::string> pool, std::size_t k,
                                      const std::function<double(const std::string&)>& score) {
  std::vector<std::pair<double, std::string>> ranked;
  for (auto& t : pool) ranked.emplace_back(score(t), std::move(t));
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) out.push_back(std::move(ranked[i].second));
  return out;
}

/// `history` is the user's anchor frequency over the batches seen so far and
/// `popularity` maps tags to global trending coverage. Only the perfect kind
/// reads the pool labels.
inline Prediction oracle_predict(OracleKind kind, const tasks::StepTask& task, const Frequency& history,
                                 std::uint64_t seed, const std::map<std::string, double>& popularity = {}) {
  Prediction p;
  const auto pool = task.pool.tag_strings();
  const auto k = task.pool.k;
  switch (kind) {
    case OracleKind::perfect:
      for (const auto& t : task.pool.tags) {
        if (is_positive(t.label)) p.predicted_tags.push_back(t.tag);
      }
      break;
    case OracleKind::copy_history:
      p.predicted_tags = top_k(pool, k, [&](const std::string& t) {
        auto it = history.find(normalize_tag(t));
        return it == history.end() ? 0.0 : static_cast<double>(it->second);
      });
      break;
    case OracleKind::random: {
      Rng rng(tasks::task_seed(seed, task.user.user_id, task.step_index));
      p.predicted_tags = rng.sample(pool, k);
      break;
    }
    case OracleKind::popularity:
      p.predicted_tags = top_k(pool, k, [&](const std::string& t) {
        auto it = popularity.find(normalize_tag(t));
        return it == popularity.end() ? 0.0 : it->second;
      });
      break;
  }
  return p;
}

inline std::string oracle_response(const Prediction& p, OracleKind kind) {
  Json j{{"persona_summary", p.persona_summary},
         {"predicted_tags", p.predicted_tags},
         {"reasoning", "oracle:" + Json(kind).get<std::string>()}};
  return j.dump();
}

/// Harness agent wrapping oracle_predict. copy_history accumulates the
/// anchors of each batch it is shown and resets between users.
class OracleAgent final : public harness::Agent {
 public:
  explicit OracleAgent(OracleKind kind, std::uint64_t seed = 0, std::map<std::string, double> popularity = {})
      : kind_(kind), seed_(seed), popularity_(std::move(popularity)) {}

  std::string name() const override { return "oracle-" + Json(kind_).get<std::string>(); }

  void begin_user(const std::string&) override { history_.clear(); }

  harness::AgentReply respond(const harness::AgentTurn& turn) override {
    for (const auto& post : turn.task.input_batch.posts) {
      for (const auto& a : post.anchors) ++history_[normalize_tag(a)];
    }
    auto p = oracle_predict(kind_, turn.task, history_, seed_, popularity_);
    p.persona_summary = persona(turn.task);
    return {oracle_response(p, kind_), 1, {}};
  }

 private:
  std::string persona(const tasks::StepTask& task) const {
    auto top = top_k(
        [&] {
          std::vector<std::string> v;
          for (const auto& [t, n] : history_) v.push_back(t);
          return v;
        }(),
        3, [&](const std::string& t) { return static_cast<double>(history_.at(t)); });
    std::string s = "step " + std::to_string(task.step_index) + "; frequent:";
    for (const auto& t : top) s += " " + t;
    return s;
  }

  OracleKind kind_;
  std::uint64_t seed_;
  std::map<std::string, double> popularity_;
  Frequency history_;
};

// Metric simulations -------------------------------------------------------------

struct MacroMicroSim {
  double macro_a = 0, macro_b = 0;
  double micro_a = 0, micro_b = 0;
};

/// Two cohorts share per-user means mu_u; cohort A draws T_u from {2..4}
/// independently, cohort B from {10..20} increasing with mu_u. Step values
/// are mu_u plus uniform noise of half-width `noise`.
inline MacroMicroSim simulate_macro_micro(std::size_t users, std::uint64_t seed, double noise = 0.1) {
  Rng rng(seed);
  std::vector<std::vector<double>> a(users), b(users);
  for (std::size_t u = 0; u < users; ++u) {
    double mu = rng.uniform(0.2, 0.8);
    std::size_t ta = 2 + rng.index(3);
    auto tb = static_cast<std::size_t>(10 + std::floor(11.0 * (mu - 0.2) / 0.6));
    tb = std::min<std::size_t>(tb, 20);
    for (std::size_t i = 0; i < ta; ++i) a[u].push_back(mu + rng.uniform(-noise, noise));
    for (std::size_t i = 0; i < tb; ++i) b[u].push_back(mu + rng.uniform(-noise, noise));
  }
  MacroMicroSim r;
  r.macro_a = *metrics::two_level_macro(a);
  r.macro_b = *metrics::two_level_macro(b);
  r.micro_a = *metrics::micro_average(a);
  r.micro_b = *metrics::micro_average(b);
  return r;
}

inline std::size_t binomial(Rng& rng, std::size_t n, double p) {
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) k += rng.bernoulli(p) ? 1 : 0;
  return k;
}

struct F1Sample {
  double nu = 0, sigma = 0;
  double f1_empirical = 0, f1_limit = 0;
};

/// Per-user F1^NS from per-step Binomial recalls (|T_keep|, |T_new| drawn
/// from [4, 12]) against its large-T limit f1_ns(sigma, nu).
inline std::vector<F1Sample> simulate_f1_convergence(std::size_t users, std::size_t steps, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<F1Sample> out;
  for (std::size_t u = 0; u < users; ++u) {
    F1Sample s;
    s.nu = rng.uniform(0.05, 0.95);
    s.sigma = rng.uniform(0.05, 0.95);
    double stab = 0, nov = 0;
    for (std::size_t t = 0; t < steps; ++t) {
      std::size_t nk = 4 + rng.index(9), nn = 4 + rng.index(9);
      stab += static_cast<double>(binomial(rng, nk, s.sigma)) / static_cast<double>(nk);
      nov += static_cast<double>(binomial(rng, nn, s.nu)) / static_cast<double>(nn);
    }
    s.f1_empirical = metrics::f1_ns(stab / static_cast<double>(steps), nov / static_cast<double>(steps));
    s.f1_limit = metrics::f1_ns(s.sigma, s.nu);
    out.push_back(s);
  }
  return out;
}

}  // namespace streamprofile::synth
