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
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <zlib.h>

#include "streamprofile/anchors.hpp"
#include "streamprofile/chat.hpp"
#include "streamprofile/core.hpp"
#include "streamprofile/ingest.hpp"
#include "streamprofile/random.hpp"

namespace streamprofile::filter {

/// Title and body joined; the text the content-level rules look at.
inline std::string post_text(const Post& p) {
  if (p.title.empty()) return p.content;
  if (p.content.empty()) return p.title;
  return p.title + "\n" + p.content;
}

/// Content-level validity shared with the buffer: non-empty text of at least
/// the platform's minimum length.
inline bool is_valid_post(const Post& p, const PlatformProfile& profile) {
  auto len = text::codepoint_length(text::normalize_whitespace(post_text(p)));
  return len > 0 && len >= profile.min_post_length;
}

struct KeywordRule {
  std::string name;
  std::vector<std::string> keywords;
  double max_fraction = 0.5;  // of the day's posts allowed to hit a keyword
};

inline void to_json(Json& j, const KeywordRule& r) {
  j = Json{{"name", r.name}, {"keywords", r.keywords}, {"max_fraction", r.max_fraction}};
}
inline void from_json(const Json& j, KeywordRule& r) {
  r.name = j.at("name").get<std::string>();
  r.keywords = j.at("keywords").get<std::vector<std::string>>();
  streamprofile::detail::get_opt(j, "max_fraction", r.max_fraction);
}

struct CoarseFilterConfig {
  std::size_t min_daily_posts = 1;
  std::size_t max_daily_posts = 500;
  double duplicate_ceiling = 0.5;
  double fuzzy_threshold = 0.9;  // 3-gram Jaccard
  std::size_t burst_count = 5;
  std::int64_t burst_window_seconds = 60;
  double min_compression_ratio = 0.2;
  std::size_t compression_min_bytes = 200;
  std::vector<KeywordRule> rules;
};

inline void to_json(Json& j, const CoarseFilterConfig& c) {
  j = Json{{"min_daily_posts", c.min_daily_posts},
           {"max_daily_posts", c.max_daily_posts},
           {"duplicate_ceiling", c.duplicate_ceiling},
           {"fuzzy_threshold", c.fuzzy_threshold},
           {"burst_count", c.burst_count},
           {"burst_window_seconds", c.burst_window_seconds},
           {"min_compression_ratio", c.min_compression_ratio},
           {"compression_min_bytes", c.compression_min_bytes},
           {"rules", c.rules}};
}
inline void from_json(const Json& j, CoarseFilterConfig& c) {
  streamprofile::detail::get_opt(j, "min_daily_posts", c.min_daily_posts);
  streamprofile::detail::get_opt(j, "max_daily_posts", c.max_daily_posts);
  streamprofile::detail::get_opt(j, "duplicate_ceiling", c.duplicate_ceiling);
  streamprofile::detail::get_opt(j, "fuzzy_threshold", c.fuzzy_threshold);
  streamprofile::detail::get_opt(j, "burst_count", c.burst_count);
  streamprofile::detail::get_opt(j, "burst_window_seconds", c.burst_window_seconds);
  streamprofile::detail::get_opt(j, "min_compression_ratio", c.min_compression_ratio);
  streamprofile::detail::get_opt(j, "compression_min_bytes", c.compression_min_bytes);
  streamprofile::detail::get_opt(j, "rules", c.rules);
  if (c.max_daily_posts < c.min_daily_posts || c.burst_count < 2) throw InvalidInput("bad coarse filter config");
}

enum class DropReason { volume, duplication, burst, length, entropy, rule, density };

inline std::string_view reason_name(DropReason r) {
  switch (r) {
    case DropReason::volume: return "volume";
    case DropReason::duplication: return "duplication";
    case DropReason::burst: return "burst";
    case DropReason::length: return "length";
    case DropReason::entropy: return "entropy";
    case DropReason::rule: return "rule";
    case DropReason::density: return "density";
  }
  return "?";
}

struct DayVerdict {
  std::string date;
  std::optional<DropReason> dropped;
  std::string detail;  // rule name or measured value
  std::size_t posts = 0;
  std::size_t valid_posts = 0;
  std::size_t valid_anchors = 0;
  double duplicate_rate = 0.0;

  bool kept() const { return !dropped; }
};

inline void to_json(Json& j, const DayVerdict& v) {
  j = Json{{"date", v.date},
           {"kept", v.kept()},
           {"posts", v.posts},
           {"valid_posts", v.valid_posts},
           {"valid_anchors", v.valid_anchors},
           {"duplicate_rate", v.duplicate_rate}};
  if (v.dropped) {
    j["reason"] = reason_name(*v.dropped);
    j["detail"] = v.detail;
  }
}

namespace detail {

inline std::set<std::string> trigram_set(std::string_view s) {
  auto grams = text::char_ngrams(text::normalize_whitespace(s), 3);
  return {grams.begin(), grams.end()};
}

inline double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& g : a) inter += b.count(g);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

}  // namespace detail

/// Fraction of posts that exactly or fuzzily repeat an earlier post.
inline double duplicate_rate(const std::vector<Post>& posts, double fuzzy_threshold) {
  if (posts.empty()) return 0.0;
  std::unordered_set<std::string> exact;
  std::vector<std::set<std::string>> originals;
  std::size_t dups = 0;
  for (const auto& p : posts) {
    auto norm = text::normalize_whitespace(post_text(p));
    if (!exact.insert(norm).second) {
      ++dups;
      continue;
    }
    auto grams = detail::trigram_set(norm);
    bool fuzzy = std::any_of(originals.begin(), originals.end(),
                             [&](const auto& o) { return detail::jaccard(grams, o) >= fuzzy_threshold; });
    if (fuzzy) {
      ++dups;
    } else {
      originals.push_back(std::move(grams));
    }
  }
  return static_cast<double>(dups) / static_cast<double>(posts.size());
}

/// True when some `count` consecutive posts fall within `window_seconds`.
inline bool has_burst(const std::vector<Post>& posts, std::size_t count, std::int64_t window_seconds) {
  if (posts.size() < count) return false;
  std::vector<Timestamp> ts;
  for (const auto& p : posts) ts.push_back(p.timestamp);
  std::sort(ts.begin(), ts.end());
  for (std::size_t i = 0; i + count <= ts.size(); ++i) {
    if ((ts[i + count - 1] - ts[i]).count() <= window_seconds) return true;
  }
  return false;
}

/// zlib-compressed size over raw size.
inline double compression_ratio(std::string_view raw) {
  if (raw.empty()) return 1.0;
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<Bytef> buf(bound);
  if (compress2(buf.data(), &bound, reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                Z_BEST_COMPRESSION) != Z_OK) {
    throw Error("zlib compression failed");
  }
  return static_cast<double>(bound) / static_cast<double>(raw.size());
}

/// One user-day through the ordered rule chain; the first failing rule wins.
inline DayVerdict coarse_filter_user(const std::vector<Post>& day, const PlatformProfile& profile,
                                     const CoarseFilterConfig& cfg, const anchors::Blacklist& blacklist = {},
                                     const anchors::TfidfContext* tfidf = nullptr) {
  DayVerdict v;
  v.posts = day.size();
  if (!day.empty()) v.date = text::format_date(day.front().timestamp);
  auto drop = [&](DropReason r, std::string d) {
    v.dropped = r;
    v.detail = std::move(d);
    return v;
  };
  if (day.size() < cfg.min_daily_posts || day.size() > cfg.max_daily_posts) {
    return drop(DropReason::volume, std::to_string(day.size()));
  }
  v.duplicate_rate = duplicate_rate(day, cfg.fuzzy_threshold);
  if (v.duplicate_rate > cfg.duplicate_ceiling) return drop(DropReason::duplication, std::to_string(v.duplicate_rate));
  if (has_burst(day, cfg.burst_count, cfg.burst_window_seconds)) return drop(DropReason::burst, {});

  std::vector<const Post*> valid;
  std::string corpus;
  for (const auto& p : day) {
    if (!is_valid_post(p, profile)) continue;
    valid.push_back(&p);
    corpus += post_text(p);
    corpus += '\n';
  }
  v.valid_posts = valid.size();
  if (valid.empty()) return drop(DropReason::length, {});
  if (corpus.size() >= cfg.compression_min_bytes) {
    double ratio = compression_ratio(corpus);
    if (ratio < cfg.min_compression_ratio) return drop(DropReason::entropy, std::to_string(ratio));
  }
  for (const auto& rule : cfg.rules) {
    std::size_t hits = 0;
    for (const auto* p : valid) {
      auto t = post_text(*p);
      if (std::any_of(rule.keywords.begin(), rule.keywords.end(),
                      [&](const std::string& k) { return t.find(k) != std::string::npos; })) {
        ++hits;
      }
    }
    if (static_cast<double>(hits) > rule.max_fraction * static_cast<double>(valid.size())) {
      return drop(DropReason::rule, rule.name);
    }
  }
  for (const auto* p : valid) v.valid_anchors += anchors::post_anchors(*p, profile, blacklist, tfidf).size();
  double density = static_cast<double>(v.valid_anchors) / static_cast<double>(valid.size());
  if (!profile.density.contains(density)) return drop(DropReason::density, std::to_string(density));
  return v;
}

struct UserActivitySummary {
  std::string user_id;
  std::size_t active_days = 0;
  std::size_t valid_post_count = 0;
  double duplicate_rate = 0.0;
  double tag_density = 0.0;
};

inline void to_json(Json& j, const UserActivitySummary& s) {
  j = Json{{"user_id", s.user_id},
           {"active_days", s.active_days},
           {"valid_post_count", s.valid_post_count},
           {"duplicate_rate", s.duplicate_rate},
           {"tag_density", s.tag_density}};
}
inline void from_json(const Json& j, UserActivitySummary& s) {
  s.user_id = j.at("user_id").get<std::string>();
  s.active_days = j.at("active_days").get<std::size_t>();
  streamprofile::detail::get_opt(j, "valid_post_count", s.valid_post_count);
  streamprofile::detail::get_opt(j, "duplicate_rate", s.duplicate_rate);
  streamprofile::detail::get_opt(j, "tag_density", s.tag_density);
}

struct CoarseResult {
  UserStream stream;  // posts of kept days, anchors attached
  UserActivitySummary summary;
  std::vector<DayVerdict> days;
};

/// Splits the stream by UTC calendar day, filters each day and attaches the
/// cleaned anchors to every surviving post.
inline CoarseResult filter_user(const UserStream& user, const PlatformProfile& profile,
                                const CoarseFilterConfig& cfg, const anchors::Blacklist& blacklist = {}) {
  CoarseResult res;
  res.stream.meta = user.meta;
  res.summary.user_id = user.meta.user_id;
  std::optional<anchors::TfidfContext> tfidf;
  if (profile.anchor_rule == AnchorRule::question_title_tfidf) tfidf.emplace(user.posts);
  const anchors::TfidfContext* tf = tfidf ? &*tfidf : nullptr;

  std::map<std::string, std::vector<Post>> by_day;
  for (const auto& p : user.posts) by_day[text::format_date(p.timestamp)].push_back(p);

  std::size_t posts_seen = 0;
  double dup_weighted = 0.0;
  std::size_t anchor_total = 0;
  for (auto& [date, posts] : by_day) {
    auto verdict = coarse_filter_user(posts, profile, cfg, blacklist, tf);
    posts_seen += posts.size();
    dup_weighted += verdict.duplicate_rate * static_cast<double>(posts.size());
    if (verdict.kept()) {
      ++res.summary.active_days;
      res.summary.valid_post_count += verdict.valid_posts;
      anchor_total += verdict.valid_anchors;
      for (auto& p : posts) {
        p.anchors.clear();
        if (is_valid_post(p, profile)) {
          for (auto& a : anchors::post_anchors(p, profile, blacklist, tf)) p.anchors.push_back(std::move(a.text));
        }
        res.stream.posts.push_back(std::move(p));
      }
    }
    res.days.push_back(std::move(verdict));
  }
  if (posts_seen > 0) res.summary.duplicate_rate = dup_weighted / static_cast<double>(posts_seen);
  if (res.summary.valid_post_count > 0) {
    res.summary.tag_density =
        static_cast<double>(anchor_total) / static_cast<double>(res.summary.valid_post_count);
  }
  return res;
}

// Longitudinal sampling ------------------------------------------------------

struct StrataBand {
  std::size_t min_days = 0;
  std::size_t max_days = 0;  // inclusive; 0 means unbounded
  double ratio = 1.0;

  bool covers(std::size_t d) const { return d >= min_days && (max_days == 0 || d <= max_days); }
};

struct StrataConfig {
  std::size_t min_active_days = 3;
  std::vector<StrataBand> bands;
  std::uint64_t seed = 0;
};

inline void to_json(Json& j, const StrataBand& b) {
  j = Json{{"min_days", b.min_days}, {"max_days", b.max_days}, {"ratio", b.ratio}};
}
inline void from_json(const Json& j, StrataBand& b) {
  b.min_days = j.at("min_days").get<std::size_t>();
  streamprofile::detail::get_opt(j, "max_days", b.max_days);
  b.ratio = j.at("ratio").get<double>();
  if (b.ratio < 0 || b.ratio > 1) throw InvalidInput("strata ratio must be in [0, 1]");
}
inline void to_json(Json& j, const StrataConfig& c) {
  j = Json{{"min_active_days", c.min_active_days}, {"bands", c.bands}, {"seed", c.seed}};
}
inline void from_json(const Json& j, StrataConfig& c) {
  streamprofile::detail::get_opt(j, "min_active_days", c.min_active_days);
  streamprofile::detail::get_opt(j, "bands", c.bands);
  streamprofile::detail::get_opt(j, "seed", c.seed);
}

/// Default bands per platform family. Users not covered by any band are kept.
inline StrataConfig default_strata(const PlatformProfile& profile, std::uint64_t seed = 0) {
  StrataConfig c;
  c.seed = seed;
  const auto& id = profile.platform_id;
  if (id == "weibo" || id == "toutiao") {
    c.bands = {{3, 5, 0.5}, {6, 0, 0.175}};
  } else if (id == "xiaohongshu" || id == "douban") {
    c.bands = {{3, 5, 0.4}, {7, 0, 0.1}};
  } else if (id == "zhihu") {
    c.min_active_days = 2;
    c.bands = {{2, 4, 0.5}, {5, 0, 0.0}};
  }
  return c;
}

/// Active-day floor, then per-band seeded sampling of exactly
/// round(ratio * n) users. Returns selected ids in sorted order.
inline std::vector<std::string> longitudinal_filter(const std::vector<UserActivitySummary>& summaries,
                                                    const StrataConfig& cfg) {
  std::vector<std::vector<std::string>> band_members(cfg.bands.size());
  std::vector<std::string> selected;
  for (const auto& s : summaries) {
    if (s.active_days < cfg.min_active_days) continue;
    auto it = std::find_if(cfg.bands.begin(), cfg.bands.end(), [&](const auto& b) { return b.covers(s.active_days); });
    if (it == cfg.bands.end()) {
      selected.push_back(s.user_id);
    } else {
      band_members[static_cast<std::size_t>(it - cfg.bands.begin())].push_back(s.user_id);
    }
  }
  for (std::size_t b = 0; b < cfg.bands.size(); ++b) {
    auto& members = band_members[b];
    if (members.empty()) continue;
    std::sort(members.begin(), members.end());
    auto take = static_cast<std::size_t>(std::floor(cfg.bands[b].ratio * static_cast<double>(members.size()) + 0.5));
    Rng rng(derive_seed(cfg.seed, b));
    for (auto& id : rng.sample(members, take)) selected.push_back(std::move(id));
  }
  std::sort(selected.begin(), selected.end());
  return selected;
}

// Personality audit ------------------------------------------------------------

inline constexpr std::string_view kJudgePrompt = R"PROMPT(# Role
You are a "Digital Persona Evaluation Expert." Your task is to screen social-media users along three dimensions: cognitive depth, expressive subjectivity, and information entropy.

# Classification Categories
CLASS A: High_Quality_User (keep) - A well-defined individual with a sharp persona profile, idiosyncratic expression, and cognitive coherence.
CLASS B: Low_Value_Human (reject) - A genuine human, but with sparse analytical value (low-SNR).
- Features: Semantic poverty (pure emojis, fragmented interjections), high homogeneity, or passive interaction (pure reposts).
CLASS C: Non_Human_Noise (reject) - Accounts driven by explicit tooling intent (marketing, bots, SEO).
- Features: Rigid template structures, commercial markers (price lists, DM for coupons).

# Profilability Score (1-5 Likert scale)
- 5 Exceptional: Sharp persona; rich narrative; distinctive perspective.
- 4 Good: Clear traits and concrete experiences, but slightly lacking in depth.
- 3 Adequate: Persona silhouette is visible but not vivid.
- 2 Marginal: Mostly templated/fragmented; occasional traces of a real person.
- 1 Poor: No personal signal; purely tool-like output.

# Output Format (Return strict JSON; reasoning in Chinese)
{
  "user_id": "string",
  "class": "High_Quality_User" | "Low_Value_Human" | "Non_Human_Noise",
  "is_gold": boolean,
  "profilability_score": 1-5,
  "reasoning": "string (2-3 sentences in Chinese)"
})PROMPT";

enum class AuditClass { High_Quality_User, Low_Value_Human, Non_Human_Noise };

NLOHMANN_JSON_SERIALIZE_ENUM(AuditClass, {{AuditClass::High_Quality_User, "High_Quality_User"},
                                          {AuditClass::Low_Value_Human, "Low_Value_Human"},
                                          {AuditClass::Non_Human_Noise, "Non_Human_Noise"}})

struct AuditVerdict {
  std::string user_id;
  AuditClass cls = AuditClass::Low_Value_Human;
  bool is_gold = false;
  int profilability_score = 1;
  std::string reasoning;
};

inline void to_json(Json& j, const AuditVerdict& v) {
  j = Json{{"user_id", v.user_id},
           {"class", v.cls},
           {"is_gold", v.is_gold},
           {"profilability_score", v.profilability_score},
           {"reasoning", v.reasoning}};
}

/// Strict parse of a judge response. Throws DataError on any schema violation.
inline AuditVerdict parse_verdict(std::string_view raw) {
  Json j;
  try {
    j = Json::parse(chat::strip_code_fences(raw));
  } catch (const Json::exception& e) {
    throw DataError(std::string("judge response is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw DataError("judge response is not an object");
  static const std::set<std::string> classes{"High_Quality_User", "Low_Value_Human", "Non_Human_Noise"};
  try {
    AuditVerdict v;
    streamprofile::detail::get_opt(j, "user_id", v.user_id);
    auto cls = j.at("class").get<std::string>();
    if (!classes.count(cls)) throw DataError("unknown class " + cls);
    v.cls = j.at("class").get<AuditClass>();
    v.is_gold = j.at("is_gold").get<bool>();
    v.profilability_score = j.at("profilability_score").get<int>();
    streamprofile::detail::get_opt(j, "reasoning", v.reasoning);
    if (v.profilability_score < 1 || v.profilability_score > 5) throw DataError("profilability_score out of range");
    if (v.is_gold && v.cls != AuditClass::High_Quality_User) throw DataError("is_gold requires High_Quality_User");
    return v;
  } catch (const Json::exception& e) {
    throw DataError(std::string("judge response schema: ") + e.what());
  }
}

inline std::string render_audit_input(const UserStream& user) {
  std::string s = "# User Stream\nuser_id: " + user.meta.user_id + "\n";
  if (!user.meta.bio.empty()) s += "bio: " + user.meta.bio + "\n";
  for (const auto& p : user.posts) s += "[" + text::format_timestamp(p.timestamp) + "] " + post_text(p) + "\n";
  return s;
}

struct AuditOutcome {
  std::optional<AuditVerdict> verdict;  // empty: unaudited
  int attempts = 0;
  std::string error;

  bool keep(bool keep_unaudited = false) const {
    if (!verdict) return keep_unaudited;
    return verdict->cls == AuditClass::High_Quality_User;
  }
};

/// One judge call, retried once when the response does not parse.
inline AuditOutcome audit_user(const UserStream& user, chat::Client& judge, const chat::ModelClientConfig& cfg) {
  AuditOutcome out;
  std::vector<chat::Message> messages{{"system", std::string(kJudgePrompt)}, {"user", render_audit_input(user)}};
  for (int i = 0; i < 2; ++i) {
    ++out.attempts;
    auto call = chat::call_model(judge, messages, cfg);
    if (!call.response) {
      out.error = call.error;
      continue;
    }
    try {
      out.verdict = parse_verdict(*call.response);
      if (out.verdict->user_id.empty()) out.verdict->user_id = user.meta.user_id;
      out.error.clear();
      return out;
    } catch (const DataError& e) {
      out.error = e.what();
    }
  }
  return out;
}

/// Rule-based subjectivity pass run before the judge: fraction of posts that
/// carry first-person, sentiment or opinion markers.
inline double subjectivity_score(const UserStream& user) {
  static const std::vector<std::string> markers{"我",   "俺",   "觉得", "感觉", "认为", "希望", "喜欢", "讨厌",
                                                "开心", "难过", "爱",   "哭",   "笑",   "累",   "想",   " I ",
                                                " my ", " me "};
  if (user.posts.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& p : user.posts) {
    auto t = " " + post_text(p) + " ";
    if (std::any_of(markers.begin(), markers.end(), [&](const std::string& m) { return t.find(m) != std::string::npos; })) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(user.posts.size());
}

}  // namespace streamprofile::filter
