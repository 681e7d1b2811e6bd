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
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <boost/rational.hpp>
#include <json.hpp>

#include "streamprofile/text.hpp"

namespace streamprofile {

using Json = nlohmann::json;
using Timestamp = std::chrono::sys_seconds;
using Rational = boost::rational<std::int64_t>;

inline double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

// Error families map onto CLI exit codes: InvalidInput -> 1, DataError -> 2,
// RemoteError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class RemoteError : public Error {
 public:
  using Error::Error;
};

inline std::string rational_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

/// Accepts integers, "n/d" strings and finite decimal strings or numbers
/// ("0.7" -> 7/10).
inline Rational parse_rational(const Json& j) {
  std::string s;
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  if (j.is_number_float()) {
    s = j.dump();
  } else if (j.is_string()) {
    s = j.get<std::string>();
  } else {
    throw InvalidInput("expected a rational number, got " + j.dump());
  }
  try {
    if (auto slash = s.find('/'); slash != std::string::npos) {
      auto den = std::stoll(s.substr(slash + 1));
      if (den == 0) throw InvalidInput("zero denominator in " + s);
      return Rational(std::stoll(s.substr(0, slash)), den);
    }
    auto dot = s.find('.');
    if (s.find_first_of("eE") != std::string::npos) throw InvalidInput("exponent notation not supported: " + s);
    if (dot == std::string::npos) return Rational(std::stoll(s));
    auto frac = s.substr(dot + 1);
    std::int64_t scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    bool negative = !s.empty() && s[0] == '-';
    std::int64_t whole = dot == 0 ? 0 : std::llabs(std::stoll(s.substr(0, dot)));
    std::int64_t part = frac.empty() ? 0 : std::stoll(frac);
    Rational r(whole * scale + part, scale);
    return negative ? -r : r;
  } catch (const std::logic_error&) {
    throw InvalidInput("not a rational number: " + s);
  }
}

enum class AnchorRule { double_hash, single_hash, question_title_tfidf, item_action };

NLOHMANN_JSON_SERIALIZE_ENUM(AnchorRule, {{AnchorRule::double_hash, "double_hash"},
                                          {AnchorRule::single_hash, "single_hash"},
                                          {AnchorRule::question_title_tfidf, "question_title_tfidf"},
                                          {AnchorRule::item_action, "item_action"}})

struct DensityInterval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const { return v >= lo && v <= hi; }
};

struct PlatformProfile {
  std::string platform_id;
  std::string code;  // short code prefixed to hashed user ids
  std::size_t buffer_trigger = 5;
  std::size_t buffer_cap = 15;
  AnchorRule anchor_rule = AnchorRule::double_hash;
  DensityInterval density{0.2, 1.0};
  std::size_t min_tag_frequency = 3;
  std::size_t cluster_count = 1024;
  std::size_t min_post_length = 0;
  bool use_trending_blacklist = false;
  bool high_frequency = true;  // buffering class used by granularity ablations

  void validate() const {
    if (platform_id.empty() || code.empty()) throw InvalidInput("platform profile needs id and code");
    if (buffer_trigger < 1) throw InvalidInput("buffer trigger must be >= 1");
    if (buffer_cap < buffer_trigger) throw InvalidInput("buffer cap must be >= trigger");
    if (density.lo < 0 || density.lo > density.hi) throw InvalidInput("bad density interval");
    if (min_tag_frequency < 1 || cluster_count < 1) throw InvalidInput("bad clustering parameters");
  }

  PlatformProfile with_trigger(std::size_t trigger) const {
    PlatformProfile p = *this;
    p.buffer_trigger = trigger;
    p.buffer_cap = 3 * trigger;
    return p;
  }
};

inline void to_json(Json& j, const DensityInterval& d) { j = Json::array({d.lo, d.hi}); }
inline void from_json(const Json& j, DensityInterval& d) {
  d.lo = j.at(0).get<double>();
  d.hi = j.at(1).get<double>();
}

inline void to_json(Json& j, const PlatformProfile& p) {
  j = Json{{"platform_id", p.platform_id},
           {"code", p.code},
           {"buffer_trigger", p.buffer_trigger},
           {"buffer_cap", p.buffer_cap},
           {"anchor_rule", p.anchor_rule},
           {"density_interval", p.density},
           {"min_tag_frequency", p.min_tag_frequency},
           {"cluster_count", p.cluster_count},
           {"min_post_length", p.min_post_length},
           {"use_trending_blacklist", p.use_trending_blacklist},
           {"high_frequency", p.high_frequency}};
}

// Built-in defaults for the five supported platforms. Buffer caps default to
// three times the trigger.
inline const std::vector<PlatformProfile>& builtin_platforms() {
  static const std::vector<PlatformProfile> profiles = [] {
    std::vector<PlatformProfile> v;
    v.push_back({"weibo", "WB", 5, 15, AnchorRule::double_hash, {0.2, 1.0}, 3, 1024, 5, true, true});
    v.push_back({"xiaohongshu", "XHS", 5, 15, AnchorRule::single_hash, {1.0, 4.0}, 3, 1024, 5, false, true});
    v.push_back({"toutiao", "TT", 3, 9, AnchorRule::single_hash, {0.2, 3.0}, 3, 1024, 20, false, false});
    v.push_back({"zhihu", "ZH", 3, 9, AnchorRule::question_title_tfidf, {0.2, 2.0}, 2, 1024, 50, false, false});
    v.push_back({"douban", "DB", 5, 15, AnchorRule::item_action, {0.2, 2.0}, 2, 1024, 10, false, true});
    return v;
  }();
  return profiles;
}

inline PlatformProfile platform_profile(std::string_view id) {
  for (const auto& p : builtin_platforms()) {
    if (p.platform_id == id || p.code == id) return p;
  }
  throw InvalidInput("unknown platform: " + std::string(id));
}

// Starts from the built-in profile named by "platform_id" and overrides any
// field present in the object.
inline PlatformProfile profile_from_json(const Json& j) {
  PlatformProfile p = platform_profile(j.at("platform_id").get<std::string>());
  if (j.contains("code")) p.code = j["code"].get<std::string>();
  if (j.contains("buffer_trigger")) {
    p.buffer_trigger = j["buffer_trigger"].get<std::size_t>();
    p.buffer_cap = 3 * p.buffer_trigger;
  }
  if (j.contains("buffer_cap")) p.buffer_cap = j["buffer_cap"].get<std::size_t>();
  if (j.contains("anchor_rule")) p.anchor_rule = j["anchor_rule"].get<AnchorRule>();
  if (j.contains("density_interval")) p.density = j["density_interval"].get<DensityInterval>();
  if (j.contains("min_tag_frequency")) p.min_tag_frequency = j["min_tag_frequency"].get<std::size_t>();
  if (j.contains("cluster_count")) p.cluster_count = j["cluster_count"].get<std::size_t>();
  if (j.contains("min_post_length")) p.min_post_length = j["min_post_length"].get<std::size_t>();
  if (j.contains("use_trending_blacklist")) p.use_trending_blacklist = j["use_trending_blacklist"].get<bool>();
  if (j.contains("high_frequency")) p.high_frequency = j["high_frequency"].get<bool>();
  p.validate();
  return p;
}

struct UserMeta {
  std::string user_id;
  std::string username;
  std::string bio;
  std::optional<std::string> gender;
  std::optional<std::string> location;
  std::uint64_t followers_count = 0;
  std::uint64_t following_count = 0;
  std::uint64_t posts_count = 0;
  std::optional<std::string> verified_type;
};

struct Post {
  std::string post_id;
  std::string user_id;
  Timestamp timestamp{};
  std::string title;
  std::string content;
  std::string media_text;
  std::string quote_content;
  // Bound item and marking action for item-action platforms; empty elsewhere.
  std::string action;
  std::string item;
  std::vector<std::string> anchors;

  auto order_key() const { return std::tie(timestamp, post_id); }
};

inline bool chronological(const Post& a, const Post& b) { return a.order_key() < b.order_key(); }

struct Anchor {
  std::string text;
  std::string source_post;

  bool operator==(const Anchor&) const = default;
};

struct StreamBatch {
  std::string user_id;
  std::size_t step_index = 0;
  std::vector<Post> posts;
  std::vector<std::string> anchors;  // deduplicated, first-seen order
  Timestamp window_start{};
  Timestamp window_end{};
};

inline constexpr std::string_view kColdStartPersona =
    "No prior observations yet; this is the user's first activity batch. Build the persona from "
    "scratch.";

struct PersonaState {
  std::string text{kColdStartPersona};
  std::size_t step_index = 0;
};

enum class TagLabel { keep, new_tag, decay, peer, viral, random };

inline constexpr std::array<TagLabel, 4> kDistractorLabels{TagLabel::decay, TagLabel::peer,
                                                          TagLabel::viral, TagLabel::random};

NLOHMANN_JSON_SERIALIZE_ENUM(TagLabel, {{TagLabel::keep, "keep"},
                                        {TagLabel::new_tag, "new"},
                                        {TagLabel::decay, "decay"},
                                        {TagLabel::peer, "peer"},
                                        {TagLabel::viral, "viral"},
                                        {TagLabel::random, "random"}})

inline std::string_view label_name(TagLabel l) {
  switch (l) {
    case TagLabel::keep: return "keep";
    case TagLabel::new_tag: return "new";
    case TagLabel::decay: return "decay";
    case TagLabel::peer: return "peer";
    case TagLabel::viral: return "viral";
    case TagLabel::random: return "random";
  }
  return "?";
}

inline bool is_positive(TagLabel l) { return l == TagLabel::keep || l == TagLabel::new_tag; }

struct LabeledTag {
  std::string tag;
  TagLabel label;

  bool operator==(const LabeledTag&) const = default;
};

struct CandidatePool {
  std::vector<LabeledTag> tags;
  std::size_t k = 0;

  std::vector<std::string> tag_strings() const {
    std::vector<std::string> out;
    out.reserve(tags.size());
    for (const auto& t : tags) out.push_back(t.tag);
    return out;
  }

  std::vector<std::string> with_label(TagLabel l) const {
    std::vector<std::string> out;
    for (const auto& t : tags) {
      if (t.label == l) out.push_back(t.tag);
    }
    return out;
  }
};

struct Prediction {
  std::vector<std::string> predicted_tags;
  std::string persona_summary;
  std::string reasoning;
  std::string raw_response;

  bool operator==(const Prediction&) const = default;
};

/// Canonical form used for tag identity: trimmed, internal whitespace runs
/// collapsed to one space. No case folding.
inline std::string normalize_tag(std::string_view tag) { return text::normalize_whitespace(tag); }

inline bool tags_equal(std::string_view a, std::string_view b) {
  return normalize_tag(a) == normalize_tag(b);
}

/// Number of tags an agent must select from a pool: max(1, round(pool/4)),
/// rounding halves away from zero.
inline std::size_t selection_budget(std::size_t pool_size) {
  if (pool_size == 0) throw InvalidInput("selection_budget: pool size must be >= 1");
  return std::max<std::size_t>(1, (pool_size + 2) / 4);
}

// JSON -------------------------------------------------------------------

namespace detail {
template <typename T>
void get_opt(const Json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}
template <typename T>
void put_opt(Json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}
}  // namespace detail

inline void to_json(Json& j, const UserMeta& u) {
  j = Json{{"user_id", u.user_id},
           {"username", u.username},
           {"bio", u.bio},
           {"followers_count", u.followers_count},
           {"following_count", u.following_count},
           {"posts_count", u.posts_count}};
  detail::put_opt(j, "gender", u.gender);
  detail::put_opt(j, "location", u.location);
  detail::put_opt(j, "verified_type", u.verified_type);
}

inline void from_json(const Json& j, UserMeta& u) {
  u.user_id = j.at("user_id").get<std::string>();
  if (u.user_id.empty()) throw DataError("user_id must be non-empty");
  detail::get_opt(j, "username", u.username);
  detail::get_opt(j, "bio", u.bio);
  if (j.contains("gender") && !j["gender"].is_null()) u.gender = j["gender"].get<std::string>();
  if (j.contains("location") && !j["location"].is_null()) u.location = j["location"].get<std::string>();
  if (j.contains("verified_type") && !j["verified_type"].is_null()) {
    u.verified_type = j["verified_type"].get<std::string>();
  }
  detail::get_opt(j, "followers_count", u.followers_count);
  detail::get_opt(j, "following_count", u.following_count);
  detail::get_opt(j, "posts_count", u.posts_count);
}

inline void to_json(Json& j, const Post& p) {
  j = Json{{"post_id", p.post_id},
           {"user_id", p.user_id},
           {"timestamp", text::format_timestamp(p.timestamp)},
           {"title", p.title},
           {"content", p.content},
           {"media_text", p.media_text},
           {"quote_content", p.quote_content}};
  if (!p.action.empty()) j["action"] = p.action;
  if (!p.item.empty()) j["item"] = p.item;
  if (!p.anchors.empty()) j["anchors"] = p.anchors;
}

inline void from_json(const Json& j, Post& p) {
  p.post_id = j.at("post_id").get<std::string>();
  p.user_id = j.at("user_id").get<std::string>();
  if (p.post_id.empty() || p.user_id.empty()) throw DataError("post_id and user_id must be non-empty");
  const auto& ts = j.at("timestamp");
  if (ts.is_number_integer()) {
    p.timestamp = Timestamp{std::chrono::seconds{ts.get<std::int64_t>()}};
  } else if (!text::parse_timestamp(ts.get<std::string>(), p.timestamp)) {
    throw DataError("unparseable timestamp: " + ts.get<std::string>());
  }
  detail::get_opt(j, "title", p.title);
  detail::get_opt(j, "content", p.content);
  detail::get_opt(j, "media_text", p.media_text);
  detail::get_opt(j, "quote_content", p.quote_content);
  detail::get_opt(j, "action", p.action);
  detail::get_opt(j, "item", p.item);
  detail::get_opt(j, "anchors", p.anchors);
}

inline void to_json(Json& j, const StreamBatch& b) {
  j = Json{{"user_id", b.user_id},
           {"step_index", b.step_index},
           {"posts", b.posts},
           {"anchors", b.anchors},
           {"window", Json::array({text::format_timestamp(b.window_start),
                                   text::format_timestamp(b.window_end)})}};
}

inline void from_json(const Json& j, StreamBatch& b) {
  b.user_id = j.at("user_id").get<std::string>();
  b.step_index = j.at("step_index").get<std::size_t>();
  b.posts = j.at("posts").get<std::vector<Post>>();
  b.anchors = j.at("anchors").get<std::vector<std::string>>();
  const auto& w = j.at("window");
  if (!text::parse_timestamp(w.at(0).get<std::string>(), b.window_start) ||
      !text::parse_timestamp(w.at(1).get<std::string>(), b.window_end)) {
    throw DataError("bad batch window");
  }
}

inline void to_json(Json& j, const LabeledTag& t) { j = Json{{"tag", t.tag}, {"label", t.label}}; }
inline void from_json(const Json& j, LabeledTag& t) {
  t.tag = j.at("tag").get<std::string>();
  t.label = j.at("label").get<TagLabel>();
}

inline void to_json(Json& j, const Prediction& p) {
  j = Json{{"predicted_tags", p.predicted_tags},
           {"persona_summary", p.persona_summary},
           {"reasoning", p.reasoning},
           {"raw_response", p.raw_response}};
}
inline void from_json(const Json& j, Prediction& p) {
  detail::get_opt(j, "predicted_tags", p.predicted_tags);
  detail::get_opt(j, "persona_summary", p.persona_summary);
  detail::get_opt(j, "reasoning", p.reasoning);
  detail::get_opt(j, "raw_response", p.raw_response);
}

}  // namespace streamprofile
