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
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "streamprofile/core.hpp"

namespace streamprofile::anchors {

using Tokenizer = std::function<std::vector<std::string>(std::string_view)>;

/// Character bigrams inside runs of non-space, non-symbol code points.
inline std::vector<std::string> bigram_tokenizer(std::string_view s) {
  std::vector<std::string> out;
  std::u32string run;
  auto flush = [&] {
    for (std::size_t i = 0; i + 2 <= run.size(); ++i) out.push_back(text::encode_utf8(run.substr(i, 2)));
    run.clear();
  };
  for (char32_t c : text::decode_utf8(s)) {
    if (text::is_space(c) || text::is_symbol(c)) {
      flush();
    } else {
      run.push_back(c);
    }
  }
  flush();
  return out;
}

/// Document frequencies over one user's window; each post body is a document.
class TfidfContext {
 public:
  explicit TfidfContext(Tokenizer tok = bigram_tokenizer) : tok_(std::move(tok)) {}

  TfidfContext(const std::vector<Post>& window, Tokenizer tok = bigram_tokenizer) : tok_(std::move(tok)) {
    for (const auto& p : window) add_document(p.content);
  }

  void add_document(std::string_view body) {
    auto toks = tok_(body);
    std::set<std::string> uniq(toks.begin(), toks.end());
    for (const auto& t : uniq) ++df_[t];
    ++docs_;
  }

  /// Top-n terms of `body` by tf * smoothed idf, ties broken lexicographically.
  std::vector<std::string> top_terms(std::string_view body, std::size_t n) const {
    std::map<std::string, double> tf;
    for (auto& t : tok_(body)) tf[t] += 1.0;
    std::vector<std::pair<double, std::string>> scored;
    for (const auto& [term, count] : tf) {
      auto it = df_.find(term);
      double df = it == df_.end() ? 1.0 : static_cast<double>(it->second);
      double n_docs = static_cast<double>(std::max<std::size_t>(docs_, 1));
      double idf = std::log((1.0 + n_docs) / (1.0 + df)) + 1.0;
      scored.emplace_back(count * idf, term);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < scored.size() && i < n; ++i) out.push_back(scored[i].second);
    return out;
  }

 private:
  Tokenizer tok_;
  std::map<std::string, std::size_t> df_;
  std::size_t docs_ = 0;
};

inline constexpr std::size_t kTfidfKeywords = 5;

namespace detail {

inline void double_hash(std::string_view s, std::vector<std::string>& out) {
  std::size_t pos = 0;
  while (true) {
    auto open = s.find('#', pos);
    if (open == std::string_view::npos) return;
    auto close = s.find('#', open + 1);
    if (close == std::string_view::npos) return;
    auto inner = s.substr(open + 1, close - open - 1);
    if (!inner.empty() && inner.find('\n') == std::string_view::npos) {
      out.emplace_back(inner);
      pos = close + 1;
    } else {
      pos = close;
    }
  }
}

inline void single_hash(std::string_view s, std::vector<std::string>& out) {
  auto cps = text::decode_utf8(s);
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (cps[i] != U'#') continue;
    std::size_t j = i + 1;
    while (j < cps.size() && !text::is_space(cps[j]) && !text::is_symbol(cps[j])) ++j;
    if (j > i + 1) out.push_back(text::encode_utf8(cps.substr(i + 1, j - i - 1)));
    i = j - 1;
  }
}

inline std::string action_label(std::string_view action) {
  static const std::map<std::string, std::string, std::less<>> labels{
      {"watched", "看过"},   {"want_to_watch", "想看"}, {"watching", "在看"},
      {"read", "读过"},      {"want_to_read", "想读"},  {"reading", "在读"},
      {"listened", "听过"},  {"want_to_listen", "想听"}};
  if (auto it = labels.find(action); it != labels.end()) return it->second;
  return std::string(action);
}

}  // namespace detail

inline std::string item_action_anchor(std::string_view action, std::string_view item) {
  std::string body = text::normalize_whitespace(item);
  if (body.rfind("《", 0) != 0) body = "《" + body + "》";
  return detail::action_label(text::normalize_whitespace(action)) + "·" + body;
}

/// Raw anchors of one post under the platform rule, duplicates collapsed in
/// first-seen order. `tfidf` supplies the user's window for the
/// question_title_tfidf rule; without it the post is its own corpus.
inline std::vector<std::string> extract_anchors(const Post& post, const PlatformProfile& profile,
                                                const TfidfContext* tfidf = nullptr) {
  std::vector<std::string> raw;
  switch (profile.anchor_rule) {
    case AnchorRule::double_hash:
      detail::double_hash(post.title, raw);
      detail::double_hash(post.content, raw);
      break;
    case AnchorRule::single_hash:
      detail::single_hash(post.title, raw);
      detail::single_hash(post.content, raw);
      break;
    case AnchorRule::question_title_tfidf: {
      if (!post.title.empty()) raw.push_back(post.title);
      if (tfidf) {
        for (auto& t : tfidf->top_terms(post.content, kTfidfKeywords)) raw.push_back(std::move(t));
      } else {
        TfidfContext local;
        local.add_document(post.content);
        for (auto& t : local.top_terms(post.content, kTfidfKeywords)) raw.push_back(std::move(t));
      }
      break;
    }
    case AnchorRule::item_action:
      if (!post.action.empty() && !post.item.empty()) raw.push_back(item_action_anchor(post.action, post.item));
      break;
  }
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (auto& r : raw) {
    auto norm = normalize_tag(r);
    if (!norm.empty() && seen.insert(norm).second) out.push_back(std::move(norm));
  }
  return out;
}

enum class RejectReason { empty, pure_numeric, pure_symbol, length, blacklisted };

inline std::string_view reason_name(RejectReason r) {
  switch (r) {
    case RejectReason::empty: return "empty";
    case RejectReason::pure_numeric: return "pure_numeric";
    case RejectReason::pure_symbol: return "pure_symbol";
    case RejectReason::length: return "length";
    case RejectReason::blacklisted: return "blacklisted";
  }
  return "?";
}

inline constexpr std::size_t kMinAnchorLength = 2;
inline constexpr std::size_t kMaxAnchorLength = 30;

struct CleanResult {
  std::string text;  // canonical form when accepted
  std::optional<RejectReason> rejected;

  bool accepted() const { return !rejected.has_value(); }
};

using Blacklist = std::set<std::string, std::less<>>;

inline CleanResult clean_anchor(std::string_view raw, const Blacklist& blacklist, const PlatformProfile& profile) {
  CleanResult r{normalize_tag(raw), std::nullopt};
  auto cps = text::decode_utf8(r.text);
  if (cps.empty()) {
    r.rejected = RejectReason::empty;
  } else if (std::all_of(cps.begin(), cps.end(),
                         [](char32_t c) { return text::is_ascii_digit(c) || text::is_fullwidth_digit(c); })) {
    r.rejected = RejectReason::pure_numeric;
  } else if (std::all_of(cps.begin(), cps.end(),
                         [](char32_t c) { return text::is_symbol(c) || text::is_space(c); })) {
    r.rejected = RejectReason::pure_symbol;
  } else if (cps.size() < kMinAnchorLength || cps.size() > kMaxAnchorLength) {
    r.rejected = RejectReason::length;
  } else if (profile.use_trending_blacklist && blacklist.count(r.text) > 0) {
    r.rejected = RejectReason::blacklisted;
  }
  return r;
}

/// Extract + clean, returning accepted anchors bound to the post.
inline std::vector<Anchor> post_anchors(const Post& post, const PlatformProfile& profile, const Blacklist& blacklist,
                                        const TfidfContext* tfidf = nullptr) {
  std::vector<Anchor> out;
  for (const auto& raw : extract_anchors(post, profile, tfidf)) {
    auto c = clean_anchor(raw, blacklist, profile);
    if (c.accepted()) out.push_back({std::move(c.text), post.post_id});
  }
  return out;
}

}  // namespace streamprofile::anchors
