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
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "streamprofile/chat.hpp"
#include "streamprofile/core.hpp"
#include "streamprofile/ingest.hpp"
#include "streamprofile/io.hpp"

namespace streamprofile::privacy {

enum class PiCategory { PHONE, ID, BANK, EMAIL, CONTACT, PLATE, IP, GEO, DEVICE, SELF_NAME };

inline constexpr std::array<PiCategory, 10> kAllCategories{
    PiCategory::PHONE,   PiCategory::ID,    PiCategory::BANK, PiCategory::EMAIL,  PiCategory::CONTACT,
    PiCategory::PLATE,   PiCategory::IP,    PiCategory::GEO,  PiCategory::DEVICE, PiCategory::SELF_NAME};

inline std::string_view category_name(PiCategory c) {
  switch (c) {
    case PiCategory::PHONE: return "PHONE";
    case PiCategory::ID: return "ID";
    case PiCategory::BANK: return "BANK";
    case PiCategory::EMAIL: return "EMAIL";
    case PiCategory::CONTACT: return "CONTACT";
    case PiCategory::PLATE: return "PLATE";
    case PiCategory::IP: return "IP";
    case PiCategory::GEO: return "GEO";
    case PiCategory::DEVICE: return "DEVICE";
    case PiCategory::SELF_NAME: return "SELF_NAME";
  }
  return "?";
}

inline std::optional<PiCategory> parse_category(std::string_view s) {
  for (auto c : kAllCategories) {
    if (category_name(c) == s) return c;
  }
  return std::nullopt;
}

inline std::string_view placeholder(PiCategory c) {
  switch (c) {
    case PiCategory::PHONE: return "<PHONE>";
    case PiCategory::ID: return "<ID>";
    case PiCategory::BANK: return "<BANK>";
    case PiCategory::EMAIL: return "<EMAIL>";
    case PiCategory::CONTACT: return "<CONTACT>";
    case PiCategory::PLATE: return "<PLATE>";
    case PiCategory::IP: return "<IP>";
    case PiCategory::GEO: return "<GEO>";
    case PiCategory::DEVICE: return "<DEVICE>";
    case PiCategory::SELF_NAME: return "<SELF>";
  }
  return "<PI>";
}

struct PiSpan {
  std::string text;
  PiCategory category;

  bool operator==(const PiSpan&) const = default;
};

struct HashConfig {
  std::string salt;
  std::string platform_code;
};

enum class IdentifierKind { user_id, username };

/// Salted SHA-256 pseudonym: "<platform>_" + 10 hex chars for user ids,
/// "U_" + 8 hex chars for usernames.
inline std::string hash_identifier(std::string_view value, IdentifierKind kind, const HashConfig& cfg) {
  if (value.empty()) throw InvalidInput("hash_identifier: empty value");
  if (cfg.salt.empty()) throw InvalidInput("hash_identifier: empty salt");
  std::string material = cfg.salt;
  material.append(value);
  auto digest = io::sha256_hex(material);
  if (kind == IdentifierKind::user_id) return cfg.platform_code + "_" + digest.substr(0, 10);
  return "U_" + digest.substr(0, 8);
}

// Pattern layer ------------------------------------------------------------
//
// Approximate grammars: mainland mobile numbers (optionally +86-prefixed,
// 3-4-4 separators allowed), landlines with area code, generic e-mail, and
// 15/18-character resident ID numbers whose embedded birth date is plausible.

namespace detail {

inline bool digit_at(std::string_view s, std::ptrdiff_t i) {
  return i >= 0 && i < static_cast<std::ptrdiff_t>(s.size()) && s[i] >= '0' && s[i] <= '9';
}

inline bool id_char_at(std::string_view s, std::ptrdiff_t i) {
  return digit_at(s, i) ||
         (i >= 0 && i < static_cast<std::ptrdiff_t>(s.size()) && (s[i] == 'X' || s[i] == 'x'));
}

template <typename Accept>
void collect(std::string_view text, const std::regex& re, PiCategory cat, Accept accept,
             std::vector<PiSpan>& out) {
  auto begin = std::cregex_iterator(text.data(), text.data() + text.size(), re);
  for (auto it = begin; it != std::cregex_iterator(); ++it) {
    auto pos = static_cast<std::ptrdiff_t>(it->position(0));
    auto len = static_cast<std::ptrdiff_t>(it->length(0));
    if (accept(pos, len)) out.push_back({std::string(text.substr(pos, len)), cat});
  }
}

inline bool plausible_birth_date(std::string_view digits8) {
  int y = std::stoi(std::string(digits8.substr(0, 4)));
  int m = std::stoi(std::string(digits8.substr(4, 2)));
  int d = std::stoi(std::string(digits8.substr(6, 2)));
  return y >= 1900 && y <= 2099 && m >= 1 && m <= 12 && d >= 1 && d <= 31;
}

}  // namespace detail

inline std::vector<PiSpan> pattern_spans(std::string_view text) {
  static const std::regex email(R"([A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(\.[A-Za-z0-9\-]+)*\.[A-Za-z]{2,})");
  static const std::regex mobile(R"((\+?86[ \-]?)?1[3-9][0-9]([ \-]?[0-9]{4}){2})");
  static const std::regex landline(R"(0[0-9]{2,3}-[0-9]{7,8})");
  static const std::regex id18(R"([0-9]{17}[0-9Xx])");
  static const std::regex id15(R"([0-9]{15})");

  std::vector<PiSpan> spans;
  detail::collect(text, email, PiCategory::EMAIL, [](auto, auto) { return true; }, spans);
  auto isolated = [&](std::ptrdiff_t pos, std::ptrdiff_t len) {
    return !detail::digit_at(text, pos - 1) && !detail::id_char_at(text, pos + len);
  };
  detail::collect(text, mobile, PiCategory::PHONE, isolated, spans);
  detail::collect(text, landline, PiCategory::PHONE, isolated, spans);
  detail::collect(text, id18, PiCategory::ID,
                  [&](auto pos, auto len) {
                    return isolated(pos, len) && detail::plausible_birth_date(text.substr(pos + 6, 8));
                  },
                  spans);
  detail::collect(text, id15, PiCategory::ID,
                  [&](auto pos, auto len) {
                    if (!isolated(pos, len)) return false;
                    std::string date = "19" + std::string(text.substr(pos + 6, 6));
                    return detail::plausible_birth_date(date);
                  },
                  spans);
  return spans;
}

// Redaction ------------------------------------------------------------------

namespace detail {

struct Segment {
  std::string text;
  bool placeholder = false;
};

// Splits out placeholder tokens already present so later spans can never
// rewrite inside them.
inline std::vector<Segment> segment(std::string_view text) {
  std::vector<Segment> segs;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    bool matched = false;
    if (text[i] == '<') {
      for (auto c : kAllCategories) {
        auto ph = placeholder(c);
        if (text.substr(i, ph.size()) == ph) {
          if (i > start) segs.push_back({std::string(text.substr(start, i - start)), false});
          segs.push_back({std::string(ph), true});
          i += ph.size();
          start = i;
          matched = true;
          break;
        }
      }
    }
    if (!matched) ++i;
  }
  if (start < text.size()) segs.push_back({std::string(text.substr(start)), false});
  return segs;
}

}  // namespace detail

/// Spans in replacement order: decreasing code-point length, then text, so a
/// span nested in a longer one becomes a no-op once the longer is replaced.
inline std::vector<PiSpan> replacement_order(std::vector<PiSpan> spans) {
  std::stable_sort(spans.begin(), spans.end(), [](const PiSpan& a, const PiSpan& b) {
    auto la = text::codepoint_length(a.text);
    auto lb = text::codepoint_length(b.text);
    if (la != lb) return la > lb;
    return a.text < b.text;
  });
  spans.erase(std::unique(spans.begin(), spans.end(),
                          [](const PiSpan& a, const PiSpan& b) { return a.text == b.text; }),
              spans.end());
  return spans;
}

/// Replaces every occurrence of each span with its category placeholder.
/// Returns the number of replacements; `hit` (same size as the ordered span
/// list) records which spans matched anything.
inline std::string redact_text(std::string_view text, const std::vector<PiSpan>& ordered,
                               std::size_t* replacements = nullptr, std::vector<bool>* hit = nullptr) {
  auto segs = detail::segment(text);
  std::size_t count = 0;
  for (std::size_t s = 0; s < ordered.size(); ++s) {
    const auto& span = ordered[s];
    if (span.text.empty()) continue;
    std::vector<detail::Segment> next;
    for (auto& seg : segs) {
      if (seg.placeholder) {
        next.push_back(std::move(seg));
        continue;
      }
      std::size_t from = 0;
      for (auto pos = seg.text.find(span.text); pos != std::string::npos;
           pos = seg.text.find(span.text, from)) {
        if (pos > from) next.push_back({seg.text.substr(from, pos - from), false});
        next.push_back({std::string(placeholder(span.category)), true});
        from = pos + span.text.size();
        ++count;
        if (hit) (*hit)[s] = true;
      }
      if (from < seg.text.size()) next.push_back({seg.text.substr(from), false});
    }
    segs = std::move(next);
  }
  std::string out;
  out.reserve(text.size());
  for (const auto& seg : segs) out += seg.text;
  if (replacements) *replacements += count;
  return out;
}

inline std::string mask_patterns(std::string_view text) {
  return redact_text(text, replacement_order(pattern_spans(text)));
}

// Span detection ---------------------------------------------------------------

class SpanDetector {
 public:
  virtual ~SpanDetector() = default;
  // Returns (text, category) pairs found verbatim in `text`; never rewrites.
  // `self_name` is the pattern-masked username, used only for SELF_NAME.
  virtual std::vector<PiSpan> detect(std::string_view text, std::string_view self_name) = 0;
};

/// Offline rule-based detector covering the context-triggered categories.
class RuleBasedDetector final : public SpanDetector {
 public:
  RuleBasedDetector() = default;
  explicit RuleBasedDetector(std::vector<PiSpan> literals) : literals_(std::move(literals)) {}

  std::vector<PiSpan> detect(std::string_view text, std::string_view self_name) override {
    static const std::regex contact(R"((微信|VX|vx|Vx|wx|WX|V信|QQ|qq)[:：\s]*([A-Za-z0-9_\-]{5,20}))");
    static const std::regex bank(R"((银行卡|卡号|账号|bank card)[:：\s]*([0-9]{16,19}))");
    static const std::regex ipv4(R"(((25[0-5]|2[0-4][0-9]|1?[0-9]?[0-9])\.){3}(25[0-5]|2[0-4][0-9]|1?[0-9]?[0-9]))");
    static const std::regex geo(R"(-?[0-9]{1,3}\.[0-9]{4,}\s*[,，]\s*-?[0-9]{1,3}\.[0-9]{4,})");
    static const std::regex mac(R"(([0-9A-Fa-f]{2}[:\-]){5}[0-9A-Fa-f]{2})");
    static const std::regex imei(R"((IMEI|imei)[:：\s]*([0-9]{15}))");
    static const std::regex plate(
        R"((京|津|沪|渝|冀|豫|云|辽|黑|湘|皖|鲁|新|苏|浙|赣|鄂|桂|甘|晋|蒙|陕|吉|闽|贵|粤|青|藏|川|宁|琼)[A-Z][A-HJ-NP-Z0-9]{5,6})");

    std::vector<PiSpan> out;
    auto group = [&](const std::regex& re, int g, PiCategory cat) {
      auto begin = std::cregex_iterator(text.data(), text.data() + text.size(), re);
      for (auto it = begin; it != std::cregex_iterator(); ++it) out.push_back({(*it)[g].str(), cat});
    };
    group(contact, 2, PiCategory::CONTACT);
    group(bank, 2, PiCategory::BANK);
    group(ipv4, 0, PiCategory::IP);
    group(geo, 0, PiCategory::GEO);
    group(mac, 0, PiCategory::DEVICE);
    group(imei, 2, PiCategory::DEVICE);
    group(plate, 0, PiCategory::PLATE);
    if (text::codepoint_length(self_name) >= 2 && self_name.find('<') == std::string_view::npos &&
        text.find(self_name) != std::string_view::npos) {
      out.push_back({std::string(self_name), PiCategory::SELF_NAME});
    }
    for (const auto& lit : literals_) {
      if (text.find(lit.text) != std::string_view::npos) out.push_back(lit);
    }
    return out;
  }

 private:
  std::vector<PiSpan> literals_;
};

inline constexpr std::string_view kSpanDetectionPrompt = R"PROMPT(You are a personal-information span detector. Read the text below and list every substring that exposes personal information in one of these ten categories:
PHONE (mobile or landline numbers), ID (identity card, passport, travel permit, driver's license and similar document numbers), BANK (bank or credit card numbers, only when the context mentions banking, e.g. 银行卡/卡号/转账), EMAIL (email addresses), CONTACT (personal WeChat / QQ / VX handles, only when introduced by triggers such as 微信/VX/wx/QQ/加我; official or public-platform accounts are not personal), PLATE (vehicle license plates), IP (IPv4 / IPv6 addresses), GEO (precise GPS coordinates or latitude/longitude), DEVICE (MAC / IMEI and similar device identifiers), SELF_NAME (the user's own real name or self-reference; the user's handle is given below as a hint).
Do NOT report public-figure names, brand names, topical hashtags, locations, schools or employers.
Do NOT rewrite, correct or paraphrase anything. Copy each span exactly as it appears in the text.
Return strict JSON: {"spans": [{"text": "<exact substring>", "category": "<CATEGORY>"}]}. Return {"spans": []} when nothing is found.)PROMPT";

/// Detector backed by a chat model. Spans that are not verbatim substrings of
/// the input are dropped.
class ChatSpanDetector final : public SpanDetector {
 public:
  ChatSpanDetector(chat::Client& client, chat::ModelClientConfig cfg) : client_(client), cfg_(std::move(cfg)) {}

  std::vector<PiSpan> detect(std::string_view text, std::string_view self_name) override {
    std::string user = std::string(kSpanDetectionPrompt) + "\n\nUser handle: " + std::string(self_name) +
                       "\n\nText:\n" + std::string(text);
    auto outcome = chat::call_model(client_, {{"user", user}}, cfg_);
    if (!outcome.response) throw Error("span detector failed: " + outcome.error);
    auto j = Json::parse(chat::strip_code_fences(*outcome.response));
    const Json& list = j.is_array() ? j : j.at("spans");
    std::vector<PiSpan> out;
    for (const auto& item : list) {
      auto span_text = item.at("text").get<std::string>();
      auto cat = parse_category(item.at("category").get<std::string>());
      if (!cat || span_text.empty() || text.find(span_text) == std::string_view::npos) continue;
      out.push_back({std::move(span_text), *cat});
    }
    return out;
  }

 private:
  chat::Client& client_;
  chat::ModelClientConfig cfg_;
};

struct DetectionResult {
  std::vector<PiSpan> spans;
  bool detector_failed = false;
  std::string failure;
};

/// Union of the pattern layer and the pluggable detector, deduplicated by
/// (text, category). A throwing detector degrades to pattern-only detection.
inline DetectionResult detect_pi_spans(std::string_view text, SpanDetector* detector,
                                       std::string_view username = {}) {
  DetectionResult result;
  result.spans = pattern_spans(text);
  if (detector) {
    try {
      auto masked = mask_patterns(username);
      for (auto& s : detector->detect(text, masked)) {
        if (!s.text.empty() && text.find(s.text) != std::string_view::npos) result.spans.push_back(std::move(s));
      }
    } catch (const std::exception& e) {
      result.detector_failed = true;
      result.failure = e.what();
    }
  }
  std::vector<PiSpan> unique;
  for (auto& s : result.spans) {
    if (std::find(unique.begin(), unique.end(), s) == unique.end()) unique.push_back(std::move(s));
  }
  result.spans = std::move(unique);
  return result;
}

struct RedactionReport {
  std::size_t replacements = 0;
  std::vector<PiSpan> unmatched;  // spans found in no field
};

namespace detail {
template <typename Fn>
void for_each_text_field(UserStream& r, Fn&& fn) {
  fn(r.meta.username);
  fn(r.meta.bio);
  if (r.meta.gender) fn(*r.meta.gender);
  if (r.meta.location) fn(*r.meta.location);
  if (r.meta.verified_type) fn(*r.meta.verified_type);
  for (auto& p : r.posts) {
    fn(p.title);
    fn(p.content);
    fn(p.media_text);
    fn(p.quote_content);
    fn(p.item);
    for (auto& a : p.anchors) fn(a);
  }
}
}  // namespace detail

/// Applies the spans to every text field of the record (metadata, post text,
/// bound items, anchors) so labels derived from them stay aligned.
inline UserStream redact_record(UserStream record, const std::vector<PiSpan>& spans,
                                RedactionReport* report = nullptr) {
  auto ordered = replacement_order(spans);
  std::vector<bool> hit(ordered.size(), false);
  std::size_t count = 0;
  detail::for_each_text_field(record, [&](std::string& field) {
    if (!field.empty()) field = redact_text(field, ordered, &count, &hit);
  });
  if (report) {
    report->replacements += count;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
      if (!hit[i]) report->unmatched.push_back(ordered[i]);
    }
  }
  return record;
}

inline void redact_strings(std::vector<std::string>& values, const std::vector<PiSpan>& spans) {
  auto ordered = replacement_order(spans);
  for (auto& v : values) v = redact_text(v, ordered);
}

struct Violation {
  std::string field;
  PiCategory category;
  std::string text;
};

inline void to_json(Json& j, const Violation& v) {
  j = Json{{"field", v.field}, {"category", category_name(v.category)}, {"text", v.text}};
}

/// Re-runs the PHONE/EMAIL/ID patterns over every text field. An empty result
/// means the record may be released.
inline std::vector<Violation> safety_net_scan(const UserStream& record) {
  std::vector<Violation> out;
  auto scan = [&](const std::string& field_name, std::string_view value) {
    for (auto& s : pattern_spans(value)) out.push_back({field_name, s.category, s.text});
  };
  scan("username", record.meta.username);
  scan("bio", record.meta.bio);
  if (record.meta.location) scan("location", *record.meta.location);
  for (const auto& p : record.posts) {
    auto prefix = "post:" + p.post_id + ":";
    scan(prefix + "title", p.title);
    scan(prefix + "content", p.content);
    scan(prefix + "media_text", p.media_text);
    scan(prefix + "quote_content", p.quote_content);
    scan(prefix + "item", p.item);
    for (const auto& a : p.anchors) scan(prefix + "anchor", a);
  }
  return out;
}

struct AnonymizeResult {
  UserStream record;
  std::vector<PiSpan> spans;
  std::vector<Violation> violations;
  RedactionReport report;
  bool detector_failed = false;

  bool released() const { return violations.empty(); }
};

/// Hashes identifiers, detects spans over bio, post text, items and anchors,
/// redacts every field and runs the safety net.
inline AnonymizeResult anonymize_user(const UserStream& input, const HashConfig& cfg, SpanDetector* detector) {
  AnonymizeResult res;
  const std::string raw_username = input.meta.username;
  auto absorb = [&](std::string_view text) {
    if (text.empty()) return;
    auto d = detect_pi_spans(text, detector, raw_username);
    res.detector_failed = res.detector_failed || d.detector_failed;
    for (auto& s : d.spans) {
      if (std::find(res.spans.begin(), res.spans.end(), s) == res.spans.end()) res.spans.push_back(std::move(s));
    }
  };
  absorb(input.meta.bio);
  if (input.meta.location) absorb(*input.meta.location);
  for (const auto& p : input.posts) {
    absorb(p.title);
    absorb(p.content);
    absorb(p.media_text);
    absorb(p.quote_content);
    absorb(p.item);
    for (const auto& a : p.anchors) absorb(a);
  }
  res.record = redact_record(input, res.spans, &res.report);

  auto hashed_id = hash_identifier(input.meta.user_id, IdentifierKind::user_id, cfg);
  res.record.meta.user_id = hashed_id;
  for (auto& p : res.record.posts) p.user_id = hashed_id;
  if (!raw_username.empty()) {
    res.record.meta.username = hash_identifier(raw_username, IdentifierKind::username, cfg);
  }
  res.violations = safety_net_scan(res.record);
  return res;
}

}  // namespace streamprofile::privacy
