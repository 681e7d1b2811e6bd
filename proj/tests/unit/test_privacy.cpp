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

#include <fstream>
#include <regex>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "streamprofile/ingest.hpp"
#include "streamprofile/privacy.hpp"

using namespace streamprofile;
using namespace streamprofile::privacy;
using sptest::TempDir;

namespace {

void write_lines(const std::filesystem::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p);
  for (const auto& l : lines) out << l << "\n";
}

std::string ugc_line(const std::string& id, const std::string& user, const std::string& ts, const std::string& text) {
  return Json{{"post_id", id}, {"user_id", user}, {"timestamp", ts}, {"content", text}}.dump();
}

class ThrowingDetector final : public SpanDetector {
 public:
  std::vector<PiSpan> detect(std::string_view, std::string_view) override { throw Error("timeout"); }
};

bool has_span(const std::vector<PiSpan>& spans, const std::string& text, PiCategory c) {
  return std::find(spans.begin(), spans.end(), PiSpan{text, c}) != spans.end();
}

}  // namespace

TEST(LoadUserStream, SortsShuffledPosts) {
  TempDir dir;
  write_lines(dir / "ugc.jsonl", {ugc_line("b", "u1", "2025-06-02T00:00:00Z", "second"),
                                  ugc_line("c", "u1", "2025-06-03T00:00:00Z", "third"),
                                  ugc_line("a", "u1", "2025-06-01T00:00:00Z", "first")});
  auto r = load_user_stream(dir / "ugc.jsonl");
  ASSERT_EQ(r.users.size(), 1u);
  ASSERT_EQ(r.users[0].posts.size(), 3u);
  EXPECT_EQ(r.users[0].posts[0].post_id, "a");
  EXPECT_EQ(r.users[0].posts[2].post_id, "c");
  EXPECT_TRUE(r.errors.empty());
}

TEST(LoadUserStream, EmptyFile) {
  TempDir dir;
  write_lines(dir / "ugc.jsonl", {});
  auto r = load_user_stream(dir / "ugc.jsonl");
  EXPECT_TRUE(r.users.empty());
  EXPECT_TRUE(r.errors.empty());
}

TEST(LoadUserStream, MalformedLineCounted) {
  TempDir dir;
  std::vector<std::string> lines;
  for (int i = 0; i < 10; ++i) {
    if (i == 4) {
      lines.push_back("{not json");
    } else {
      lines.push_back(ugc_line("p" + std::to_string(i), "u" + std::to_string(i % 2), "2025-06-01T0" +
                                                                                       std::to_string(i) + ":00:00Z",
                               "x"));
    }
  }
  write_lines(dir / "ugc.jsonl", lines);
  auto r = load_user_stream(dir / "ugc.jsonl");
  EXPECT_EQ(r.post_count, 9u);
  ASSERT_EQ(r.errors.size(), 1u);
  EXPECT_EQ(r.errors[0].line, 5u);
}

TEST(LoadUserStream, MetadataJoinedAndUnreadableFatal) {
  TempDir dir;
  write_lines(dir / "users.jsonl", {Json{{"user_id", "u1"}, {"username", "alice"}}.dump()});
  write_lines(dir / "ugc.jsonl", {ugc_line("a", "u1", "2025-06-01T00:00:00Z", "x")});
  auto r = load_user_stream(dir / "ugc.jsonl", dir / "users.jsonl");
  ASSERT_EQ(r.users.size(), 1u);
  EXPECT_EQ(r.users[0].meta.username, "alice");
  EXPECT_THROW(load_user_stream(dir / "nope.jsonl"), DataError);
}

TEST(HashIdentifier, DocumentedFormats) {
  HashConfig cfg{"s", "XHS"};
  EXPECT_EQ(hash_identifier("alice", IdentifierKind::username, cfg), "U_5e0f217a");
  auto id = hash_identifier("user-42", IdentifierKind::user_id, cfg);
  EXPECT_TRUE(std::regex_match(id, std::regex("XHS_[0-9a-f]{10}"))) << id;
  EXPECT_EQ(id, hash_identifier("user-42", IdentifierKind::user_id, cfg));
  HashConfig other{"pepper", "XHS"};
  EXPECT_EQ(hash_identifier("user-42", IdentifierKind::user_id, other), "XHS_78126829e9");
  EXPECT_THROW(hash_identifier("", IdentifierKind::user_id, cfg), InvalidInput);
  EXPECT_THROW(hash_identifier("x", IdentifierKind::user_id, HashConfig{"", "XHS"}), InvalidInput);
}

TEST(PatternSpans, PhoneEmailId) {
  auto s = pattern_spans("call 13812345678");
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0], (PiSpan{"13812345678", PiCategory::PHONE}));
  EXPECT_TRUE(pattern_spans("no pii here").empty());
  EXPECT_TRUE(has_span(pattern_spans("mail me: a.b@example.com"), "a.b@example.com", PiCategory::EMAIL));
  EXPECT_TRUE(has_span(pattern_spans("身份证 11010519491231002X 请核对"), "11010519491231002X", PiCategory::ID));
  EXPECT_TRUE(has_span(pattern_spans("电话 +86 138-1234-5678"), "+86 138-1234-5678", PiCategory::PHONE));
  EXPECT_TRUE(has_span(pattern_spans("座机 010-12345678"), "010-12345678", PiCategory::PHONE));
}

TEST(PatternSpans, DigitBoundariesRespected) {
  // A phone-shaped run inside a longer digit string is not a phone.
  EXPECT_TRUE(pattern_spans("order 9913812345678123").empty());
  // Implausible birth date: not an ID.
  EXPECT_TRUE(pattern_spans("code 110105199913990021").empty());
}

TEST(DetectPiSpans, DetectorFailureFallsBackToPatterns) {
  ThrowingDetector d;
  auto r = detect_pi_spans("write to x@y.com", &d);
  EXPECT_TRUE(r.detector_failed);
  EXPECT_TRUE(has_span(r.spans, "x@y.com", PiCategory::EMAIL));
}

TEST(DetectPiSpans, UnionDeduplicated) {
  RuleBasedDetector d({{"x@y.com", PiCategory::EMAIL}});
  auto r = detect_pi_spans("write to x@y.com 微信: abc_12345", &d);
  EXPECT_FALSE(r.detector_failed);
  EXPECT_EQ(std::count(r.spans.begin(), r.spans.end(), PiSpan{"x@y.com", PiCategory::EMAIL}), 1);
  EXPECT_TRUE(has_span(r.spans, "abc_12345", PiCategory::CONTACT));
}

TEST(RedactRecord, PlaceholderAndOverlap) {
  UserStream u;
  u.meta.user_id = "u";
  u.posts.push_back(sptest::post("p", "u", "2025-06-01T00:00:00Z", "a@b.com"));
  auto r = redact_record(u, {{"a@b.com", PiCategory::EMAIL}});
  EXPECT_EQ(r.posts[0].content, "<EMAIL>");

  u.posts[0].content = "卡号 1381234567890 已绑定";
  RedactionReport rep;
  auto o = redact_record(u, {{"13812345678", PiCategory::PHONE}, {"1381234567890", PiCategory::BANK}}, &rep);
  EXPECT_EQ(o.posts[0].content, "卡号 <BANK> 已绑定");
  ASSERT_EQ(rep.unmatched.size(), 1u);
  EXPECT_EQ(rep.unmatched[0].category, PiCategory::PHONE);
}

TEST(RedactRecord, ZeroSpansIdentityAndIdempotence) {
  UserStream u;
  u.meta.user_id = "u";
  u.meta.bio = "我的邮箱 me@site.org 电话13912345678";
  u.posts.push_back(sptest::post("p", "u", "2025-06-01T00:00:00Z", "重复 me@site.org", {"me@site.org"}));
  auto same = redact_record(u, {});
  EXPECT_EQ(Json(same).dump(), Json(u).dump());
  std::vector<PiSpan> spans{{"me@site.org", PiCategory::EMAIL}, {"13912345678", PiCategory::PHONE}};
  auto once = redact_record(u, spans);
  auto twice = redact_record(once, spans);
  EXPECT_EQ(Json(once).dump(), Json(twice).dump());
  EXPECT_EQ(once.posts[0].anchors[0], "<EMAIL>");
  EXPECT_EQ(once.meta.bio, "我的邮箱 <EMAIL> 电话<PHONE>");
}

TEST(RedactText, PlaceholdersNeverRewritten) {
  // "PHONE" inside an existing placeholder must survive a literal span.
  auto out = redact_text("<PHONE> PHONE", replacement_order({{"PHONE", PiCategory::SELF_NAME}}));
  EXPECT_EQ(out, "<PHONE> <SELF>");
}

TEST(SafetyNet, ResidualsAndPlaceholders) {
  UserStream u;
  u.meta.user_id = "u";
  u.posts.push_back(sptest::post("p", "u", "2025-06-01T00:00:00Z", "联系 <PHONE> 或 <EMAIL>"));
  EXPECT_TRUE(safety_net_scan(u).empty());
  u.posts[0].quote_content = "x@y.com";
  auto v = safety_net_scan(u);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].category, PiCategory::EMAIL);
}

TEST(Anonymize, HashesRedactsAndReleases) {
  UserStream u;
  u.meta.user_id = "raw-user";
  u.meta.username = "张小明";
  u.meta.bio = "我是张小明，微信 zxm_2024 电话 13812345678";
  u.posts.push_back(sptest::post("p1", "raw-user", "2025-06-01T00:00:00Z", "邮箱 zxm@mail.cn 身份证 11010519491231002X"));
  RuleBasedDetector d;
  auto r = anonymize_user(u, {"salt", "XHS"}, &d);
  EXPECT_TRUE(r.released());
  EXPECT_TRUE(std::regex_match(r.record.meta.user_id, std::regex("XHS_[0-9a-f]{10}")));
  EXPECT_EQ(r.record.posts[0].user_id, r.record.meta.user_id);
  EXPECT_TRUE(std::regex_match(r.record.meta.username, std::regex("U_[0-9a-f]{8}")));
  EXPECT_EQ(r.record.meta.bio, "我是<SELF>，微信 <CONTACT> 电话 <PHONE>");
  EXPECT_EQ(r.record.posts[0].content, "邮箱 <EMAIL> 身份证 <ID>");
  auto dumped = Json(r.record).dump();
  EXPECT_EQ(dumped.find("salt"), std::string::npos);
}
