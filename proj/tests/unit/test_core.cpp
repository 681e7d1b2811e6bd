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

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "streamprofile/core.hpp"
#include "streamprofile/io.hpp"
#include "streamprofile/random.hpp"
#include "streamprofile/text.hpp"

using namespace streamprofile;
using sptest::TempDir;

TEST(TagsEqual, IdentityAndTrim) {
  EXPECT_TRUE(tags_equal("学习", "学习"));
  EXPECT_TRUE(tags_equal(" 学习 ", "学习"));
  EXPECT_TRUE(tags_equal("a \t b", "a b"));
  EXPECT_FALSE(tags_equal("学习", "学 习x"));
  EXPECT_FALSE(tags_equal("HBN", "hbn"));
}

TEST(TagsEqual, FullWidthSpaceIsWhitespace) {
  EXPECT_TRUE(tags_equal("　学习　", "学习"));
}

TEST(TagsEqual, EquivalenceOverSamples) {
  const std::vector<std::string> s{"a", " a", "a ", "a  b", "a b", "b", "  "};
  for (const auto& x : s) {
    EXPECT_TRUE(tags_equal(x, x));
    for (const auto& y : s) {
      EXPECT_EQ(tags_equal(x, y), tags_equal(y, x));
      for (const auto& z : s) {
        if (tags_equal(x, y) && tags_equal(y, z)) EXPECT_TRUE(tags_equal(x, z));
      }
    }
  }
}

TEST(SelectionBudget, FixtureValues) {
  EXPECT_EQ(selection_budget(28), 7u);
  EXPECT_EQ(selection_budget(1), 1u);
  EXPECT_EQ(selection_budget(10), 3u);
  EXPECT_THROW(selection_budget(0), InvalidInput);
}

TEST(SelectionBudget, MatchesHalfAwayFromZeroRule) {
  for (std::size_t n = 1; n <= 400; ++n) {
    // 0.25 * n has fractional part 0, .25, .5 or .75; half rounds up.
    std::size_t whole = n / 4, rem = n % 4;
    std::size_t expected = std::max<std::size_t>(1, whole + (rem >= 2 ? 1 : 0));
    EXPECT_EQ(selection_budget(n), expected) << n;
    if (n % 4 == 0) EXPECT_EQ(selection_budget(n), n / 4);
    if (n > 1) EXPECT_GE(selection_budget(n), selection_budget(n - 1));
  }
}

TEST(PlatformProfile, BuiltinsValidate) {
  for (const auto& p : builtin_platforms()) {
    EXPECT_NO_THROW(p.validate()) << p.platform_id;
    EXPECT_EQ(p.buffer_cap, 3 * p.buffer_trigger);
  }
  EXPECT_EQ(platform_profile("weibo").buffer_trigger, 5u);
  EXPECT_EQ(platform_profile("XHS").platform_id, "xiaohongshu");
  EXPECT_EQ(platform_profile("zhihu").buffer_trigger, 3u);
  EXPECT_THROW(platform_profile("myspace"), InvalidInput);
}

TEST(PlatformProfile, JsonOverridesAndValidation) {
  auto p = profile_from_json(Json::parse(R"({"platform_id":"douban","buffer_trigger":4})"));
  EXPECT_EQ(p.buffer_trigger, 4u);
  EXPECT_EQ(p.buffer_cap, 12u);
  EXPECT_THROW(profile_from_json(Json::parse(R"({"platform_id":"douban","buffer_trigger":4,"buffer_cap":3})")),
               InvalidInput);
  EXPECT_THROW(profile_from_json(Json::parse(R"({"platform_id":"douban","density_interval":[2,1]})")), InvalidInput);
}

TEST(Rational, ParseForms) {
  EXPECT_EQ(parse_rational(Json(3)), Rational(3));
  EXPECT_EQ(parse_rational(Json("1/5000")), Rational(1, 5000));
  EXPECT_EQ(parse_rational(Json("0.7")), Rational(7, 10));
  EXPECT_EQ(parse_rational(Json(0.25)), Rational(1, 4));
  EXPECT_EQ(parse_rational(Json("-0.5")), Rational(-1, 2));
  EXPECT_EQ(rational_string(Rational(6, 4)), "3/2");
  EXPECT_EQ(rational_string(Rational(2)), "2");
  EXPECT_THROW(parse_rational(Json("1/0")), InvalidInput);
  EXPECT_THROW(parse_rational(Json("abc")), InvalidInput);
  EXPECT_THROW(parse_rational(Json::array()), InvalidInput);
}

TEST(Json, PostRoundTrip) {
  auto p = sptest::post("p1", "u1", "2025-06-01T08:30:00Z", "hello", {"学习"});
  p.title = "t";
  Json j = p;
  EXPECT_EQ(j["timestamp"], "2025-06-01T08:30:00Z");
  auto back = j.get<Post>();
  EXPECT_EQ(back.post_id, "p1");
  EXPECT_EQ(back.timestamp, p.timestamp);
  EXPECT_EQ(back.anchors, p.anchors);
  EXPECT_THROW(Json::parse(R"({"post_id":"","user_id":"u","timestamp":0})").get<Post>(), DataError);
}

TEST(Json, UserMetaRejectsEmptyId) {
  EXPECT_THROW(Json::parse(R"({"user_id":""})").get<UserMeta>(), DataError);
  auto m = Json::parse(R"({"user_id":"u","location":"北京"})").get<UserMeta>();
  ASSERT_TRUE(m.location);
  EXPECT_EQ(*m.location, "北京");
  EXPECT_FALSE(m.gender);
}

TEST(Text, Utf8RoundTripAndLength) {
  std::string s = "研二a😀";
  EXPECT_EQ(text::codepoint_length(s), 4u);
  EXPECT_EQ(text::encode_utf8(text::decode_utf8(s)), s);
}

TEST(Text, Timestamps) {
  Timestamp t;
  ASSERT_TRUE(text::parse_timestamp("2025-06-01T08:30:00Z", t));
  EXPECT_EQ(text::format_timestamp(t), "2025-06-01T08:30:00Z");
  EXPECT_EQ(text::format_date(t), "2025-06-01");
  ASSERT_TRUE(text::parse_timestamp("2025-06-01T10:30:00+02:00", t));
  EXPECT_EQ(text::format_timestamp(t), "2025-06-01T08:30:00Z");
  EXPECT_FALSE(text::parse_timestamp("yesterday", t));
}

TEST(Io, Sha256KnownVector) {
  EXPECT_EQ(io::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Io, AtomicWriteAndJsonl) {
  TempDir dir;
  io::write_jsonl(dir / "a.jsonl", std::vector<Json>{Json{{"x", 1}}, Json{{"x", 2}}});
  auto rows = io::read_jsonl<Json>(dir / "a.jsonl");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1]["x"], 2);
  EXPECT_THROW(io::read_file(dir / "missing"), DataError);
}

TEST(Rng, DeterministicAndInRange) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  Rng r(7);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(r.index(13), 13u);
  auto s = r.sample(std::vector<int>{1, 2, 3, 4, 5}, 3);
  EXPECT_EQ(s.size(), 3u);
  EXPECT_NE(derive_seed(1, "a"), derive_seed(1, "b"));
}
