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
#include "streamprofile/anchors.hpp"
#include "streamprofile/filter.hpp"
#include "streamprofile/trending.hpp"

using namespace streamprofile;
using sptest::post;

namespace {

const PlatformProfile& weibo() {
  static const auto p = platform_profile("weibo");
  return p;
}

std::string minute(int m) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "2025-06-01T%02d:%02d:00Z", 8 + m / 60, m % 60);
  return buf;
}

// Distinct, readable Weibo posts, one paired-hash anchor each.
std::vector<Post> normal_day(int n, const std::string& user = "u") {
  static const std::vector<std::string> bodies{
      "今天早上去图书馆复习了整整三个小时，感觉效率还不错", "晚饭做了番茄炒蛋，第一次尝试居然成功了",
      "下午跑步五公里，配速比上周快了二十秒", "读完了一本关于城市规划的书，很多观点值得思考",
      "和朋友约好周末去爬山，希望天气晴朗", "新学了一首吉他曲子，手指按弦还是有点疼",
      "整理房间翻出了小学时候的日记本", "尝试用番茄钟工作法，专注度提高了不少"};
  std::vector<Post> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(post(user + "-p" + std::to_string(i), user, minute(i * 17),
                       bodies[static_cast<std::size_t>(i) % bodies.size()] + " #话题" + std::to_string(i) + "#"));
  }
  return out;
}

}  // namespace

// Anchor extraction ----------------------------------------------------------

TEST(ExtractAnchors, DoubleHash) {
  auto p = post("p", "u", minute(0), "今天的 #高考作文# 真难写");
  EXPECT_EQ(anchors::extract_anchors(p, weibo()), (std::vector<std::string>{"高考作文"}));
  p.content = "没有任何标记的普通内容";
  EXPECT_TRUE(anchors::extract_anchors(p, weibo()).empty());
  p.content = "#甲乙# 和 #甲乙# 以及 #丙丁#";
  EXPECT_EQ(anchors::extract_anchors(p, weibo()), (std::vector<std::string>{"甲乙", "丙丁"}));
  p.content = "未闭合 #标签";
  EXPECT_TRUE(anchors::extract_anchors(p, weibo()).empty());
}

TEST(ExtractAnchors, SingleHash) {
  auto p = post("p", "u", minute(0), "打卡 #研究生 #学习，明天继续 #学习");
  EXPECT_EQ(anchors::extract_anchors(p, platform_profile("xiaohongshu")),
            (std::vector<std::string>{"研究生", "学习"}));
}

TEST(ExtractAnchors, ItemAction) {
  auto p = post("p", "u", minute(0), "");
  p.action = "watched";
  p.item = "《寄生虫》";
  auto douban = platform_profile("douban");
  EXPECT_EQ(anchors::extract_anchors(p, douban), (std::vector<std::string>{"看过·《寄生虫》"}));
  p.action = "want_to_read";
  p.item = "三体";
  EXPECT_EQ(anchors::extract_anchors(p, douban), (std::vector<std::string>{"想读·《三体》"}));
  p.item.clear();
  EXPECT_TRUE(anchors::extract_anchors(p, douban).empty());
}

TEST(ExtractAnchors, QuestionTitleTfidf) {
  auto zhihu = platform_profile("zhihu");
  auto p = post("p", "u", minute(0), "机器学习 机器学习 深度网络 优化方法 数据 模型");
  p.title = "如何入门机器学习？";
  auto out = anchors::extract_anchors(p, zhihu);
  ASSERT_FALSE(out.empty());
  EXPECT_EQ(out[0], "如何入门机器学习？");
  EXPECT_LE(out.size(), 1 + anchors::kTfidfKeywords);
  // "机器"/"器学"/"学习" appear twice, so they outrank singletons.
  EXPECT_EQ(std::vector<std::string>(out.begin() + 1, out.begin() + 4),
            (std::vector<std::string>{"器学", "学习", "机器"}));

  // Pluggable tokenizer: whitespace words.
  anchors::TfidfContext ctx([](std::string_view s) {
    std::vector<std::string> w;
    std::istringstream is{std::string(s)};
    for (std::string t; is >> t;) w.push_back(t);
    return w;
  });
  ctx.add_document(p.content);
  ctx.add_document("数据 数据 模型");
  auto words = anchors::extract_anchors(p, zhihu, &ctx);
  ASSERT_EQ(words.size(), 6u);
  EXPECT_EQ(words[1], "机器学习");
}

TEST(CleanAnchor, Rejections) {
  anchors::Blacklist none;
  EXPECT_EQ(anchors::clean_anchor("12345", none, weibo()).rejected, anchors::RejectReason::pure_numeric);
  EXPECT_EQ(anchors::clean_anchor("１２３", none, weibo()).rejected, anchors::RejectReason::pure_numeric);
  EXPECT_EQ(anchors::clean_anchor("!!?", none, weibo()).rejected, anchors::RejectReason::pure_symbol);
  EXPECT_EQ(anchors::clean_anchor("   ", none, weibo()).rejected, anchors::RejectReason::empty);
  EXPECT_EQ(anchors::clean_anchor("学", none, weibo()).rejected, anchors::RejectReason::length);
  std::string s30;
  for (int i = 0; i < 30; ++i) s30 += "字";
  EXPECT_TRUE(anchors::clean_anchor(s30, none, weibo()).accepted());
  EXPECT_EQ(anchors::clean_anchor(s30 + "字", none, weibo()).rejected, anchors::RejectReason::length);
  auto ok = anchors::clean_anchor(" 高考作文 ", none, weibo());
  ASSERT_TRUE(ok.accepted());
  EXPECT_EQ(ok.text, "高考作文");
}

TEST(CleanAnchor, BlacklistOnlyWhereEnabled) {
  anchors::Blacklist bl{"热搜话题"};
  EXPECT_EQ(anchors::clean_anchor("热搜话题", bl, weibo()).rejected, anchors::RejectReason::blacklisted);
  EXPECT_TRUE(anchors::clean_anchor("热搜话题", bl, platform_profile("xiaohongshu")).accepted());
}

TEST(CleanAnchor, Idempotent) {
  anchors::Blacklist none;
  for (std::string raw : {"  a  b ", "高考　作文", "HBN", "x1"}) {
    auto once = anchors::clean_anchor(raw, none, weibo());
    ASSERT_TRUE(once.accepted()) << raw;
    auto twice = anchors::clean_anchor(once.text, none, weibo());
    EXPECT_EQ(twice.text, once.text);
  }
}

// Coarse filter ----------------------------------------------------------------

TEST(CoarseFilter, NormalWeiboDayKept) {
  auto v = filter::coarse_filter_user(normal_day(6), weibo(), {});
  EXPECT_TRUE(v.kept()) << filter::reason_name(*v.dropped) << " " << v.detail;
  EXPECT_EQ(v.valid_anchors, 6u);
}

TEST(CoarseFilter, NearDuplicatesDropped) {
  std::vector<Post> day;
  for (int i = 0; i < 400; ++i) {
    day.push_back(post("p" + std::to_string(i), "u", minute(i * 2), "关注我领取免费福利，每天更新 #福利#" +
                                                                          std::string(i % 2 ? "!" : "")));
  }
  auto v = filter::coarse_filter_user(day, weibo(), {});
  ASSERT_FALSE(v.kept());
  EXPECT_EQ(*v.dropped, filter::DropReason::duplication);
}

TEST(CoarseFilter, ZeroAnchorsDroppedOnDensity) {
  auto day = normal_day(6);
  for (auto& p : day) p.content = p.content.substr(0, p.content.find(" #"));
  auto v = filter::coarse_filter_user(day, weibo(), {});
  ASSERT_FALSE(v.kept());
  EXPECT_EQ(*v.dropped, filter::DropReason::density);
}

TEST(CoarseFilter, VolumeBurstLengthEntropyRule) {
  filter::CoarseFilterConfig cfg;
  EXPECT_EQ(*filter::coarse_filter_user({}, weibo(), cfg).dropped, filter::DropReason::volume);

  auto burst = normal_day(5);
  for (std::size_t i = 0; i < burst.size(); ++i) burst[i].timestamp = sptest::at("2025-06-01T08:00:00Z") + std::chrono::seconds(10 * i);
  EXPECT_EQ(*filter::coarse_filter_user(burst, weibo(), cfg).dropped, filter::DropReason::burst);

  std::vector<Post> shorts{post("a", "u", minute(0), "嗯"), post("b", "u", minute(30), "好")};
  EXPECT_EQ(*filter::coarse_filter_user(shorts, weibo(), cfg).dropped, filter::DropReason::length);

  std::vector<Post> flat{post("a", "u", minute(0), std::string(600, 'a') + " #ab#")};
  EXPECT_EQ(*filter::coarse_filter_user(flat, weibo(), cfg).dropped, filter::DropReason::entropy);

  cfg.rules.push_back({"commerce", {"下单", "优惠券"}, 0.5});
  auto ads = normal_day(4);
  for (int i = 0; i < 3; ++i) ads[static_cast<std::size_t>(i)].content += " 点击下单";
  auto v = filter::coarse_filter_user(ads, weibo(), cfg);
  ASSERT_FALSE(v.kept());
  EXPECT_EQ(*v.dropped, filter::DropReason::rule);
  EXPECT_EQ(v.detail, "commerce");
}

TEST(CoarseFilter, FilterUserSplitsDaysAndAttachesAnchors) {
  UserStream u;
  u.meta.user_id = "u";
  auto day1 = normal_day(5);
  std::vector<Post> day2{post("z", "u", "2025-06-02T09:00:00Z", "只有一条没有标签的内容而已")};
  u.posts = day1;
  u.posts.insert(u.posts.end(), day2.begin(), day2.end());
  auto r = filter::filter_user(u, weibo(), {});
  ASSERT_EQ(r.days.size(), 2u);
  EXPECT_EQ(r.summary.active_days, 1u);
  EXPECT_EQ(r.stream.posts.size(), 5u);
  EXPECT_EQ(r.stream.posts[0].anchors, (std::vector<std::string>{"话题0"}));
  EXPECT_DOUBLE_EQ(r.summary.tag_density, 1.0);
}

TEST(CoarseFilter, CommutesWithUserPartitioning) {
  UserStream a{{}, normal_day(5, "a")};
  a.meta.user_id = "a";
  UserStream b{{}, normal_day(3, "b")};
  b.meta.user_id = "b";
  auto ra = filter::filter_user(a, weibo(), {});
  auto rb = filter::filter_user(b, weibo(), {});
  // Interleaved corpus, regrouped by user, must give the same verdicts.
  std::vector<Post> mixed = a.posts;
  mixed.insert(mixed.end(), b.posts.begin(), b.posts.end());
  std::stable_sort(mixed.begin(), mixed.end(), chronological);
  UserStream a2{a.meta, {}}, b2{b.meta, {}};
  for (const auto& p : mixed) (p.user_id == "a" ? a2 : b2).posts.push_back(p);
  EXPECT_EQ(Json(filter::filter_user(a2, weibo(), {}).stream).dump(), Json(ra.stream).dump());
  EXPECT_EQ(Json(filter::filter_user(b2, weibo(), {}).stream).dump(), Json(rb.stream).dump());
}

// Longitudinal filter --------------------------------------------------------

TEST(Longitudinal, ActiveDayFloorAndRatio) {
  std::vector<filter::UserActivitySummary> s;
  s.push_back({"short", 2, 10, 0, 1});
  for (int i = 0; i < 100; ++i) s.push_back({"core" + std::to_string(i), 3 + static_cast<std::size_t>(i % 3), 10, 0, 1});
  filter::StrataConfig cfg{3, {{3, 5, 0.5}}, 42};
  auto sel = filter::longitudinal_filter(s, cfg);
  EXPECT_EQ(sel.size(), 50u);
  EXPECT_EQ(std::count(sel.begin(), sel.end(), "short"), 0);
  EXPECT_EQ(filter::longitudinal_filter(s, cfg), sel);
  cfg.seed = 43;
  EXPECT_NE(filter::longitudinal_filter(s, cfg), sel);
}

TEST(Longitudinal, ZhihuShiftedCoreAndUncoveredUsers) {
  std::vector<filter::UserActivitySummary> s{{"two", 2, 4, 0, 1}, {"long", 9, 40, 0, 1}};
  auto zh = filter::default_strata(platform_profile("zhihu"), 1);
  auto sel = filter::longitudinal_filter(s, zh);
  EXPECT_EQ(sel, (std::vector<std::string>{"two"}));  // 2-4 at 0.5 rounds 0.5 up; 5+ at ratio 0
  auto wb = filter::default_strata(weibo(), 1);
  EXPECT_TRUE(filter::longitudinal_filter(s, wb).empty());
  filter::StrataConfig bare{3, {}, 0};
  EXPECT_EQ(filter::longitudinal_filter(s, bare), (std::vector<std::string>{"long"}));
  EXPECT_TRUE(filter::longitudinal_filter({}, wb).empty());
}

// Trending -------------------------------------------------------------------

TEST(Trending, CoverageRatios) {
  auto t = trending::sample_coverage({{"a", "b"}, {"b"}, {"b", "b"}, {"b", "c"}}, "2025-06-01");
  EXPECT_EQ(*t.coverage("a"), Rational(1, 4));
  EXPECT_EQ(*t.coverage("b"), Rational(1));
  EXPECT_EQ(t.entries.front().tag, "b");
  EXPECT_FALSE(t.coverage("zz").has_value());
  EXPECT_TRUE(trending::sample_coverage({}).entries.empty());
}

TEST(Trending, PlantedTagAndBlacklist) {
  std::vector<std::vector<std::string>> posts(500000);
  for (std::size_t i = 0; i < 150; ++i) posts[i * 3000].push_back("planted");
  for (std::size_t i = 0; i < 50; ++i) posts[i * 7000 + 1].push_back("rare");
  auto t = trending::sample_coverage(posts, "d");
  EXPECT_EQ(*t.coverage("planted"), Rational(3, 10000));
  EXPECT_EQ(*t.coverage("rare"), Rational(1, 10000));
  anchors::Blacklist bl;
  auto delta = trending::update_blacklist(t, trending::kDefaultTau, bl);
  EXPECT_EQ(delta, (std::vector<std::string>{"planted"}));
  EXPECT_TRUE(trending::update_blacklist(t, trending::kDefaultTau, bl).empty());
  EXPECT_THROW(trending::update_blacklist(t, Rational(0), bl), InvalidInput);
}

TEST(Trending, TsvRoundTripAndLookup) {
  sptest::TempDir dir;
  auto t1 = trending::sample_coverage({{"a"}, {"a", "b"}}, "2025-06-01");
  auto t2 = trending::sample_coverage({{"c"}}, "2025-06-03");
  trending::write_table(dir.path(), t1);
  trending::write_table(dir.path(), t2);
  auto tables = trending::read_tables(dir.path());
  ASSERT_EQ(tables.size(), 2u);
  EXPECT_EQ(tables.at("2025-06-01"), t1);
  EXPECT_EQ(trending::table_for(tables, "2025-06-02")->date, "2025-06-01");
  EXPECT_EQ(trending::table_for(tables, "2025-05-01")->date, "2025-06-01");
  EXPECT_EQ(trending::table_for(tables, "2025-07-01")->date, "2025-06-03");
  EXPECT_THROW(trending::from_tsv("oops\n"), DataError);
}

TEST(Trending, SampleWithoutReplacement) {
  std::vector<int> xs(100);
  std::iota(xs.begin(), xs.end(), 0);
  auto s = trending::sample_posts(xs, 30, 9);
  std::set<int> uniq(s.begin(), s.end());
  EXPECT_EQ(uniq.size(), 30u);
  EXPECT_EQ(trending::sample_posts(xs, 30, 9), s);
  EXPECT_EQ(trending::sample_posts(xs, 500, 9).size(), 100u);
}
