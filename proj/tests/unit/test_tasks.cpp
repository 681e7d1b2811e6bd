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

#include "../common/golden.hpp"
#include "helpers.hpp"
#include "streamprofile/cluster.hpp"
#include "streamprofile/embedding.hpp"
#include "streamprofile/metrics.hpp"
#include "streamprofile/tasks.hpp"

using namespace streamprofile;
using namespace streamprofile::cluster;
using namespace streamprofile::tasks;
using sptest::sorted;

namespace {

// Embedder backed by an explicit table; unknown tags map to a fixed axis.
class TableEmbedder final : public Embedder {
 public:
  TableEmbedder(std::size_t dim, std::map<std::string, std::vector<double>> table) : dim_(dim), table_(std::move(table)) {}
  std::size_t dimension() const override { return dim_; }
  Vector embed(std::string_view tag) const override {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(dim_));
    auto it = table_.find(std::string(tag));
    if (it == table_.end()) {
      v[static_cast<Eigen::Index>(dim_ - 1)] = 1.0;
      return v;
    }
    for (std::size_t i = 0; i < dim_; ++i) v[static_cast<Eigen::Index>(i)] = it->second[i];
    return v;
  }

 private:
  std::size_t dim_;
  std::map<std::string, std::vector<double>> table_;
};

PlatformProfile clustering_profile(std::size_t k, std::size_t fmin = 1) {
  auto p = platform_profile("weibo");
  p.cluster_count = k;
  p.min_tag_frequency = fmin;
  return p;
}

TagRegistry registry_of(const std::vector<std::string>& tags, std::size_t freq = 3) {
  TagRegistry r;
  for (const auto& t : tags) r.observe(t, "2025-06-01", freq);
  return r;
}

StreamBatch batch(std::size_t step, const std::vector<std::string>& anchors, const std::string& date = "2025-06-01") {
  StreamBatch b;
  b.user_id = "u";
  b.step_index = step;
  auto p = sptest::post("p" + std::to_string(step), "u", date + "T10:00:00Z", "x", anchors);
  b.posts.push_back(p);
  b.anchors = anchors;
  b.window_start = b.window_end = p.timestamp;
  return b;
}

std::vector<std::string> tag_range(const std::string& prefix, int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

}  // namespace

// Embedding and clustering ------------------------------------------------------

TEST(HashingEmbedder, DeterministicUnitAndDimension) {
  HashingEmbedder e(512, 3);
  auto a = unit(e.embed("高考作文"));
  EXPECT_EQ(a.size(), 512);
  EXPECT_NEAR(a.norm(), 1.0, 1e-12);
  EXPECT_EQ(a, unit(HashingEmbedder(512, 3).embed("高考作文")));
  EXPECT_GT(a.dot(unit(e.embed("高考作文题"))), a.dot(unit(e.embed("宠物猫咪"))));
}

TEST(BaseCluster, SeparableBlobsRecovered) {
  std::map<std::string, std::vector<double>> table;
  std::vector<std::string> left, right;
  for (int i = 0; i < 6; ++i) {
    left.push_back("L" + std::to_string(i));
    right.push_back("R" + std::to_string(i));
    table[left.back()] = {1.0, 0.05 * i, 0.0};
    table[right.back()] = {0.0, 0.05 * i, 1.0};
  }
  TableEmbedder emb(3, table);
  std::vector<std::string> all = left;
  all.insert(all.end(), right.begin(), right.end());
  auto idx = base_cluster(registry_of(all), emb, clustering_profile(2), KMeansConfig{4096, 300, 3, 11});
  ASSERT_EQ(idx.cluster_count(), 2u);
  // Same cluster within a blob, different across.
  for (const auto& t : left) EXPECT_EQ(idx.cluster_of(t), idx.cluster_of("L0"));
  for (const auto& t : right) EXPECT_EQ(idx.cluster_of(t), idx.cluster_of("R0"));
  EXPECT_NE(idx.cluster_of("L0"), idx.cluster_of("R0"));
  for (Eigen::Index k = 0; k < 2; ++k) EXPECT_NEAR(idx.centroids().row(k).norm(), 1.0, 1e-6);
  EXPECT_EQ(base_cluster(registry_of(all), emb, clustering_profile(2), KMeansConfig{4096, 300, 3, 11}), idx);
}

TEST(BaseCluster, FrequencyFloorSingleClusterAndShrink) {
  TagRegistry r = registry_of({"常见标签", "另一个标签"}, 3);
  r.observe("低频标签", "2025-06-02", 2);
  HashingEmbedder emb(64);
  auto idx = base_cluster(r, emb, clustering_profile(1, 3));
  EXPECT_FALSE(idx.cluster_of("低频标签"));
  ASSERT_EQ(idx.cluster_count(), 1u);
  Vector mean = unit(emb.embed("常见标签")) + unit(emb.embed("另一个标签"));
  EXPECT_LT((idx.centroids().row(0).transpose() - unit(mean)).norm(), 1e-9);

  auto shrunk = base_cluster(r, emb, clustering_profile(1024, 3));
  EXPECT_EQ(shrunk.cluster_count(), 2u);
  ASSERT_EQ(shrunk.warnings().size(), 1u);
  EXPECT_NE(shrunk.warnings()[0].find("K reduced"), std::string::npos);
}

TEST(AssignIncremental, DistanceIdentityCases) {
  TableEmbedder emb(3, {{"c", {0.8, 0.6, 0}}, {"on", {0.8, 0.6, 0}}, {"ortho", {0, 0, 1}}, {"near", {1, 0, 0}}});
  auto idx = ClusterIndex::from_groups({{"c"}}, emb);
  auto rep = assign_incremental(idx, {"on", "ortho", "near", "c"}, emb, kOutlierThreshold);
  EXPECT_EQ(rep.assigned, 2u);
  EXPECT_EQ(rep.outliers, 1u);
  EXPECT_EQ(rep.already_indexed, 1u);
  EXPECT_EQ(idx.cluster_of("on"), 0);
  EXPECT_EQ(idx.cluster_of("near"), 0);  // sqrt(0.4) < 0.85
  EXPECT_EQ(idx.cluster_of("ortho"), kOutlierCluster);
  auto s = idx.score(embed_all({"on", "ortho", "near"}, emb));
  EXPECT_NEAR(s.distance[0], 0.0, 1e-7);
  EXPECT_NEAR(s.distance[1], std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(s.distance[2], std::sqrt(0.4), 1e-12);
}

TEST(AssignIncremental, MatchesExhaustiveSearch) {
  HashingEmbedder emb(128, 5);
  auto base = tag_range("基础标签", 60);
  auto idx = base_cluster(registry_of(base), emb, clustering_profile(8), KMeansConfig{4096, 50, 2, 3});
  std::vector<std::string> held;
  for (int i = 0; i < 200; ++i) held.push_back(i % 2 ? "基础标签x" + std::to_string(i) : "新词" + std::to_string(i));
  auto copy = idx;
  assign_incremental(copy, held, emb, 0.85);
  for (const auto& t : held) {
    Vector e = unit(emb.embed(t));
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < idx.centroids().rows(); ++k) {
      double d = (e - idx.centroids().row(k).transpose()).norm();
      if (d < best_d - 1e-12) {
        best_d = d;
        best = static_cast<int>(k);
      }
    }
    EXPECT_EQ(*copy.cluster_of(t), best_d < 0.85 ? best : kOutlierCluster) << t;
  }
}

TEST(PeerLookup, MembershipAndExclusion) {
  HashingEmbedder emb(32);
  TagRegistry reg;
  reg.observe("b", "d", 1);
  reg.observe("c", "d", 5);
  reg.observe("d", "d", 5);
  auto idx = ClusterIndex::from_groups({{"a", "b", "c", "d"}, {"solo"}}, emb, reg);
  idx.add_member(kOutlierCluster, "out");
  EXPECT_EQ(peer_lookup(idx, "a", std::set<std::string>{"b"}), (std::vector<std::string>{"c", "d"}));
  EXPECT_EQ(peer_lookup(idx, "a", std::set<std::string>{}), (std::vector<std::string>{"c", "d", "b"}));
  EXPECT_TRUE(peer_lookup(idx, "solo", std::set<std::string>{}).empty());
  EXPECT_TRUE(peer_lookup(idx, "out", std::set<std::string>{}).empty());
  EXPECT_TRUE(peer_lookup(idx, "unknown", std::set<std::string>{}).empty());
}

TEST(ClusterIndex, SaveLoadRoundTripAndCorruption) {
  sptest::TempDir dir;
  HashingEmbedder emb(32);
  auto idx = base_cluster(registry_of(tag_range("t", 20)), emb, clustering_profile(3));
  assign_incremental(idx, {"新标签", "zz"}, emb);
  idx.save(dir / "index.spci");
  auto back = ClusterIndex::load(dir / "index.spci");
  EXPECT_EQ(back, idx);
  EXPECT_EQ(back.cluster_of("新标签"), idx.cluster_of("新标签"));
  io::write_file_atomic(dir / "bad.spci", "NOPE");
  EXPECT_THROW(ClusterIndex::load(dir / "bad.spci"), DataError);
  auto bytes = io::read_file(dir / "index.spci");
  io::write_file_atomic(dir / "short.spci", bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(ClusterIndex::load(dir / "short.spci"), DataError);
}

// Task building ------------------------------------------------------------------

TEST(SplitGroundTruth, Cases) {
  auto gt = split_ground_truth({"研究生", "研二", "学习", "HBN"}, {"研究生", " 研二 ", "学习", "毕业生", "奖学金"});
  EXPECT_EQ(gt.keep, (std::vector<std::string>{"研究生", "研二", "学习"}));
  EXPECT_EQ(gt.fresh, (std::vector<std::string>{"毕业生", "奖学金"}));
  EXPECT_TRUE(split_ground_truth({"a", "b"}, {"b", "a"}).fresh.empty());
  EXPECT_TRUE(split_ground_truth({"a"}, {"b"}).keep.empty());
}

TEST(DecayCandidates, FrequencyOrderAndExclusion) {
  EXPECT_TRUE(build_decay_candidates({}, {"x"}).empty());
  auto d = build_decay_candidates({{"a", 1}, {"b", 4}, {"c", 2}, {"keep", 9}}, {"keep"});
  EXPECT_EQ(d, (std::vector<std::string>{"b", "c", "a"}));
}

TEST(WaterFill, EvenSplitRedistributionAndShortfall) {
  EXPECT_EQ(water_fill(21, {9, 4, 3, 5}), (std::array<std::size_t, 4>{9, 4, 3, 5}));
  EXPECT_EQ(water_fill(21, {0, 10, 10, 10}), (std::array<std::size_t, 4>{0, 7, 7, 7}));
  EXPECT_EQ(water_fill(12, {50, 50, 50, 50}), (std::array<std::size_t, 4>{3, 3, 3, 3}));
  EXPECT_EQ(water_fill(3, {1, 0, 0, 9}), (std::array<std::size_t, 4>{1, 0, 0, 2}));
  EXPECT_THROW(water_fill(21, {5, 5, 5, 5}), DataError);
}

TEST(AssembleTask, SmallestPoolDeterminismAndDuplicates) {
  auto b = batch(1, {"x"});
  GroundTruth gt{{"x"}, {}};
  std::vector<LabeledTag> d{{"d1", TagLabel::decay}, {"d2", TagLabel::random}, {"d3", TagLabel::random}};
  auto t = assemble_task(b, gt, d, 5);
  EXPECT_EQ(t.pool.tags.size(), 4u);
  EXPECT_EQ(t.pool.k, 1u);
  EXPECT_EQ(t.alpha(), Rational(1));
  EXPECT_EQ(assemble_task(b, gt, d, 5).pool.tags, t.pool.tags);
  d.push_back({"x", TagLabel::peer});
  EXPECT_THROW(assemble_task(b, gt, d, 5), DataError);
}

TEST(CapPositives, KeepsProportion) {
  GroundTruth gt{tag_range("k", 10), tag_range("n", 10)};
  auto capped = cap_positives(gt, 12, 1);
  EXPECT_EQ(capped.keep.size(), 6u);
  EXPECT_EQ(capped.fresh.size(), 6u);
  EXPECT_EQ(cap_positives(gt, 12, 1).keep, capped.keep);
  EXPECT_EQ(cap_positives(gt, 40, 1).keep.size(), 10u);
}

TEST(BuildUserTasks, StepCountFirstStepRedistributionAndViews) {
  std::vector<std::string> global = tag_range("全局", 200);
  DistractorSources src{nullptr, nullptr, &global};
  std::vector<StreamBatch> batches{batch(1, {"a", "b"}), batch(2, {"b", "c", "d"}), batch(3, {"a", "e"}),
                                   batch(4, {"f", "g", "h", "i"})};
  UserMeta meta;
  meta.user_id = "u";
  auto ts = build_user_tasks("weibo", meta, batches, src, {3, 12});
  ASSERT_EQ(ts.size(), 3u);
  for (const auto& t : ts) {
    auto positives = t.gt_keep.size() + t.gt_new.size();
    EXPECT_EQ(t.pool.k, selection_budget(t.pool.tags.size()));
    EXPECT_EQ(t.pool.k, positives);
    EXPECT_EQ(t.pool.tags.size(), 4 * positives);
  }
  // Step 1: history {a, b}; future {b, c, d}; decay candidate only "a".
  EXPECT_EQ(ts[0].pool.with_label(TagLabel::decay), (std::vector<std::string>{"a"}));
  EXPECT_EQ(ts[0].pool.with_label(TagLabel::random).size(), 8u);

  auto view = agent_view(ts[1]);
  auto dumped = view.dump();
  for (const char* hidden : {"labels", "gt_keep", "gt_new", "\"keep\"", "decay"}) {
    EXPECT_EQ(dumped.find(hidden), std::string::npos) << hidden;
  }
  auto back = join(view, answer_key(ts[1]));
  EXPECT_EQ(back.pool.tags, ts[1].pool.tags);
  EXPECT_EQ(back.gt_new, ts[1].gt_new);
  EXPECT_THROW(join(view, answer_key(ts[2])), DataError);
  EXPECT_EQ(Json(build_user_tasks("weibo", meta, batches, src, {3, 12})[2].pool.tags).dump(),
            Json(ts[2].pool.tags).dump());
}

TEST(BuildUserTasks, FirstStepWithoutHistoryOverlapHasNoDecay) {
  std::vector<std::string> global = tag_range("全局", 100);
  DistractorSources src{nullptr, nullptr, &global};
  UserMeta meta;
  meta.user_id = "u";
  // Every history tag reappears, so the decay class is empty.
  auto ts = build_user_tasks("weibo", meta, {batch(1, {"a"}), batch(2, {"a", "b"})}, src, {1, 12});
  ASSERT_EQ(ts.size(), 1u);
  EXPECT_TRUE(ts[0].pool.with_label(TagLabel::decay).empty());
  EXPECT_EQ(ts[0].pool.with_label(TagLabel::random).size(), 6u);
}

TEST(BuildUserTasks, ShortfallIsHardError) {
  std::vector<std::string> global{"g1", "g2"};
  DistractorSources src{nullptr, nullptr, &global};
  UserMeta meta;
  meta.user_id = "u";
  EXPECT_THROW(build_user_tasks("weibo", meta, {batch(1, {"a"}), batch(2, {"b", "c"})}, src, {1, 12}), DataError);
}

TEST(GoldenFixture, PoolSplitTaxonomyAndScore) {
  auto g = sptest::load_golden();
  ASSERT_EQ(g.tasks.size(), 1u);
  const auto& t = g.tasks[0];
  const auto& ex = g.raw.at("expected");
  EXPECT_EQ(t.pool.tags.size(), 28u);
  EXPECT_EQ(t.pool.k, 7u);
  EXPECT_EQ(sorted(t.gt_keep), sorted(ex.at("gt_keep").get<std::vector<std::string>>()));
  EXPECT_EQ(sorted(t.gt_new), sorted(ex.at("gt_new").get<std::vector<std::string>>()));
  for (auto [label, key] : {std::pair{TagLabel::decay, "decay"}, std::pair{TagLabel::peer, "peer"},
                            std::pair{TagLabel::viral, "viral"}, std::pair{TagLabel::random, "random"}}) {
    EXPECT_EQ(sorted(t.pool.with_label(label)), sorted(ex.at(key).get<std::vector<std::string>>())) << key;
  }
  auto s = metrics::score_step(t, g.prediction);
  EXPECT_EQ(*s.R, Rational(3, 7));
  EXPECT_EQ(*s.R_stab, Rational(1));
  EXPECT_EQ(*s.R_nov, Rational(0));
  EXPECT_EQ(s.delta, 4u);
  EXPECT_EQ(*s.error(TagLabel::decay), Rational(4, 9));
  EXPECT_EQ(*s.error(TagLabel::peer), Rational(0));
  EXPECT_EQ(*metrics::verify_identity(s), Rational(0));
}
