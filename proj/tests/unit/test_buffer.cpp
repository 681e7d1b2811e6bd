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

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "streamprofile/buffer.hpp"
#include "streamprofile/random.hpp"

using namespace streamprofile;
using namespace streamprofile::buffer;
using sptest::TempDir;

namespace {

const PlatformProfile kWeibo = platform_profile("weibo");

Post valid_post(int i, const std::string& user = "u") {
  auto p = sptest::post(user + "-" + std::to_string(i), user, "2025-06-01T00:00:00Z",
                        "第" + std::to_string(i) + "条有效内容 #标签" + std::to_string(i % 3) + "#", {"标签" + std::to_string(i % 3)});
  p.timestamp += std::chrono::minutes(i);
  return p;
}

Post short_post(int i, const std::string& user = "u") {
  auto p = valid_post(i, user);
  p.content = "短";
  return p;
}

std::vector<Post> valid_posts(int from, int to) {
  std::vector<Post> out;
  for (int i = from; i < to; ++i) out.push_back(valid_post(i));
  return out;
}

std::vector<std::string> ids(const std::vector<Post>& ps) {
  std::vector<std::string> out;
  for (const auto& p : ps) out.push_back(p.post_id);
  return out;
}

}  // namespace

TEST(Push, BelowTriggerNoEmission) {
  auto s = push({}, valid_posts(0, 4), kWeibo);
  EXPECT_EQ(s.valid_count, 4u);
  EXPECT_EQ(s.user_id, "u");
  auto r = try_pop(s, kWeibo);
  EXPECT_FALSE(r.batch);
  EXPECT_EQ(r.state, s);
}

TEST(Push, EmptyPushIsIdentity) {
  auto s = push({}, valid_posts(0, 3), kWeibo);
  EXPECT_EQ(push(s, {}, kWeibo), s);
}

TEST(Push, InvalidPostsNotCounted) {
  auto posts = valid_posts(0, 3);
  posts.push_back(short_post(3));
  auto s = push({}, posts, kWeibo);
  EXPECT_EQ(s.pending.size(), 4u);
  EXPECT_EQ(s.valid_count, 3u);
}

TEST(Push, DuplicatesAndReordering) {
  PushReport rep;
  auto s = push({}, {valid_post(2), valid_post(0)}, kWeibo, &rep);
  EXPECT_EQ(rep.reordered, 1u);
  EXPECT_EQ(ids({s.pending[0].post, s.pending[1].post}), (std::vector<std::string>{"u-0", "u-2"}));
  s = push(s, {valid_post(2), valid_post(1)}, kWeibo, &rep);
  EXPECT_EQ(rep.duplicates, 1u);
  EXPECT_EQ(s.valid_count, 3u);
  EXPECT_EQ(s.pending[1].post.post_id, "u-1");
}

TEST(TryPop, WeiboTriggerEmitsAll) {
  auto r = try_pop(push({}, valid_posts(0, 5), kWeibo), kWeibo);
  ASSERT_TRUE(r.batch);
  EXPECT_EQ(r.batch->posts.size(), 5u);
  EXPECT_EQ(r.batch->step_index, 1u);
  EXPECT_EQ(r.batch->anchors, (std::vector<std::string>{"标签0", "标签1", "标签2"}));
  EXPECT_TRUE(r.state.pending.empty());
  EXPECT_EQ(r.state.valid_count, 0u);
  EXPECT_EQ(r.state.emitted_steps, 1u);
  ASSERT_TRUE(r.state.time_cursor);
  EXPECT_EQ(r.state.time_cursor->post_id, "u-4");
}

TEST(TryPop, ZhihuBelowTrigger) {
  auto zhihu = platform_profile("zhihu");
  std::vector<Post> posts;
  for (int i = 0; i < 2; ++i) {
    auto p = valid_post(i);
    p.content = std::string(60, 'x') + std::to_string(i);
    posts.push_back(p);
  }
  auto s = push({}, posts, zhihu);
  EXPECT_EQ(s.valid_count, 2u);
  EXPECT_FALSE(try_pop(s, zhihu).batch);
}

TEST(TryPop, CapLeavesRemainder) {
  auto prof = kWeibo.with_trigger(4);
  ASSERT_EQ(prof.buffer_cap, 12u);
  auto r = try_pop(push({}, valid_posts(0, 14), prof), prof);
  ASSERT_TRUE(r.batch);
  EXPECT_EQ(r.batch->posts.size(), 12u);
  EXPECT_EQ(r.state.valid_count, 2u);
  EXPECT_EQ(r.state.pending.size(), 2u);
}

TEST(TryPop, DensityReauditDiscardsAndFlags) {
  auto posts = valid_posts(0, 5);
  for (auto& p : posts) p.anchors.clear();
  auto r = try_pop(push({}, posts, kWeibo), kWeibo);
  EXPECT_FALSE(r.batch);
  ASSERT_TRUE(r.discarded);
  EXPECT_TRUE(r.state.flagged);
  EXPECT_EQ(r.state.emitted_steps, 0u);
  auto off = try_pop(push({}, posts, kWeibo), kWeibo, ReauditConfig{false});
  EXPECT_TRUE(off.batch);
}

TEST(BufferProperties, NoLossNoDuplicationOrderedAndBounded) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    std::vector<Post> all;
    for (int i = 0; i < 80; ++i) all.push_back(rng.index(5) == 0 ? short_post(i) : valid_post(i));
    BufferState s;
    std::vector<Post> emitted;
    std::size_t expected_step = 1;
    std::size_t i = 0;
    while (i < all.size()) {
      auto n = static_cast<std::size_t>(rng.index(10));
      std::vector<Post> chunk(all.begin() + static_cast<std::ptrdiff_t>(i),
                              all.begin() + static_cast<std::ptrdiff_t>(std::min(all.size(), i + n)));
      i += chunk.size();
      s = push(std::move(s), chunk, kWeibo);
      while (true) {
        auto r = try_pop(std::move(s), kWeibo, ReauditConfig{false});
        s = std::move(r.state);
        if (!r.batch) break;
        auto valid = std::count_if(r.batch->posts.begin(), r.batch->posts.end(),
                                   [](const Post& p) { return filter::is_valid_post(p, kWeibo); });
        EXPECT_GE(static_cast<std::size_t>(valid), kWeibo.buffer_trigger);
        EXPECT_LE(static_cast<std::size_t>(valid), kWeibo.buffer_cap);
        EXPECT_EQ(r.batch->step_index, expected_step++);
        emitted.insert(emitted.end(), r.batch->posts.begin(), r.batch->posts.end());
      }
    }
    for (const auto& p : s.pending) emitted.push_back(p.post);
    EXPECT_EQ(ids(emitted), ids(all)) << "seed " << seed;
  }
}

TEST(RunUser, DeterministicAndDailyPushes) {
  UserStream u;
  u.meta.user_id = "u";
  for (int d = 0; d < 4; ++d) {
    for (int k = 0; k < 3; ++k) {
      auto p = valid_post(d * 10 + k);
      p.timestamp = sptest::at("2025-06-0" + std::to_string(d + 1) + "T10:00:00Z") + std::chrono::minutes(k);
      u.posts.push_back(p);
    }
  }
  auto a = run_user(u, kWeibo);
  auto b = run_user(u, kWeibo);
  // Day pushes of 3: emission after day 2 (6 valid) and day 4 (6 valid).
  ASSERT_EQ(a.batches.size(), 2u);
  EXPECT_EQ(a.batches[0].posts.size(), 6u);
  EXPECT_EQ(Json(a.final_state), Json(b.final_state));
  EXPECT_EQ(a.batches[1].step_index, 2u);
}

TEST(BufferStore, RoundTripThousandStates) {
  TempDir dir;
  std::vector<BufferState> states;
  for (int i = 0; i < 1000; ++i) {
    BufferState s = push({}, {valid_post(i, "user" + std::to_string(i)), short_post(i + 1, "user" + std::to_string(i))}, kWeibo);
    s.emitted_steps = static_cast<std::size_t>(i % 7);
    if (i % 2) s.time_cursor = Cursor{sptest::at("2025-05-01T00:00:00Z"), "prev"};
    s.flagged = i % 5 == 0;
    states.push_back(s);
  }
  {
    BufferStore store(dir / "buffer.sqlite");
    store.save_all(states);
  }
  BufferStore reopened(dir / "buffer.sqlite");
  auto loaded = reopened.load_all();
  ASSERT_EQ(loaded.size(), 1000u);
  for (const auto& s : states) {
    EXPECT_EQ(Json(loaded.at(s.user_id)).dump(), Json(s).dump());
    EXPECT_EQ(loaded.at(s.user_id), s);
  }
  EXPECT_FALSE(reopened.load("missing"));
}

TEST(BufferStore, EmptyStoreAndCorruption) {
  TempDir dir;
  EXPECT_TRUE(BufferStore(dir / "fresh.sqlite").load_all().empty());
  {
    std::ofstream junk(dir / "junk.sqlite");
    junk << "this is not a database file at all, just some bytes that pretend to be one.......";
  }
  try {
    BufferStore bad(dir / "junk.sqlite");
    bad.load_all();
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("move it aside"), std::string::npos);
  }
}

TEST(BufferStore, CrashRecoveryResumesFromPersistedCursor) {
  TempDir dir;
  auto all = valid_posts(0, 12);
  std::vector<Post> first(all.begin(), all.begin() + 7);

  // Uninterrupted reference run.
  BufferState ref;
  std::vector<std::string> ref_batches;
  for (const auto& chunk : {first, all}) {
    ref = push(std::move(ref), chunk, kWeibo);
    for (auto r = try_pop(ref, kWeibo); r.batch; r = try_pop(ref, kWeibo)) {
      ref = r.state;
      for (const auto& p : r.batch->posts) ref_batches.push_back(p.post_id);
    }
  }

  std::vector<std::string> got;
  {
    BufferStore store(dir / "b.sqlite");
    auto s = push({}, first, kWeibo);
    auto r = try_pop(s, kWeibo);
    ASSERT_TRUE(r.batch);
    for (const auto& p : r.batch->posts) got.push_back(p.post_id);
    store.save(r.state);
    // Crash: the next push is never persisted.
    auto lost = push(r.state, all, kWeibo);
    (void)lost;
  }
  BufferStore store(dir / "b.sqlite");
  auto s = *store.load("u");
  s = push(std::move(s), all, kWeibo);  // replays everything; already-emitted posts dropped
  for (auto r = try_pop(s, kWeibo); r.batch; r = try_pop(s, kWeibo)) {
    s = r.state;
    for (const auto& p : r.batch->posts) got.push_back(p.post_id);
  }
  EXPECT_EQ(got, ref_batches);
  EXPECT_EQ(s.pending.size(), ref.pending.size());
}
