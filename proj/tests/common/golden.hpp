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

// Loader for the worked-example fixture shared by unit and acceptance tests.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "streamprofile/cluster.hpp"
#include "streamprofile/embedding.hpp"
#include "streamprofile/io.hpp"
#include "streamprofile/tasks.hpp"
#include "streamprofile/trending.hpp"

namespace sptest {

struct GoldenStep {
  streamprofile::Json raw;
  std::vector<streamprofile::StreamBatch> batches;
  streamprofile::cluster::ClusterIndex index;
  streamprofile::trending::TrendingTable trending;
  std::vector<std::string> global_pool;
  std::vector<streamprofile::tasks::StepTask> tasks;
  streamprofile::Prediction prediction;
};

inline std::filesystem::path fixture_dir() { return SP_FIXTURE_DIR; }

inline GoldenStep load_golden(const std::filesystem::path& path = fixture_dir() / "golden_step.json") {
  using namespace streamprofile;
  GoldenStep g;
  g.raw = io::read_json(path);
  const auto& j = g.raw;
  auto user = j.at("user").get<UserMeta>();
  for (const auto& jb : j.at("batches")) {
    StreamBatch b;
    b.user_id = user.user_id;
    b.step_index = jb.at("step_index").get<std::size_t>();
    for (const auto& jp : jb.at("posts")) {
      Json full = jp;
      full["user_id"] = user.user_id;
      auto p = full.get<Post>();
      for (const auto& a : p.anchors) {
        if (std::find(b.anchors.begin(), b.anchors.end(), a) == b.anchors.end()) b.anchors.push_back(a);
      }
      b.posts.push_back(std::move(p));
    }
    b.window_start = b.posts.front().timestamp;
    b.window_end = b.posts.back().timestamp;
    g.batches.push_back(std::move(b));
  }
  HashingEmbedder embedder(64);
  g.index = cluster::ClusterIndex::from_groups(j.at("clusters").get<std::vector<std::vector<std::string>>>(), embedder);
  const auto& jt = j.at("trending");
  g.trending.date = jt.at("date").get<std::string>();
  g.trending.sample_size = jt.at("sample_size").get<std::size_t>();
  for (const auto& e : jt.at("entries")) g.trending.entries.push_back({e.at(0).get<std::string>(), e.at(1).get<std::size_t>()});
  g.global_pool = j.at("global_pool").get<std::vector<std::string>>();
  tasks::DistractorSources src{&g.index, &g.trending, &g.global_pool};
  tasks::TaskBuilderConfig cfg{j.at("seed").get<std::uint64_t>(), 12};
  g.tasks = tasks::build_user_tasks(j.at("platform").get<std::string>(), user, g.batches, src, cfg);
  g.prediction.predicted_tags = j.at("prediction").get<std::vector<std::string>>();
  return g;
}

inline std::vector<std::string> sorted(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace sptest
