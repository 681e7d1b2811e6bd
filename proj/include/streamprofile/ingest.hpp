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
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "streamprofile/core.hpp"
#include "streamprofile/io.hpp"

namespace streamprofile {

struct UserStream {
  UserMeta meta;
  std::vector<Post> posts;  // chronological
};

inline void to_json(Json& j, const UserStream& u) { j = Json{{"meta", u.meta}, {"posts", u.posts}}; }

struct LoadResult {
  std::vector<UserStream> users;  // ordered by user_id
  std::vector<io::LineError> errors;
  std::size_t post_count = 0;
};

/// Loads a line-delimited UGC file (and optionally the matching user metadata
/// file), groups posts by user and sorts each stream chronologically.
/// Malformed lines are collected per line; users with posts but no metadata
/// record get a bare UserMeta.
inline LoadResult load_user_stream(const std::filesystem::path& ugc_path,
                                   const std::optional<std::filesystem::path>& meta_path = std::nullopt) {
  LoadResult result;
  std::map<std::string, UserStream> users;
  if (meta_path) {
    auto errs = io::for_each_jsonl(*meta_path, [&](const Json& j) {
      auto meta = j.get<UserMeta>();
      auto id = meta.user_id;
      users[id].meta = std::move(meta);
    });
    result.errors.insert(result.errors.end(), errs.begin(), errs.end());
  }
  std::map<std::string, std::set<std::string>> seen;
  auto errs = io::for_each_jsonl(ugc_path, [&](const Json& j) {
    auto post = j.get<Post>();
    if (!seen[post.user_id].insert(post.post_id).second) {
      throw DataError("duplicate post_id " + post.post_id);
    }
    auto& u = users[post.user_id];
    if (u.meta.user_id.empty()) u.meta.user_id = post.user_id;
    u.posts.push_back(std::move(post));
  });
  result.errors.insert(result.errors.end(), errs.begin(), errs.end());
  for (auto& [id, u] : users) {
    if (u.meta.user_id.empty()) u.meta.user_id = id;
    std::stable_sort(u.posts.begin(), u.posts.end(), chronological);
    result.post_count += u.posts.size();
    result.users.push_back(std::move(u));
  }
  return result;
}

inline void write_user_streams(const std::filesystem::path& meta_path, const std::filesystem::path& ugc_path,
                               const std::vector<UserStream>& users) {
  std::vector<Json> metas;
  std::vector<Json> posts;
  for (const auto& u : users) {
    metas.emplace_back(u.meta);
    for (const auto& p : u.posts) posts.emplace_back(p);
  }
  io::write_jsonl(meta_path, metas);
  io::write_jsonl(ugc_path, posts);
}

}  // namespace streamprofile
