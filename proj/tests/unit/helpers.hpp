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

#include <chrono>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "streamprofile/core.hpp"
#include "streamprofile/text.hpp"

namespace sptest {

using namespace streamprofile;

inline Timestamp at(const std::string& iso) {
  Timestamp t;
  if (!text::parse_timestamp(iso, t)) throw std::runtime_error("bad test timestamp " + iso);
  return t;
}

inline Post post(std::string id, std::string user, const std::string& iso, std::string content,
                 std::vector<std::string> anchors = {}) {
  Post p;
  p.post_id = std::move(id);
  p.user_id = std::move(user);
  p.timestamp = at(iso);
  p.content = std::move(content);
  p.anchors = std::move(anchors);
  return p;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("sptest-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace sptest
