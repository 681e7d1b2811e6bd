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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

#include "streamprofile/core.hpp"

namespace streamprofile::io {

namespace fs = std::filesystem;

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0x0F]);
  }
  return out;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct LineError {
  std::string file;
  std::size_t line = 0;
  std::string message;
};

inline void to_json(Json& j, const LineError& e) {
  j = Json{{"file", e.file}, {"line", e.line}, {"message", e.message}};
}

// Calls `on_record` for every non-blank line parsed as JSON. Parse failures
// and exceptions thrown by the callback become per-line errors; an
// unreadable file is fatal.
inline std::vector<LineError> for_each_jsonl(const fs::path& path,
                                             const std::function<void(const Json&)>& on_record) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<LineError> errors;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      on_record(Json::parse(line));
    } catch (const std::exception& e) {
      errors.push_back({path.string(), lineno, e.what()});
    }
  }
  return errors;
}

template <typename T>
std::vector<T> read_jsonl(const fs::path& path) {
  std::vector<T> out;
  auto errors = for_each_jsonl(path, [&](const Json& j) { out.push_back(j.get<T>()); });
  if (!errors.empty()) {
    throw DataError(path.string() + ":" + std::to_string(errors.front().line) + ": " +
                    errors.front().message);
  }
  return out;
}

// Compact JSON, UTF-8 passed through, one record per line.
inline std::string dump_line(const Json& j) {
  return j.dump(-1, ' ', false, Json::error_handler_t::replace);
}

// Writes to a sibling temp file and renames, so readers never see a torn file.
inline void write_file_atomic(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw DataError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

template <typename Range>
void write_jsonl(const fs::path& path, const Range& records) {
  std::string buf;
  for (const auto& r : records) {
    buf += dump_line(Json(r));
    buf.push_back('\n');
  }
  write_file_atomic(path, buf);
}

inline void write_json(const fs::path& path, const Json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

inline Json read_json(const fs::path& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace streamprofile::io
