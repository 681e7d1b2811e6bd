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
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "streamprofile/anchors.hpp"
#include "streamprofile/core.hpp"
#include "streamprofile/io.hpp"
#include "streamprofile/random.hpp"

namespace streamprofile::trending {

struct TrendingEntry {
  std::string tag;
  std::size_t count = 0;  // sampled posts containing the tag

  bool operator==(const TrendingEntry&) const = default;
};

/// Document coverage of tags over one day's post sample, sorted by coverage
/// descending then tag.
struct TrendingTable {
  std::string date;
  std::size_t sample_size = 0;
  std::vector<TrendingEntry> entries;

  Rational coverage(const TrendingEntry& e) const {
    return sample_size == 0 ? Rational(0) : Rational(static_cast<std::int64_t>(e.count),
                                                     static_cast<std::int64_t>(sample_size));
  }

  std::optional<Rational> coverage(std::string_view tag) const {
    for (const auto& e : entries) {
      if (e.tag == tag) return coverage(e);
    }
    return std::nullopt;
  }

  bool operator==(const TrendingTable&) const = default;
};

/// Coverage(t) = |posts containing t| / |sample|. Each element of `posts` is
/// one post's anchor list; repeats within a post count once.
inline TrendingTable sample_coverage(const std::vector<std::vector<std::string>>& posts, std::string date = {}) {
  TrendingTable table;
  table.date = std::move(date);
  table.sample_size = posts.size();
  std::map<std::string, std::size_t> counts;
  for (const auto& anchors : posts) {
    std::set<std::string> uniq(anchors.begin(), anchors.end());
    for (const auto& t : uniq) ++counts[t];
  }
  for (auto& [tag, n] : counts) table.entries.push_back({tag, n});
  std::stable_sort(table.entries.begin(), table.entries.end(),
                   [](const TrendingEntry& a, const TrendingEntry& b) { return a.count > b.count; });
  return table;
}

/// Seeded sample without replacement of at most `n` posts.
template <typename T>
std::vector<T> sample_posts(const std::vector<T>& posts, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return rng.sample(posts, n);
}

/// Adds every tag with coverage >= tau to the blacklist and returns the tags
/// that were not already present.
inline std::vector<std::string> update_blacklist(const TrendingTable& table, const Rational& tau,
                                                 anchors::Blacklist& blacklist) {
  if (tau <= 0) throw InvalidInput("update_blacklist: tau must be > 0");
  std::vector<std::string> delta;
  for (const auto& e : table.entries) {
    if (table.coverage(e) >= tau && blacklist.insert(e.tag).second) delta.push_back(e.tag);
  }
  return delta;
}

/// 0.02% expressed exactly.
inline const Rational kDefaultTau{1, 5000};

inline std::string to_tsv(const TrendingTable& t) {
  std::ostringstream os;
  os << "# date=" << t.date << " sample_size=" << t.sample_size << "\n";
  os << "tag\tcount\tcoverage\n";
  for (const auto& e : t.entries) {
    os << e.tag << "\t" << e.count << "\t" << to_double(t.coverage(e)) << "\n";
  }
  return os.str();
}

inline TrendingTable from_tsv(std::string_view tsv) {
  TrendingTable t;
  std::istringstream is{std::string(tsv)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      std::istringstream hs(line.substr(2));
      std::string kv;
      while (hs >> kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        auto key = kv.substr(0, eq);
        auto val = kv.substr(eq + 1);
        if (key == "date") t.date = val;
        if (key == "sample_size") t.sample_size = std::stoull(val);
      }
      continue;
    }
    if (line.rfind("tag\t", 0) == 0) continue;
    auto tab1 = line.find('\t');
    auto tab2 = line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos || tab2 == std::string::npos) {
      throw DataError("trending table line " + std::to_string(lineno) + ": expected 3 columns");
    }
    t.entries.push_back({line.substr(0, tab1), std::stoull(line.substr(tab1 + 1, tab2 - tab1 - 1))});
  }
  return t;
}

inline void write_table(const std::filesystem::path& dir, const TrendingTable& t) {
  io::write_file_atomic(dir / ("trending-" + t.date + ".tsv"), to_tsv(t));
}

/// Dated tables found in `dir`, keyed by date.
inline std::map<std::string, TrendingTable> read_tables(const std::filesystem::path& dir) {
  std::map<std::string, TrendingTable> out;
  if (!std::filesystem::exists(dir)) return out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    auto name = entry.path().filename().string();
    if (name.rfind("trending-", 0) != 0 || entry.path().extension() != ".tsv") continue;
    auto t = from_tsv(io::read_file(entry.path()));
    out.emplace(t.date, std::move(t));
  }
  return out;
}

/// The table for `date`, else the latest one before it, else the earliest.
inline const TrendingTable* table_for(const std::map<std::string, TrendingTable>& tables, const std::string& date) {
  if (tables.empty()) return nullptr;
  auto it = tables.upper_bound(date);
  if (it == tables.begin()) return &it->second;
  return &std::prev(it)->second;
}

}  // namespace streamprofile::trending
