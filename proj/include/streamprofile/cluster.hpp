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
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "streamprofile/core.hpp"
#include "streamprofile/embedding.hpp"
#include "streamprofile/io.hpp"
#include "streamprofile/random.hpp"

namespace streamprofile::cluster {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct RegistryEntry {
  std::string first_seen;  // YYYY-MM-DD
  std::size_t frequency = 0;

  bool operator==(const RegistryEntry&) const = default;
};

/// Every anchor seen so far with its first-seen date and cumulative count.
class TagRegistry {
 public:
  void observe(const std::string& tag, const std::string& date, std::size_t count = 1) {
    auto [it, inserted] = entries_.try_emplace(tag, RegistryEntry{date, 0});
    if (!inserted && date < it->second.first_seen) it->second.first_seen = date;
    it->second.frequency += count;
  }

  std::size_t frequency(const std::string& tag) const {
    auto it = entries_.find(tag);
    return it == entries_.end() ? 0 : it->second.frequency;
  }

  /// Tags with frequency >= f_min, lexicographic.
  std::vector<std::string> eligible(std::size_t f_min) const {
    std::vector<std::string> out;
    for (const auto& [tag, e] : entries_) {
      if (e.frequency >= f_min) out.push_back(tag);
    }
    return out;
  }

  std::optional<std::string> first_date() const {
    std::optional<std::string> d;
    for (const auto& [tag, e] : entries_) {
      if (!d || e.first_seen < *d) d = e.first_seen;
    }
    return d;
  }

  const std::map<std::string, RegistryEntry>& entries() const { return entries_; }
  std::map<std::string, RegistryEntry>& entries() { return entries_; }

  bool operator==(const TagRegistry&) const = default;

 private:
  std::map<std::string, RegistryEntry> entries_;
};

struct KMeansConfig {
  std::size_t batch_size = 4096;
  std::size_t max_iterations = 300;
  std::size_t n_init = 3;
  std::uint64_t seed = 0;
  double tolerance = 1e-10;  // total centroid movement that counts as converged
};

inline constexpr double kOutlierThreshold = 0.85;
inline constexpr int kOutlierCluster = -1;

inline Matrix embed_all(const std::vector<std::string>& tags, const Embedder& embedder) {
  Matrix m(static_cast<Eigen::Index>(tags.size()), static_cast<Eigen::Index>(embedder.dimension()));
  for (std::size_t i = 0; i < tags.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = unit(embedder.embed(tags[i]));
  return m;
}

/// Index of the largest entry, ties to the lowest index.
inline Eigen::Index argmax_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < row.size(); ++k) {
    if (row[k] > row[best]) best = k;
  }
  return best;
}

/// Euclidean distance between unit vectors from their inner product.
inline double unit_distance(double dot) { return std::sqrt(std::max(0.0, 2.0 - 2.0 * dot)); }

struct Assignment {
  std::vector<int> cluster;  // per tag
  std::vector<double> distance;
};

class ClusterIndex {
 public:
  ClusterIndex() = default;

  std::size_t dimension() const { return static_cast<std::size_t>(centroids_.cols()); }
  std::size_t cluster_count() const { return static_cast<std::size_t>(centroids_.rows()); }
  const Matrix& centroids() const { return centroids_; }
  const std::vector<std::vector<std::string>>& members() const { return members_; }
  const std::vector<std::string>& outliers() const { return outliers_; }
  const TagRegistry& registry() const { return registry_; }
  TagRegistry& registry() { return registry_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  std::optional<int> cluster_of(const std::string& tag) const {
    auto it = tag_cluster_.find(tag);
    if (it == tag_cluster_.end()) return std::nullopt;
    return it->second;
  }

  /// Stable cluster key for coarse-level comparisons; outliers and unknown
  /// tags map to singleton keys.
  std::string cluster_key(const std::string& tag) const {
    auto c = cluster_of(tag);
    if (!c || *c == kOutlierCluster) return "t:" + tag;
    return "c:" + std::to_string(*c);
  }

  /// Nearest centroid for each row of `unit_embeddings` via one n x K score
  /// product; distance from the inner-product identity.
  Assignment score(const Matrix& unit_embeddings) const {
    Assignment a;
    Matrix scores = unit_embeddings * centroids_.transpose();
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
      auto best = argmax_row(scores.row(i));
      a.cluster.push_back(static_cast<int>(best));
      a.distance.push_back(unit_distance(scores(i, best)));
    }
    return a;
  }

  /// Builds an index from explicit groups; centroids are normalized member
  /// means. Used for fixtures and by base_cluster.
  static ClusterIndex from_groups(const std::vector<std::vector<std::string>>& groups, const Embedder& embedder,
                                  TagRegistry registry = {}) {
    ClusterIndex idx;
    idx.registry_ = std::move(registry);
    idx.centroids_ = Matrix::Zero(static_cast<Eigen::Index>(groups.size()),
                                  static_cast<Eigen::Index>(embedder.dimension()));
    idx.members_.resize(groups.size());
    for (std::size_t k = 0; k < groups.size(); ++k) {
      Vector sum = Vector::Zero(static_cast<Eigen::Index>(embedder.dimension()));
      for (const auto& t : groups[k]) {
        sum += unit(embedder.embed(t));
        idx.add_member(static_cast<int>(k), t);
      }
      idx.centroids_.row(static_cast<Eigen::Index>(k)) = unit(sum).transpose();
    }
    return idx;
  }

  void add_member(int k, const std::string& tag) {
    if (tag_cluster_.count(tag)) throw DataError("tag indexed twice: " + tag);
    tag_cluster_[tag] = k;
    if (k == kOutlierCluster) {
      outliers_.push_back(tag);
    } else {
      members_[static_cast<std::size_t>(k)].push_back(tag);
    }
  }

  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

  void set_centroids(Matrix c) {
    centroids_ = std::move(c);
    members_.assign(static_cast<std::size_t>(centroids_.rows()), {});
  }

  bool operator==(const ClusterIndex& o) const {
    return centroids_ == o.centroids_ && members_ == o.members_ && outliers_ == o.outliers_ &&
           registry_ == o.registry_;
  }

  // Binary format: "SPCI", u32 version, u32 K, u32 d, K*d little-endian f64
  // centroids, u64 length + JSON {members, outliers, registry}.
  void save(const std::filesystem::path& path) const {
    std::string buf = "SPCI";
    auto put32 = [&](std::uint32_t v) { buf.append(reinterpret_cast<const char*>(&v), 4); };
    put32(kFormatVersion);
    put32(static_cast<std::uint32_t>(centroids_.rows()));
    put32(static_cast<std::uint32_t>(centroids_.cols()));
    buf.append(reinterpret_cast<const char*>(centroids_.data()),
               static_cast<std::size_t>(centroids_.size()) * sizeof(double));
    Json reg = Json::object();
    for (const auto& [tag, e] : registry_.entries()) reg[tag] = Json::array({e.first_seen, e.frequency});
    auto tail = Json{{"members", members_}, {"outliers", outliers_}, {"registry", reg}}.dump();
    std::uint64_t len = tail.size();
    buf.append(reinterpret_cast<const char*>(&len), 8);
    buf += tail;
    io::write_file_atomic(path, buf);
  }

  static ClusterIndex load(const std::filesystem::path& path) {
    auto buf = io::read_file(path);
    std::size_t pos = 0;
    auto need = [&](std::size_t n) {
      if (pos + n > buf.size()) throw DataError("cluster index " + path.string() + " is truncated");
    };
    need(4);
    if (buf.compare(0, 4, "SPCI") != 0) throw DataError("cluster index " + path.string() + ": bad magic");
    pos = 4;
    auto get32 = [&] {
      need(4);
      std::uint32_t v;
      std::memcpy(&v, buf.data() + pos, 4);
      pos += 4;
      return v;
    };
    if (auto v = get32(); v != kFormatVersion) {
      throw DataError("cluster index " + path.string() + ": unsupported version " + std::to_string(v));
    }
    auto k = get32();
    auto d = get32();
    ClusterIndex idx;
    idx.centroids_.resize(k, d);
    std::size_t bytes = static_cast<std::size_t>(k) * d * sizeof(double);
    need(bytes);
    std::memcpy(idx.centroids_.data(), buf.data() + pos, bytes);
    pos += bytes;
    need(8);
    std::uint64_t len;
    std::memcpy(&len, buf.data() + pos, 8);
    pos += 8;
    need(len);
    auto tail = Json::parse(buf.substr(pos, len));
    idx.members_.assign(k, {});
    auto members = tail.at("members").get<std::vector<std::vector<std::string>>>();
    if (members.size() != k) throw DataError("cluster index member table does not match K");
    for (std::size_t c = 0; c < k; ++c) {
      for (const auto& t : members[c]) idx.add_member(static_cast<int>(c), t);
    }
    for (const auto& t : tail.at("outliers")) idx.add_member(kOutlierCluster, t.get<std::string>());
    for (const auto& [tag, e] : tail.at("registry").items()) {
      idx.registry_.entries()[tag] = RegistryEntry{e.at(0).get<std::string>(), e.at(1).get<std::size_t>()};
    }
    return idx;
  }

 private:
  static constexpr std::uint32_t kFormatVersion = 1;

  Matrix centroids_;
  std::vector<std::vector<std::string>> members_;
  std::vector<std::string> outliers_;
  std::map<std::string, int> tag_cluster_;
  TagRegistry registry_;
  std::vector<std::string> warnings_;
};

namespace detail {

inline void normalize_rows(Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    double n = m.row(r).norm();
    if (n > 0) m.row(r) /= n;
  }
}

inline double wcss(const Matrix& x, const Matrix& c, std::vector<int>* labels = nullptr) {
  Matrix scores = x * c.transpose();
  double total = 0;
  if (labels) labels->assign(static_cast<std::size_t>(x.rows()), 0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    auto best = argmax_row(scores.row(i));
    total += std::max(0.0, 2.0 - 2.0 * scores(i, best));
    if (labels) (*labels)[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return total;
}

// k-means++ seeding on unit vectors.
inline Matrix seed_centroids(const Matrix& x, std::size_t k, Rng& rng) {
  const auto n = static_cast<std::size_t>(x.rows());
  Matrix c(static_cast<Eigen::Index>(k), x.cols());
  c.row(0) = x.row(static_cast<Eigen::Index>(rng.index(n)));
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  for (std::size_t j = 1; j < k; ++j) {
    Eigen::VectorXd dots = x * c.row(static_cast<Eigen::Index>(j - 1)).transpose();
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], std::max(0.0, 2.0 - 2.0 * dots[static_cast<Eigen::Index>(i)]));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total <= 0) {
      pick = rng.index(n);
    } else {
      double r = rng.uniform() * total;
      for (pick = 0; pick + 1 < n; ++pick) {
        r -= d2[pick];
        if (r < 0) break;
      }
    }
    c.row(static_cast<Eigen::Index>(j)) = x.row(static_cast<Eigen::Index>(pick));
  }
  return c;
}

// Spherical mini-batch k-means followed by one full refinement pass that sets
// each centroid to the normalized mean of its members.
inline Matrix minibatch_kmeans(const Matrix& x, std::size_t k, const KMeansConfig& cfg, Rng& rng) {
  const auto n = static_cast<std::size_t>(x.rows());
  Matrix c = seed_centroids(x, k, rng);
  std::vector<double> counts(k, 0.0);
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  const std::size_t b = std::min(cfg.batch_size, n);
  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    auto batch = b == n ? all : rng.sample(all, b);
    Matrix prev = c;
    for (auto i : batch) {
      auto xi = x.row(static_cast<Eigen::Index>(i));
      Eigen::RowVectorXd s = xi * c.transpose();
      auto best = static_cast<std::size_t>(argmax_row(s));
      counts[best] += 1.0;
      double eta = 1.0 / counts[best];
      c.row(static_cast<Eigen::Index>(best)) = (1.0 - eta) * c.row(static_cast<Eigen::Index>(best)) + eta * xi;
    }
    normalize_rows(c);
    if ((c - prev).squaredNorm() < cfg.tolerance) break;
  }
  std::vector<int> labels;
  wcss(x, c, &labels);
  Matrix sums = Matrix::Zero(c.rows(), c.cols());
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    sums.row(labels[i]) += x.row(static_cast<Eigen::Index>(i));
    ++sizes[static_cast<std::size_t>(labels[i])];
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (sizes[j] > 0 && sums.row(static_cast<Eigen::Index>(j)).norm() > 0) {
      c.row(static_cast<Eigen::Index>(j)) = sums.row(static_cast<Eigen::Index>(j)).normalized();
    }
  }
  return c;
}

}  // namespace detail

/// Full clustering pass over all registry tags with frequency >= f_min.
/// Best of n_init seeded runs by within-cluster sum of squares; K shrinks to
/// the tag count when there are fewer tags than clusters.
inline ClusterIndex base_cluster(const TagRegistry& registry, const Embedder& embedder,
                                 const PlatformProfile& profile, const KMeansConfig& cfg = {}) {
  auto tags = registry.eligible(profile.min_tag_frequency);
  ClusterIndex idx;
  idx.registry() = registry;
  if (tags.empty()) {
    idx.set_centroids(Matrix(0, static_cast<Eigen::Index>(embedder.dimension())));
    idx.add_warning("no tags at or above f_min; index is empty");
    return idx;
  }
  std::size_t k = profile.cluster_count;
  if (tags.size() < k) {
    idx.add_warning("K reduced from " + std::to_string(k) + " to " + std::to_string(tags.size()) +
                    " (fewer tags than clusters)");
    k = tags.size();
  }
  Matrix x = embed_all(tags, embedder);
  Matrix best;
  double best_wcss = std::numeric_limits<double>::infinity();
  for (std::size_t run = 0; run < std::max<std::size_t>(1, cfg.n_init); ++run) {
    Rng rng(derive_seed(cfg.seed, run));
    Matrix c = detail::minibatch_kmeans(x, k, cfg, rng);
    double w = detail::wcss(x, c);
    if (w < best_wcss) {
      best_wcss = w;
      best = std::move(c);
    }
  }
  idx.set_centroids(std::move(best));
  auto assigned = idx.score(x);
  for (std::size_t i = 0; i < tags.size(); ++i) idx.add_member(assigned.cluster[i], tags[i]);
  return idx;
}

struct IncrementalReport {
  std::size_t assigned = 0;
  std::size_t outliers = 0;
  std::size_t already_indexed = 0;
};

/// Places each unseen tag in its nearest cluster when the unit distance is
/// below `delta_out`, otherwise in the outlier registry. One n x K product.
inline IncrementalReport assign_incremental(ClusterIndex& index, const std::vector<std::string>& new_tags,
                                            const Embedder& embedder, double delta_out = kOutlierThreshold) {
  IncrementalReport rep;
  std::vector<std::string> fresh;
  std::set<std::string> seen;
  for (const auto& t : new_tags) {
    if (index.cluster_of(t) || !seen.insert(t).second) {
      ++rep.already_indexed;
      continue;
    }
    fresh.push_back(t);
  }
  if (fresh.empty()) return rep;
  if (index.cluster_count() == 0) {
    for (const auto& t : fresh) index.add_member(kOutlierCluster, t);
    rep.outliers = fresh.size();
    return rep;
  }
  auto a = index.score(embed_all(fresh, embedder));
  for (std::size_t i = 0; i < fresh.size(); ++i) {
    if (a.distance[i] < delta_out) {
      index.add_member(a.cluster[i], fresh[i]);
      ++rep.assigned;
    } else {
      index.add_member(kOutlierCluster, fresh[i]);
      ++rep.outliers;
    }
  }
  return rep;
}

/// Other members of the tag's cluster, excluding `exclude`, ordered by
/// registry frequency descending then lexicographically.
template <typename Set>
std::vector<std::string> peer_lookup(const ClusterIndex& index, const std::string& tag, const Set& exclude) {
  auto c = index.cluster_of(tag);
  if (!c || *c == kOutlierCluster) return {};
  std::vector<std::string> out;
  for (const auto& m : index.members()[static_cast<std::size_t>(*c)]) {
    if (m != tag && exclude.count(m) == 0) out.push_back(m);
  }
  std::sort(out.begin(), out.end(), [&](const std::string& a, const std::string& b) {
    auto fa = index.registry().frequency(a);
    auto fb = index.registry().frequency(b);
    if (fa != fb) return fa > fb;
    return a < b;
  });
  return out;
}

}  // namespace streamprofile::cluster
