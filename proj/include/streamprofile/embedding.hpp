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

#include <cstdint>
#include <string_view>

#include <Eigen/Dense>

#include "streamprofile/random.hpp"
#include "streamprofile/text.hpp"

namespace streamprofile {

using Vector = Eigen::VectorXd;

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dimension() const = 0;
  // Unnormalized embedding; callers normalize with unit().
  virtual Vector embed(std::string_view tag) const = 0;
};

inline Vector unit(Vector v) {
  double n = v.norm();
  if (n > 0) v /= n;
  return v;
}

/// Signed feature hashing of character unigrams and bigrams.
class HashingEmbedder final : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dimension = 512, std::uint64_t seed = 0) : dim_(dimension), seed_(seed) {}

  std::size_t dimension() const override { return dim_; }

  Vector embed(std::string_view tag) const override {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(dim_));
    auto cps = text::decode_utf8(tag);
    for (std::size_t n = 1; n <= 2; ++n) {
      for (std::size_t i = 0; i + n <= cps.size(); ++i) add(v, text::encode_utf8(cps.substr(i, n)));
    }
    if (v.norm() == 0) add(v, std::string(tag));
    return v;
  }

 private:
  void add(Vector& v, const std::string& feature) const {
    auto h = derive_seed(seed_, feature);
    auto idx = static_cast<Eigen::Index>(h % dim_);
    v[idx] += (h >> 63) ? -1.0 : 1.0;
  }

  std::size_t dim_;
  std::uint64_t seed_;
};

}  // namespace streamprofile
