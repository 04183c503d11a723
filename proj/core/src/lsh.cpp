// Copyright 2026 The usdh Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "usdh/lsh.hpp"

#include <random>
#include <string>

#include "usdh/error.hpp"
#include "usdh/hamming_index.hpp"

namespace usdh {

LshModel fit_lsh(const FeatureSet& fs, std::uint32_t k, std::uint64_t seed) {
  if (k == 0 || fs.d() == 0) throw InvalidArgument("fit_lsh: k and d must be positive");
  LshModel model{std::vector<double>(fs.d(), 0.0), Matrix(k, fs.d())};
  for (std::size_t i = 0; i < fs.n(); ++i) {
    const auto x = fs.row(0, i);
    for (std::size_t t = 0; t < fs.d(); ++t) model.mean[t] += x[t];
  }
  if (fs.n() > 0) {
    for (double& v : model.mean) v /= static_cast<double>(fs.n());
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& w : model.planes.values()) w = normal(rng);
  return model;
}

BinaryCodebook lsh_encode(const LshModel& model, const FeatureSet& fs, std::size_t block) {
  const std::size_t d = model.mean.size();
  if (fs.d() != d) {
    throw ShapeError("lsh_encode: features have d=" + std::to_string(fs.d()) +
                     ", model expects d=" + std::to_string(d));
  }
  const auto k = static_cast<std::uint32_t>(model.planes.rows());
  std::vector<Bits> codes;
  codes.reserve(fs.n());
  std::vector<ItemId> ids(fs.n());
  std::vector<double> centered(d);
  for (std::size_t i = 0; i < fs.n(); ++i) {
    const auto x = fs.row(block, i);
    for (std::size_t t = 0; t < d; ++t) centered[t] = x[t] - model.mean[t];
    Bits bits(k);
    for (std::size_t j = 0; j < k; ++j) {
      const auto plane = model.planes.row(j);
      double proj = 0.0;
      for (std::size_t t = 0; t < d; ++t) proj += plane[t] * centered[t];
      bits[j] = proj >= 0.0 ? 1 : 0;
    }
    codes.push_back(std::move(bits));
    ids[i] = i;
  }
  if (codes.empty()) return BinaryCodebook(k);
  return build_index(codes, ids);
}

BinaryCodebook lsh_baseline(const FeatureSet& fs, std::uint32_t k, std::uint64_t seed) {
  return lsh_encode(fit_lsh(fs, k, seed), fs);
}

}  // namespace usdh
