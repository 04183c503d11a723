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

#include "usdh/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "usdh/error.hpp"

namespace usdh {

FeatureSet make_clusters(const SynthConfig& cfg) {
  if (cfg.clusters == 0 || cfg.d == 0) throw InvalidArgument("synth: clusters and d must be positive");
  if (cfg.clusters > cfg.d) {
    throw InvalidArgument("synth: need d >= clusters to place orthogonal cluster means");
  }
  if (!(cfg.sigma > 0.0) || !(cfg.separation >= 0.0)) {
    throw InvalidArgument("synth: sigma must be positive and separation non-negative");
  }
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Gram-Schmidt on Gaussian draws gives orthonormal directions.
  std::vector<std::vector<double>> dirs;
  while (dirs.size() < cfg.clusters) {
    std::vector<double> v(cfg.d);
    for (double& x : v) x = normal(rng);
    for (const auto& u : dirs) {
      const double dot = std::inner_product(v.begin(), v.end(), u.begin(), 0.0);
      for (std::size_t t = 0; t < v.size(); ++t) v[t] -= dot * u[t];
    }
    const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (norm < 1e-8) continue;
    for (double& x : v) x /= norm;
    dirs.push_back(std::move(v));
  }
  const double radius = cfg.separation * cfg.sigma / std::numbers::sqrt2;

  std::vector<float> data(std::size_t{cfg.n} * cfg.d);
  std::vector<Label> labels(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const std::size_t c = i % cfg.clusters;
    labels[i] = static_cast<Label>(c);
    for (std::size_t t = 0; t < cfg.d; ++t) {
      data[i * cfg.d + t] = static_cast<float>(radius * dirs[c][t] + cfg.sigma * normal(rng));
    }
  }
  return FeatureSet(cfg.n, cfg.d, 0, std::move(data), std::move(labels));
}

FeatureSet add_rotations(const FeatureSet& fs, std::span<const double> angles_deg) {
  if (fs.rotations() != 0) throw InvalidArgument("add_rotations: set already has rotation blocks");
  const std::size_t n = fs.n();
  const std::size_t d = fs.d();
  std::vector<float> data(fs.data().begin(), fs.data().end());
  data.reserve(data.size() * (angles_deg.size() + 1));
  for (double deg : angles_deg) {
    const double theta = deg * std::numbers::pi / 180.0;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = fs.row(0, i);
      std::size_t t = 0;
      for (; t + 1 < d; t += 2) {
        data.push_back(static_cast<float>(c * x[t] - s * x[t + 1]));
        data.push_back(static_cast<float>(s * x[t] + c * x[t + 1]));
      }
      if (t < d) data.push_back(x[t]);
    }
  }
  return FeatureSet(fs.n(), fs.d(), static_cast<std::uint32_t>(angles_deg.size()), std::move(data),
                    fs.labels());
}

Split holdout_split(const FeatureSet& fs, std::size_t query_count, std::uint64_t seed) {
  if (query_count > fs.n()) {
    throw InvalidArgument("holdout_split: " + std::to_string(query_count) +
                          " queries requested from " + std::to_string(fs.n()) + " items");
  }
  std::vector<std::size_t> order(fs.n());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  Split split;
  split.query_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(query_count));
  split.database_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(query_count), order.end());
  std::sort(split.query_rows.begin(), split.query_rows.end());
  std::sort(split.database_rows.begin(), split.database_rows.end());
  split.queries = fs.subset(split.query_rows);
  split.database = fs.subset(split.database_rows);
  return split;
}

}  // namespace usdh
