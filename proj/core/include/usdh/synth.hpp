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

// Desk-scale datasets: labeled Gaussian mixtures, feature-space "rotations",
// and seeded query/database splits.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "usdh/feature_io.hpp"

namespace usdh {

struct SynthConfig {
  std::uint32_t clusters = 3;
  std::uint32_t n = 600;
  std::uint32_t d = 64;
  double separation = 6.0;  // distance between cluster means, in units of sigma
  double sigma = 1.0;       // per-coordinate within-cluster std
  std::uint64_t seed = 42;
};

/// Cluster means sit on mutually orthogonal random directions, scaled so that
/// every pair of means is exactly separation * sigma apart. Item i belongs to
/// cluster i % clusters, which is also its label.
FeatureSet make_clusters(const SynthConfig& cfg);

/// Appends one block per angle (degrees). Each block applies a planar
/// rotation by that angle to every coordinate pair (2t, 2t+1); an odd last
/// coordinate is left alone. Requires fs.rotations() == 0.
FeatureSet add_rotations(const FeatureSet& fs, std::span<const double> angles_deg);

struct Split {
  FeatureSet database;
  FeatureSet queries;
  std::vector<std::size_t> database_rows;  // rows of the source set, ascending
  std::vector<std::size_t> query_rows;
};

/// Draws `query_count` rows at random (seeded) as queries; the rest form the
/// database. Row order within each part follows the source order.
Split holdout_split(const FeatureSet& fs, std::size_t query_count, std::uint64_t seed);

}  // namespace usdh
