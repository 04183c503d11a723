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

// Random-hyperplane (sign projection) hashing, used as an untrained baseline.

#pragma once

#include <cstdint>
#include <vector>

#include "usdh/feature_io.hpp"
#include "usdh/matrix.hpp"

namespace usdh {

struct LshModel {
  std::vector<double> mean;  // d, subtracted before projecting
  Matrix planes;             // k x d, i.i.d. N(0, 1)
};

/// Centers on the mean of block 0 of `fs`; hyperplanes drawn from `seed`.
LshModel fit_lsh(const FeatureSet& fs, std::uint32_t k, std::uint64_t seed);

/// bit j = 1 iff planes_j . (x - mean) >= 0; ids are row indices.
BinaryCodebook lsh_encode(const LshModel& model, const FeatureSet& fs, std::size_t block = 0);

/// fit_lsh + lsh_encode on the same set.
BinaryCodebook lsh_baseline(const FeatureSet& fs, std::uint32_t k, std::uint64_t seed);

}  // namespace usdh
