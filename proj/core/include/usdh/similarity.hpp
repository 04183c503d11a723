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

// Feature-space similarity degree: S(i,j) = exp(-||x_i - x_j||_2 / (rho * d)).

#pragma once

#include <span>

#include "usdh/matrix.hpp"

namespace usdh {

/// Positive scale of the similarity kernel; the kernel divides by rho * d.
class Rho {
 public:
  /// Throws InvalidArgument unless value is finite and > 0.
  explicit Rho(double value = 1.0);
  double value() const { return value_; }

 private:
  double value_;
};

/// Symmetric m x m matrix in (0,1] with a unit diagonal.
using SimilarityMatrix = Matrix;

double pair_similarity(std::span<const double> xi, std::span<const double> xj, Rho rho);
double pair_similarity(std::span<const float> xi, std::span<const float> xj, Rho rho);

/// Pairwise similarities of the rows of `batch` (m >= 2).
SimilarityMatrix batch_similarity(const Matrix& batch, Rho rho);

}  // namespace usdh
