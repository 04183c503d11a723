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

// Hashing objective over relaxed codes b in [0, inf)^k with recentered codes
// bt = 2b - 1:
//
//   J1  semantic      sum_{i,j} | S_ij - (bt_i . bt_j + k) / 2k |   (all ordered pairs, i = j included)
//   J2  quantization  sum_i || |bt_i| - 1 ||_1
//   J3  balance       sum_j (mu_j - 1/2)^2,  mu_j = mean_i b_ij
//   J4  rotation      sum_r sum_i || b^r_i - b_i ||_2^2
//
//   total = w_sem J1 + alpha J2 + beta J3 + gamma J4
//
// Gradients are with respect to b. At the kinks of the absolute values the
// right-hand derivative is used (sgn(0) = +1).

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "usdh/hash_head.hpp"
#include "usdh/matrix.hpp"
#include "usdh/similarity.hpp"

namespace usdh {

struct LossWeights {
  double w_sem = 1.0;
  double alpha = 0.01;
  double beta = 1.0;
  double gamma = 0.1;

  /// Throws InvalidArgument if any weight is negative or non-finite.
  void validate() const;
};

/// Raw (unweighted) term values plus their weighted sum.
struct LossReport {
  double j1 = 0.0;
  double j2 = 0.0;
  double j3 = 0.0;
  double j4 = 0.0;
  double total = 0.0;
  std::vector<double> mu;  // per-bit batch means

  /// "epoch=<n> j1=<v> j2=<v> j3=<v> j4=<v> total=<v>"
  std::string log_line(std::size_t epoch) const;
};

struct TermResult {
  double value = 0.0;
  Matrix grad;  // m x k, d value / d b
};

struct InformationTerm {
  double value = 0.0;
  Matrix grad;
  std::vector<double> mu;
};

struct RotationTerm {
  double value = 0.0;
  Matrix grad_reference;             // m x k
  std::vector<Matrix> grad_rotated;  // R entries, m x k
};

struct Objective {
  LossReport report;
  Matrix grad_reference;
  std::vector<Matrix> grad_rotated;  // empty when no rotated codes were given
};

/// (bt_i . bt_j + k) / 2k for relaxed codes b_i, b_j.
double code_similarity(std::span<const double> bi, std::span<const double> bj);

TermResult semantic_loss(const CodeBatch& codes, const SimilarityMatrix& s);

/// Returns alpha * J2 and its gradient.
TermResult quantization_loss(const CodeBatch& codes, double alpha = 1.0);

/// Returns beta * J3 and its gradient; mu is unweighted.
InformationTerm information_loss(const CodeBatch& codes, double beta = 1.0);

/// Returns gamma * J4. `rotated[r]` must be row-aligned with `codes`.
/// Throws InvalidArgument when `rotated` is empty.
RotationTerm rotation_loss(const CodeBatch& codes, std::span<const CodeBatch> rotated,
                           double gamma = 1.0);

/// Weighted objective. An empty `rotated` leaves J4 at zero.
Objective total_loss(const CodeBatch& codes, std::span<const CodeBatch> rotated,
                     const SimilarityMatrix& s, const LossWeights& weights);

}  // namespace usdh
