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

// Central-finite-difference checks of the analytic loss gradients.

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "usdh/hash_head.hpp"
#include "usdh/losses.hpp"
#include "usdh/matrix.hpp"
#include "usdh/similarity.hpp"

namespace usdh {

enum class LossTerm { kSemantic, kQuantization, kInformation, kRotation, kTotal };

/// "j1" | "j2" | "j3" | "j4" | "total". Throws InvalidArgument otherwise.
LossTerm parse_loss_term(std::string_view name);
std::string_view loss_term_name(LossTerm term);

/// Everything needed to evaluate any of the terms. J1..J4 are checked with
/// respect to the relaxed codes (and rotated codes); kTotal is checked with
/// respect to the head parameters through forward + total_loss.
struct GradcheckInstance {
  Matrix codes;                      // m x k, used by J1..J4
  std::vector<Matrix> rotated_codes;  // R x (m x k), used by J4
  SimilarityMatrix similarity;       // m x m, used by J1

  Matrix features;                      // m x d, used by kTotal
  std::vector<Matrix> rotated_features;  // R x (m x d), used by kTotal
  HashHeadParams head;                  // used by kTotal
  Rho rho{1.0};
  LossWeights weights;
};

struct GradcheckReport {
  double max_rel_error = 0.0;
  std::vector<double> rel_errors;  // one per coordinate
  std::vector<double> analytic;
  std::vector<double> numeric;
};

/// Relative error used throughout: |a - n| / max(|a|, |n|, floor).
inline constexpr double kRelErrorFloor = 1e-6;
double relative_error(double analytic, double numeric, double floor = kRelErrorFloor);

/// Compares `analytic` against central differences of `f` around `x`.
GradcheckReport compare_gradient(const std::function<double(std::span<const double>)>& f,
                                 std::span<const double> x, std::span<const double> analytic,
                                 double epsilon);

/// Distance to the nearest non-differentiable point of `term` at `inst`.
double kink_distance(LossTerm term, const GradcheckInstance& inst);

/// Throws InvalidArgument if the instance lies within `margin` of a kink.
void require_kink_free(LossTerm term, const GradcheckInstance& inst, double margin = 1e-6);

/// Random instance with m in [2,4], k in [2,8], d in [2,8], R in [1,2],
/// resampled until it is at least `margin` away from every kink.
GradcheckInstance sample_instance(LossTerm term, std::mt19937_64& rng, double margin = 1e-3);

/// Flattened variables, objective and analytic gradient for `term`.
std::vector<double> flatten_variables(LossTerm term, const GradcheckInstance& inst);
double evaluate_term(LossTerm term, const GradcheckInstance& inst, std::span<const double> vars);
std::vector<double> analytic_gradient(LossTerm term, const GradcheckInstance& inst);

GradcheckReport gradcheck(LossTerm term, const GradcheckInstance& inst, double epsilon = 1e-5);

}  // namespace usdh
