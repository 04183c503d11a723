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

#include "usdh/similarity.hpp"

#include <cmath>
#include <string>

#include "usdh/error.hpp"

namespace usdh {
namespace {

template <typename T>
double similarity_impl(std::span<const T> xi, std::span<const T> xj, Rho rho) {
  if (xi.size() != xj.size()) {
    throw ShapeError("similarity: dimension mismatch " + std::to_string(xi.size()) + " vs " +
                     std::to_string(xj.size()));
  }
  if (xi.empty()) throw ShapeError("similarity: zero-dimensional vectors");
  double sq = 0.0;
  for (std::size_t t = 0; t < xi.size(); ++t) {
    const double a = xi[t];
    const double b = xj[t];
    if (!std::isfinite(a) || !std::isfinite(b)) {
      throw InvalidArgument("similarity: non-finite input at coordinate " + std::to_string(t));
    }
    const double diff = a - b;
    sq += diff * diff;
  }
  const double d = static_cast<double>(xi.size());
  return std::exp(-std::sqrt(sq) / (rho.value() * d));
}

}  // namespace

Rho::Rho(double value) : value_(value) {
  if (!(std::isfinite(value) && value > 0.0)) {
    throw InvalidArgument("rho must be a positive finite number");
  }
}

double pair_similarity(std::span<const double> xi, std::span<const double> xj, Rho rho) {
  return similarity_impl(xi, xj, rho);
}

double pair_similarity(std::span<const float> xi, std::span<const float> xj, Rho rho) {
  return similarity_impl(xi, xj, rho);
}

SimilarityMatrix batch_similarity(const Matrix& batch, Rho rho) {
  const std::size_t m = batch.rows();
  if (m < 2) throw InvalidArgument("batch_similarity: need at least 2 rows, got " + std::to_string(m));
  SimilarityMatrix s(m, m, 1.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double v = pair_similarity(batch.row(i), batch.row(j), rho);
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

}  // namespace usdh
