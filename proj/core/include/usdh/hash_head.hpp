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

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "usdh/matrix.hpp"

namespace usdh {

/// Affine hashing layer: z = W x + c, b = max(z, 0).
struct HashHeadParams {
  Matrix weights;               // k x d
  std::vector<double> offsets;  // k

  std::size_t k() const { return weights.rows(); }
  std::size_t d() const { return weights.cols(); }

  friend bool operator==(const HashHeadParams&, const HashHeadParams&) = default;
};

/// Relaxed codes for one batch plus the pre-activations the backward pass
/// needs. All three matrices are m x k.
struct CodeBatch {
  Matrix z;        // pre-activations
  Matrix b;        // max(z, 0)
  Matrix b_tilde;  // 2b - 1

  std::size_t m() const { return b.rows(); }
  std::size_t k() const { return b.cols(); }

  /// Builds a batch directly from relaxed codes (z = b). Used by the loss
  /// functions' tests and the gradient checker, which work in code space.
  static CodeBatch from_codes(Matrix b);
};

struct HeadGradient {
  Matrix weights;               // k x d
  std::vector<double> offsets;  // k
};

/// W ~ N(0, 2/d), c = 0.5. Deterministic in (k, d, seed).
HashHeadParams init_head(std::size_t k, std::size_t d, std::uint64_t seed);

/// batch is m x d.
CodeBatch forward(const HashHeadParams& params, const Matrix& batch);

/// Chain rule through the clamp (derivative 0 at z <= 0) and the affine map.
/// Gradients are summed over the batch, not averaged.
HeadGradient backward(const HashHeadParams& params, const Matrix& batch, const CodeBatch& codes,
                      const Matrix& dloss_db);

/// Adds backward(...) into `acc` without allocating a fresh gradient.
void accumulate_backward(const HashHeadParams& params, const Matrix& batch,
                         const CodeBatch& codes, const Matrix& dloss_db, HeadGradient& acc);

HeadGradient zero_gradient(const HashHeadParams& params);

// "USDW": magic, u32 version, u32 k, u32 d, k*d + k little-endian f64
// (W row-major, then c).
inline constexpr std::size_t kHeadHeaderBytes = 16;
std::vector<std::uint8_t> encode_head(const HashHeadParams& params);
HashHeadParams decode_head(std::span<const std::uint8_t> bytes);
HashHeadParams read_head(const std::filesystem::path& path);
void write_head(const HashHeadParams& params, const std::filesystem::path& path);

}  // namespace usdh
