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

// Two-stage batch gradient descent over the hashing head.
//
// Stage 1 minimizes w_sem*J1 + alpha*J2 + beta*J3 on the reference block.
// Stage 2 adds gamma*J4, pulling the codes of every rotation block toward the
// reference codes of the same items. Updates use classical momentum:
//   v <- momentum * v - lr * grad;  theta <- theta + v.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "usdh/feature_io.hpp"
#include "usdh/hash_head.hpp"
#include "usdh/losses.hpp"
#include "usdh/manifest.hpp"
#include "usdh/similarity.hpp"

namespace usdh {

struct TrainConfig {
  std::uint32_t bits = 32;
  Rho rho{1.0};
  LossWeights weights;
  double lr = 1e-3;
  double momentum = 0.0;
  std::uint32_t epochs_stage1 = 200;
  std::uint32_t epochs_stage2 = 100;
  std::uint32_t batch_size = 32;
  std::uint64_t seed = 42;
  std::vector<double> rotation_angles;  // degrees, one per rotation block

  /// Throws InvalidArgument on lr <= 0, momentum outside [0,1), batch < 2,
  /// bits == 0 or invalid weights.
  void validate() const;

  /// Every field as key=value, in the same spelling apply() accepts.
  KeyValues to_key_values() const;
  /// Overwrites the fields named in `kv`. Unknown keys throw InvalidArgument.
  void apply(const KeyValues& kv);
};

struct EpochRecord {
  int stage = 1;
  std::size_t epoch = 0;  // global, counting across both stages
  LossReport loss;        // mean over the epoch's batches
  double seconds = 0.0;
};

struct TrainTrace {
  std::vector<EpochRecord> epochs;
  HashHeadParams params;
};

/// Seeded shuffle of 0..n-1 keyed on (seed, epoch), cut into batches of m.
/// A trailing batch with fewer than 2 items is dropped. Throws if n < m.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t m,
                                                   std::uint64_t seed, std::size_t epoch);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Runs both stages from init_head(bits, d, seed). Throws TrainingError when
/// stage 2 is requested on a set without rotation blocks, when a loss term
/// turns non-finite, or when the total exceeds 1e6 times its initial value.
TrainTrace train(const FeatureSet& fs, const TrainConfig& cfg,
                 const EpochCallback& on_epoch = nullptr);

struct SweepRow {
  double rho = 0.0;
  double map_at_k = 0.0;
  double final_total = 0.0;
};

/// Trains one head per rho on `train_set` and scores MAP@K of `queries`
/// against the encoded training set. Runs are independent and execute
/// concurrently; results come back in rho_list order.
std::vector<SweepRow> rho_sweep(const FeatureSet& train_set, const FeatureSet& queries,
                                const TrainConfig& cfg, const std::vector<double>& rho_list,
                                std::size_t K);

/// Plain-text table with a header row.
std::string format_sweep_table(const std::vector<SweepRow>& rows, std::size_t K);

}  // namespace usdh
