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


#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "test_support.hpp"
#include "usdh/error.hpp"
#include "usdh/hamming_index.hpp"
#include "usdh/trainer.hpp"

namespace usdh {
namespace {

FeatureSet tiny_instance(std::uint32_t rotations = 0) {
  std::mt19937_64 rng(2024);
  return testing::random_features(8, 4, rotations, true, rng);
}

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.bits = 8;
  cfg.batch_size = 8;
  cfg.epochs_stage1 = 50;
  cfg.epochs_stage2 = 0;
  cfg.lr = 1e-3;
  return cfg;
}

TEST(MakeBatches, Deterministic) {
  EXPECT_EQ(make_batches(4, 2, 7, 3), make_batches(4, 2, 7, 3));
  EXPECT_NE(make_batches(100, 10, 7, 3), make_batches(100, 10, 7, 4));
}

TEST(MakeBatches, PartitionAndRemainder) {
  const auto b = make_batches(5, 2, 1, 0);
  ASSERT_EQ(b.size(), 2u);
  std::set<std::size_t> seen;
  for (const auto& batch : b) {
    EXPECT_EQ(batch.size(), 2u);
    seen.insert(batch.begin(), batch.end());
  }
  EXPECT_EQ(seen.size(), 4u);
  // A remainder of 2 or more is kept.
  const auto c = make_batches(7, 4, 1, 0);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[1].size(), 3u);
}

TEST(MakeBatches, DroppedIndexIsUniform) {
  std::vector<int> dropped(5, 0);
  for (std::size_t epoch = 0; epoch < 100; ++epoch) {
    std::vector<bool> present(5, false);
    for (const auto& batch : make_batches(5, 2, 42, epoch)) {
      for (auto i : batch) present[i] = true;
    }
    for (int i = 0; i < 5; ++i) dropped[i] += present[i] ? 0 : 1;
  }
  for (int c : dropped) {
    EXPECT_GE(c, 8);
    EXPECT_LE(c, 32);
  }
}

TEST(MakeBatches, Errors) {
  EXPECT_THROW(make_batches(3, 4, 1, 0), InvalidArgument);
  EXPECT_THROW(make_batches(3, 1, 1, 0), InvalidArgument);
}

TEST(TrainConfig, KeyValueRoundTrip) {
  TrainConfig cfg;
  cfg.bits = 48;
  cfg.rho = Rho(0.125);
  cfg.weights.gamma = 0.3;
  cfg.rotation_angles = {-10, 5};
  TrainConfig back;
  back.apply(cfg.to_key_values());
  EXPECT_EQ(back.to_key_values(), cfg.to_key_values());
  EXPECT_THROW(back.apply({{"nope", "1"}}), InvalidArgument);
  EXPECT_THROW(back.apply({{"bits", "x"}}), InvalidArgument);
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.lr = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = TrainConfig{};
  cfg.batch_size = 1;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = TrainConfig{};
  cfg.momentum = 1.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(Train, ZeroEpochsReturnsInit) {
  auto cfg = tiny_config();
  cfg.epochs_stage1 = 0;
  const auto trace = train(tiny_instance(), cfg);
  EXPECT_TRUE(trace.epochs.empty());
  EXPECT_EQ(trace.params, init_head(8, 4, cfg.seed));
}

TEST(Train, LossDecreasesOnTinyInstance) {
  const auto trace = train(tiny_instance(), tiny_config());
  ASSERT_EQ(trace.epochs.size(), 50u);
  EXPECT_LT(trace.epochs.back().loss.total, trace.epochs.front().loss.total);
  std::size_t increases = 0;
  for (std::size_t e = 1; e < trace.epochs.size(); ++e) {
    if (trace.epochs[e].loss.total > trace.epochs[e - 1].loss.total) ++increases;
  }
  EXPECT_LT(increases, trace.epochs.size() / 10);
}

TEST(Train, Deterministic) {
  auto cfg = tiny_config();
  cfg.epochs_stage2 = 5;
  const auto fs = tiny_instance(1);
  const auto a = train(fs, cfg);
  const auto b = train(fs, cfg);
  EXPECT_EQ(a.params, b.params);
  ASSERT_EQ(a.epochs.size(), b.epochs.size());
  for (std::size_t e = 0; e < a.epochs.size(); ++e) {
    EXPECT_EQ(a.epochs[e].loss.total, b.epochs[e].loss.total);
    EXPECT_EQ(a.epochs[e].epoch, e);
  }
}

TEST(Train, StageTwoNeedsRotations) {
  auto cfg = tiny_config();
  cfg.epochs_stage2 = 1;
  EXPECT_THROW(train(tiny_instance(0), cfg), TrainingError);
  cfg.rotation_angles = {90, 180};
  EXPECT_THROW(train(tiny_instance(1), cfg), InvalidArgument);
}

TEST(Train, GammaZeroStageTwoMatchesStageOne) {
  const auto fs = tiny_instance(1);
  auto staged = tiny_config();
  staged.epochs_stage1 = 10;
  staged.epochs_stage2 = 10;
  staged.weights.gamma = 0.0;
  auto plain = tiny_config();
  plain.epochs_stage1 = 20;
  const auto a = train(fs, staged);
  const auto b = train(fs, plain);
  for (std::size_t i = 0; i < a.params.weights.size(); ++i) {
    EXPECT_NEAR(a.params.weights.values()[i], b.params.weights.values()[i], 1e-12);
  }
  EXPECT_EQ(a.epochs[15].stage, 2);
  EXPECT_EQ(a.epochs[15].loss.j4 * 0.0, 0.0);
}

TEST(Train, StageTwoRecordsRotationTerm) {
  auto cfg = tiny_config();
  cfg.epochs_stage1 = 2;
  cfg.epochs_stage2 = 2;
  const auto trace = train(tiny_instance(1), cfg);
  ASSERT_EQ(trace.epochs.size(), 4u);
  EXPECT_EQ(trace.epochs[1].stage, 1);
  EXPECT_EQ(trace.epochs[1].loss.j4, 0.0);
  EXPECT_EQ(trace.epochs[2].stage, 2);
  EXPECT_GT(trace.epochs[2].loss.j4, 0.0);
}

TEST(Train, NonFiniteLossNamesTerm) {
  auto cfg = tiny_config();
  cfg.lr = 1e300;
  try {
    train(tiny_instance(), cfg);
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("non-finite loss term j1"), std::string::npos) << e.what();
  }
}

TEST(Train, DivergenceGuard) {
  auto cfg = tiny_config();
  cfg.lr = 1e100;
  try {
    train(tiny_instance(), cfg);
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("diverged"), std::string::npos) << e.what();
  }
}

TEST(RhoSweep, Errors) {
  const auto fs = tiny_instance();
  EXPECT_THROW(rho_sweep(fs, fs, tiny_config(), {}, 5), InvalidArgument);
  const FeatureSet unlabeled(8, 4, 0, std::vector<float>(32, 1.0f));
  EXPECT_THROW(rho_sweep(unlabeled, unlabeled, tiny_config(), {1.0}, 5), InvalidArgument);
}

TEST(RhoSweep, SingleRowEqualsPlainRun) {
  std::mt19937_64 rng(5);
  const auto db = testing::random_features(30, 6, 0, true, rng);
  const auto q = testing::random_features(6, 6, 0, true, rng);
  auto cfg = tiny_config();
  cfg.epochs_stage1 = 5;
  cfg.rho = Rho(0.5);
  const auto rows = rho_sweep(db, q, cfg, {0.5}, 10);
  ASSERT_EQ(rows.size(), 1u);
  const auto trace = train(db, cfg);
  const auto rep = evaluate_map(encode_items(trace.params, db), encode_items(trace.params, q),
                                std::span<const Label>(*q.labels()),
                                std::span<const Label>(*db.labels()), 10);
  EXPECT_EQ(rows[0].rho, 0.5);
  EXPECT_EQ(rows[0].map_at_k, rep.map_at_k);
  EXPECT_EQ(rows[0].final_total, trace.epochs.back().loss.total);
  const auto table = format_sweep_table(rows, 10);
  EXPECT_NE(table.find("map@10"), std::string::npos);
  EXPECT_NE(table.find("spread=0.000000"), std::string::npos);
}

}  // namespace
}  // namespace usdh
