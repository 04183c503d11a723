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

#include "usdh/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "usdh/error.hpp"
#include "usdh/hamming_index.hpp"

namespace usdh {
namespace {

constexpr double kDivergenceFactor = 1e6;

double parse_real(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw InvalidArgument("config: " + key + " expects a number, got '" + text + "'");
  }
  return v;
}

std::uint64_t parse_count(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    if (!text.empty() && text.front() != '-') v = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw InvalidArgument("config: " + key + " expects a non-negative integer, got '" + text + "'");
  }
  return v;
}

std::uint32_t parse_u32(const std::string& key, const std::string& text) {
  const auto v = parse_count(key, text);
  if (v > 0xFFFFFFFFULL) throw InvalidArgument("config: " + key + " out of range");
  return static_cast<std::uint32_t>(v);
}

void check_term(const char* name, double v, std::size_t epoch) {
  if (!std::isfinite(v)) {
    throw TrainingError(std::string("non-finite loss term ") + name + " at epoch " +
                        std::to_string(epoch));
  }
}

class MomentumStep {
 public:
  explicit MomentumStep(const HashHeadParams& params) : velocity_(zero_gradient(params)) {}

  void apply(HashHeadParams& params, const HeadGradient& grad, double lr, double momentum) {
    auto v = velocity_.weights.values();
    auto w = params.weights.values();
    const auto g = grad.weights.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = momentum * v[i] - lr * g[i];
      w[i] += v[i];
    }
    for (std::size_t j = 0; j < params.offsets.size(); ++j) {
      auto& vc = velocity_.offsets[j];
      vc = momentum * vc - lr * grad.offsets[j];
      params.offsets[j] += vc;
    }
  }

 private:
  HeadGradient velocity_;
};

}  // namespace

void TrainConfig::validate() const {
  if (bits == 0) throw InvalidArgument("bits must be positive");
  if (!(std::isfinite(lr) && lr > 0.0)) throw InvalidArgument("lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must lie in [0, 1)");
  if (batch_size < 2) throw InvalidArgument("batch_size must be at least 2");
  weights.validate();
}

KeyValues TrainConfig::to_key_values() const {
  return {
      {"bits", std::to_string(bits)},
      {"rho", format_real(rho.value())},
      {"w_sem", format_real(weights.w_sem)},
      {"alpha", format_real(weights.alpha)},
      {"beta", format_real(weights.beta)},
      {"gamma", format_real(weights.gamma)},
      {"lr", format_real(lr)},
      {"momentum", format_real(momentum)},
      {"epochs_stage1", std::to_string(epochs_stage1)},
      {"epochs_stage2", std::to_string(epochs_stage2)},
      {"batch_size", std::to_string(batch_size)},
      {"seed", std::to_string(seed)},
      {"rotation_angles", format_real_list(rotation_angles)},
  };
}

void TrainConfig::apply(const KeyValues& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "bits") {
      bits = parse_u32(key, value);
    } else if (key == "rho") {
      rho = Rho(parse_real(key, value));
    } else if (key == "w_sem") {
      weights.w_sem = parse_real(key, value);
    } else if (key == "alpha") {
      weights.alpha = parse_real(key, value);
    } else if (key == "beta") {
      weights.beta = parse_real(key, value);
    } else if (key == "gamma") {
      weights.gamma = parse_real(key, value);
    } else if (key == "lr") {
      lr = parse_real(key, value);
    } else if (key == "momentum") {
      momentum = parse_real(key, value);
    } else if (key == "epochs_stage1") {
      epochs_stage1 = parse_u32(key, value);
    } else if (key == "epochs_stage2") {
      epochs_stage2 = parse_u32(key, value);
    } else if (key == "batch_size") {
      batch_size = parse_u32(key, value);
    } else if (key == "seed") {
      seed = parse_count(key, value);
    } else if (key == "rotation_angles") {
      rotation_angles = parse_real_list(value);
    } else {
      throw InvalidArgument("config: unknown key '" + key + "'");
    }
  }
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t m,
                                                   std::uint64_t seed, std::size_t epoch) {
  if (m < 2) throw InvalidArgument("make_batches: batch size must be at least 2");
  if (n < m) {
    throw InvalidArgument("make_batches: " + std::to_string(n) + " items cannot fill a batch of " +
                          std::to_string(m));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += m) {
    const std::size_t end = std::min(n, start + m);
    if (end - start < 2) break;
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

TrainTrace train(const FeatureSet& fs, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (fs.n() < cfg.batch_size) {
    throw InvalidArgument("train: " + std::to_string(fs.n()) + " items cannot fill a batch of " +
                          std::to_string(cfg.batch_size));
  }
  if (cfg.epochs_stage2 > 0 && fs.rotations() == 0) {
    throw TrainingError(
        "stage 2 requested but the feature set has no rotation blocks (R=0); "
        "set epochs_stage2=0 or supply rotated features");
  }
  if (cfg.epochs_stage2 > 0 && !cfg.rotation_angles.empty() &&
      cfg.rotation_angles.size() != fs.rotations()) {
    throw InvalidArgument("train: " + std::to_string(cfg.rotation_angles.size()) +
                          " rotation angles configured but the feature set has R=" +
                          std::to_string(fs.rotations()));
  }

  TrainTrace trace;
  trace.params = init_head(cfg.bits, fs.d(), cfg.seed);
  HashHeadParams& params = trace.params;
  MomentumStep step(params);
  double initial_total = std::numeric_limits<double>::quiet_NaN();

  std::size_t global_epoch = 0;
  for (int stage = 1; stage <= 2; ++stage) {
    const std::uint32_t epochs = stage == 1 ? cfg.epochs_stage1 : cfg.epochs_stage2;
    for (std::uint32_t e = 0; e < epochs; ++e, ++global_epoch) {
      const auto started = std::chrono::steady_clock::now();
      const auto batches = make_batches(fs.n(), cfg.batch_size, cfg.seed, global_epoch);

      EpochRecord rec;
      rec.stage = stage;
      rec.epoch = global_epoch;
      rec.loss.mu.assign(cfg.bits, 0.0);

      for (const auto& idx : batches) {
        const Matrix x = fs.gather(idx, 0);
        const auto s = batch_similarity(x, cfg.rho);
        const CodeBatch codes = forward(params, x);

        std::vector<Matrix> rotated_x;
        std::vector<CodeBatch> rotated;
        if (stage == 2) {
          for (std::size_t r = 1; r < fs.blocks(); ++r) {
            rotated_x.push_back(fs.gather(idx, r));
            rotated.push_back(forward(params, rotated_x.back()));
          }
        }

        const Objective obj = total_loss(codes, rotated, s, cfg.weights);
        const LossReport& rep = obj.report;
        check_term("j1", rep.j1, global_epoch);
        check_term("j2", rep.j2, global_epoch);
        check_term("j3", rep.j3, global_epoch);
        check_term("j4", rep.j4, global_epoch);
        check_term("total", rep.total, global_epoch);
        if (std::isnan(initial_total)) initial_total = std::max(rep.total, 1e-12);
        if (rep.total > kDivergenceFactor * initial_total) {
          char msg[160];
          std::snprintf(msg, sizeof(msg), "diverged at epoch %zu: total %.6g exceeds 1e6 x initial %.6g",
                        global_epoch, rep.total, initial_total);
          throw TrainingError(msg);
        }

        HeadGradient grad = zero_gradient(params);
        accumulate_backward(params, x, codes, obj.grad_reference, grad);
        for (std::size_t r = 0; r < rotated.size(); ++r) {
          accumulate_backward(params, rotated_x[r], rotated[r], obj.grad_rotated[r], grad);
        }
        step.apply(params, grad, cfg.lr, cfg.momentum);

        rec.loss.j1 += rep.j1;
        rec.loss.j2 += rep.j2;
        rec.loss.j3 += rep.j3;
        rec.loss.j4 += rep.j4;
        rec.loss.total += rep.total;
        for (std::size_t j = 0; j < cfg.bits; ++j) rec.loss.mu[j] += rep.mu[j];
      }

      const double inv = 1.0 / static_cast<double>(batches.size());
      rec.loss.j1 *= inv;
      rec.loss.j2 *= inv;
      rec.loss.j3 *= inv;
      rec.loss.j4 *= inv;
      rec.loss.total *= inv;
      for (double& mu : rec.loss.mu) mu *= inv;
      rec.seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      if (on_epoch) on_epoch(rec);
      trace.epochs.push_back(std::move(rec));
    }
  }
  return trace;
}

std::vector<SweepRow> rho_sweep(const FeatureSet& train_set, const FeatureSet& queries,
                                const TrainConfig& cfg, const std::vector<double>& rho_list,
                                std::size_t K) {
  if (rho_list.empty()) throw InvalidArgument("rho_sweep: empty rho list");
  if (!train_set.has_labels() || !queries.has_labels()) {
    throw InvalidArgument("rho_sweep: training and query sets need labels for MAP");
  }
  for (double rho : rho_list) (void)Rho{rho};

  std::vector<std::future<SweepRow>> runs;
  runs.reserve(rho_list.size());
  for (double rho : rho_list) {
    runs.push_back(std::async(std::launch::async, [&, rho] {
      TrainConfig c = cfg;
      c.rho = Rho(rho);
      const TrainTrace trace = train(train_set, c);
      const auto index = encode_items(trace.params, train_set);
      const auto query_codes = encode_items(trace.params, queries);
      const auto report =
          evaluate_map(index, query_codes, std::span<const Label>(*queries.labels()),
                       std::span<const Label>(*train_set.labels()), K);
      return SweepRow{rho, report.map_at_k,
                      trace.epochs.empty() ? 0.0 : trace.epochs.back().loss.total};
    }));
  }
  std::vector<SweepRow> rows;
  rows.reserve(runs.size());
  for (auto& run : runs) rows.push_back(run.get());
  return rows;
}

std::string format_sweep_table(const std::vector<SweepRow>& rows, std::size_t K) {
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-12s %-12s %-12s\n", "rho", ("map@" + std::to_string(K)).c_str(),
                "final_total");
  out += buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-12.6g %-12.6f %-12.6g\n", r.rho, r.map_at_k, r.final_total);
    out += buf;
  }
  if (!rows.empty()) {
    const auto [lo, hi] = std::minmax_element(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
      return a.map_at_k < b.map_at_k;
    });
    std::snprintf(buf, sizeof(buf), "spread=%.6f\n", hi->map_at_k - lo->map_at_k);
    out += buf;
  }
  return out;
}

}  // namespace usdh
