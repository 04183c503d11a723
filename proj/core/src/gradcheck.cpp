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

#include "usdh/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "usdh/error.hpp"

namespace usdh {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix unflatten(std::span<const double> vars, std::size_t& at, std::size_t rows,
                 std::size_t cols) {
  Matrix out(rows, cols);
  std::copy_n(vars.begin() + static_cast<std::ptrdiff_t>(at), rows * cols, out.values().begin());
  at += rows * cols;
  return out;
}

void append(std::vector<double>& dst, std::span<const double> src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

std::vector<CodeBatch> as_batches(const std::vector<Matrix>& codes) {
  std::vector<CodeBatch> out;
  out.reserve(codes.size());
  for (const auto& c : codes) out.push_back(CodeBatch::from_codes(c));
  return out;
}

HashHeadParams head_from(const GradcheckInstance& inst, std::span<const double> vars) {
  std::size_t at = 0;
  HashHeadParams p;
  p.weights = unflatten(vars, at, inst.head.k(), inst.head.d());
  p.offsets.assign(vars.begin() + static_cast<std::ptrdiff_t>(at), vars.end());
  return p;
}

double semantic_kink_distance(const Matrix& codes, const SimilarityMatrix& s) {
  double dist = kInf;
  for (std::size_t i = 0; i < codes.rows(); ++i) {
    for (std::size_t j = 0; j < codes.rows(); ++j) {
      dist = std::min(dist, std::abs(s(i, j) - code_similarity(codes.row(i), codes.row(j))));
    }
  }
  return dist;
}

double quantization_kink_distance(std::span<const double> values) {
  double dist = kInf;
  for (double b : values) {
    for (double kink : {0.0, 0.5, 1.0}) dist = std::min(dist, std::abs(b - kink));
  }
  return dist;
}

}  // namespace

LossTerm parse_loss_term(std::string_view name) {
  if (name == "j1") return LossTerm::kSemantic;
  if (name == "j2") return LossTerm::kQuantization;
  if (name == "j3") return LossTerm::kInformation;
  if (name == "j4") return LossTerm::kRotation;
  if (name == "total") return LossTerm::kTotal;
  throw InvalidArgument("unknown loss '" + std::string(name) + "' (expected j1|j2|j3|j4|total)");
}

std::string_view loss_term_name(LossTerm term) {
  switch (term) {
    case LossTerm::kSemantic: return "j1";
    case LossTerm::kQuantization: return "j2";
    case LossTerm::kInformation: return "j3";
    case LossTerm::kRotation: return "j4";
    case LossTerm::kTotal: return "total";
  }
  return "?";
}

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradcheckReport compare_gradient(const std::function<double(std::span<const double>)>& f,
                                 std::span<const double> x, std::span<const double> analytic,
                                 double epsilon) {
  if (x.size() != analytic.size()) {
    throw ShapeError("compare_gradient: " + std::to_string(analytic.size()) +
                     " analytic entries for " + std::to_string(x.size()) + " variables");
  }
  if (!(epsilon > 0.0)) throw InvalidArgument("compare_gradient: epsilon must be positive");
  GradcheckReport report;
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + epsilon;
    const double up = f(probe);
    probe[i] = x[i] - epsilon;
    const double down = f(probe);
    probe[i] = x[i];
    const double numeric = (up - down) / (2.0 * epsilon);
    const double err = relative_error(analytic[i], numeric);
    report.analytic.push_back(analytic[i]);
    report.numeric.push_back(numeric);
    report.rel_errors.push_back(err);
    report.max_rel_error = std::max(report.max_rel_error, err);
  }
  return report;
}

std::vector<double> flatten_variables(LossTerm term, const GradcheckInstance& inst) {
  std::vector<double> vars;
  switch (term) {
    case LossTerm::kSemantic:
    case LossTerm::kQuantization:
    case LossTerm::kInformation:
      append(vars, inst.codes.values());
      break;
    case LossTerm::kRotation:
      append(vars, inst.codes.values());
      for (const auto& r : inst.rotated_codes) append(vars, r.values());
      break;
    case LossTerm::kTotal:
      append(vars, inst.head.weights.values());
      append(vars, inst.head.offsets);
      break;
  }
  return vars;
}

double evaluate_term(LossTerm term, const GradcheckInstance& inst, std::span<const double> vars) {
  if (term == LossTerm::kTotal) {
    const HashHeadParams head = head_from(inst, vars);
    const CodeBatch codes = forward(head, inst.features);
    std::vector<CodeBatch> rotated;
    for (const auto& rf : inst.rotated_features) rotated.push_back(forward(head, rf));
    const auto s = batch_similarity(inst.features, inst.rho);
    return total_loss(codes, rotated, s, inst.weights).report.total;
  }

  std::size_t at = 0;
  const CodeBatch codes =
      CodeBatch::from_codes(unflatten(vars, at, inst.codes.rows(), inst.codes.cols()));
  switch (term) {
    case LossTerm::kSemantic: return semantic_loss(codes, inst.similarity).value;
    case LossTerm::kQuantization: return quantization_loss(codes, inst.weights.alpha).value;
    case LossTerm::kInformation: return information_loss(codes, 1.0).value;
    case LossTerm::kRotation: {
      std::vector<CodeBatch> rotated;
      for (std::size_t r = 0; r < inst.rotated_codes.size(); ++r) {
        rotated.push_back(CodeBatch::from_codes(unflatten(vars, at, codes.m(), codes.k())));
      }
      return rotation_loss(codes, rotated, 1.0).value;
    }
    case LossTerm::kTotal: break;
  }
  return 0.0;
}

std::vector<double> analytic_gradient(LossTerm term, const GradcheckInstance& inst) {
  std::vector<double> grad;
  const CodeBatch codes = CodeBatch::from_codes(inst.codes);
  switch (term) {
    case LossTerm::kSemantic:
      append(grad, semantic_loss(codes, inst.similarity).grad.values());
      break;
    case LossTerm::kQuantization:
      append(grad, quantization_loss(codes, inst.weights.alpha).grad.values());
      break;
    case LossTerm::kInformation:
      append(grad, information_loss(codes, 1.0).grad.values());
      break;
    case LossTerm::kRotation: {
      const auto rot = rotation_loss(codes, as_batches(inst.rotated_codes), 1.0);
      append(grad, rot.grad_reference.values());
      for (const auto& g : rot.grad_rotated) append(grad, g.values());
      break;
    }
    case LossTerm::kTotal: {
      const CodeBatch fwd = forward(inst.head, inst.features);
      std::vector<CodeBatch> rotated;
      for (const auto& rf : inst.rotated_features) rotated.push_back(forward(inst.head, rf));
      const auto s = batch_similarity(inst.features, inst.rho);
      const auto obj = total_loss(fwd, rotated, s, inst.weights);
      HeadGradient g = zero_gradient(inst.head);
      accumulate_backward(inst.head, inst.features, fwd, obj.grad_reference, g);
      for (std::size_t r = 0; r < rotated.size(); ++r) {
        accumulate_backward(inst.head, inst.rotated_features[r], rotated[r], obj.grad_rotated[r], g);
      }
      append(grad, g.weights.values());
      append(grad, g.offsets);
      break;
    }
  }
  return grad;
}

double kink_distance(LossTerm term, const GradcheckInstance& inst) {
  switch (term) {
    case LossTerm::kSemantic: return semantic_kink_distance(inst.codes, inst.similarity);
    case LossTerm::kQuantization: return quantization_kink_distance(inst.codes.values());
    case LossTerm::kInformation:
    case LossTerm::kRotation: return kInf;
    case LossTerm::kTotal: break;
  }

  const CodeBatch fwd = forward(inst.head, inst.features);
  double dist = semantic_kink_distance(fwd.b, batch_similarity(inst.features, inst.rho));
  auto scan = [&](const CodeBatch& cb) {
    for (std::size_t i = 0; i < cb.z.size(); ++i) {
      const double z = cb.z.values()[i];
      dist = std::min(dist, std::abs(z));
      if (z > 0.0) dist = std::min(dist, quantization_kink_distance(std::span(&z, 1)));
    }
  };
  scan(fwd);
  for (const auto& rf : inst.rotated_features) scan(forward(inst.head, rf));
  return dist;
}

void require_kink_free(LossTerm term, const GradcheckInstance& inst, double margin) {
  const double dist = kink_distance(term, inst);
  if (dist < margin) {
    throw InvalidArgument("gradcheck: instance lies " + std::to_string(dist) +
                          " from a non-differentiable point of " +
                          std::string(loss_term_name(term)) + " (margin " +
                          std::to_string(margin) + ")");
  }
}

GradcheckInstance sample_instance(LossTerm term, std::mt19937_64& rng, double margin) {
  std::uniform_int_distribution<std::size_t> pick_m(2, 4), pick_k(2, 8), pick_d(2, 8), pick_r(1, 2);
  std::uniform_real_distribution<double> code_value(0.02, 1.4);
  std::uniform_real_distribution<double> rho_value(0.1, 2.0);
  std::uniform_real_distribution<double> offset_value(0.1, 0.9);
  std::normal_distribution<double> normal(0.0, 1.0);

  for (int attempt = 0; attempt < 100000; ++attempt) {
    const std::size_t m = pick_m(rng), k = pick_k(rng), d = pick_d(rng), rot = pick_r(rng);
    GradcheckInstance inst;
    inst.rho = Rho(rho_value(rng));
    inst.weights = LossWeights{1.0, 0.5, 1.0, 0.5};

    inst.features = Matrix(m, d);
    for (double& v : inst.features.values()) v = normal(rng);
    for (std::size_t r = 0; r < rot; ++r) {
      Matrix rf = inst.features;
      for (double& v : rf.values()) v += 0.3 * normal(rng);
      inst.rotated_features.push_back(std::move(rf));
    }
    inst.similarity = batch_similarity(inst.features, inst.rho);

    inst.codes = Matrix(m, k);
    for (double& v : inst.codes.values()) v = code_value(rng);
    for (std::size_t r = 0; r < rot; ++r) {
      Matrix rc = inst.codes;
      for (double& v : rc.values()) v = std::max(0.02, v + 0.2 * normal(rng));
      inst.rotated_codes.push_back(std::move(rc));
    }

    inst.head = init_head(k, d, rng());
    for (double& c : inst.head.offsets) c = offset_value(rng);

    if (kink_distance(term, inst) >= margin) return inst;
  }
  throw Error("gradcheck: could not sample a kink-free instance");
}

GradcheckReport gradcheck(LossTerm term, const GradcheckInstance& inst, double epsilon) {
  require_kink_free(term, inst);
  const auto x = flatten_variables(term, inst);
  const auto analytic = analytic_gradient(term, inst);
  return compare_gradient(
      [&](std::span<const double> vars) { return evaluate_term(term, inst, vars); }, x, analytic,
      epsilon);
}

}  // namespace usdh
