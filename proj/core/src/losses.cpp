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

#include "usdh/losses.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "usdh/error.hpp"

namespace usdh {
namespace {

// Right-hand sign: the subgradient of |x| at 0 is taken as +1.
double rsign(double x) { return x >= 0.0 ? 1.0 : -1.0; }

void check_codes(const CodeBatch& codes, const char* who) {
  const std::size_t m = codes.b.rows();
  const std::size_t k = codes.b.cols();
  if (codes.b_tilde.rows() != m || codes.b_tilde.cols() != k) {
    throw ShapeError(std::string(who) + ": recentered codes shaped differently from codes");
  }
  if (k == 0) throw ShapeError(std::string(who) + ": zero-length codes");
}

void add_scaled(Matrix& dst, const Matrix& src, double w) {
  if (w == 0.0) return;
  auto d = dst.values();
  const auto s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += w * s[i];
}

}  // namespace

void LossWeights::validate() const {
  for (double w : {w_sem, alpha, beta, gamma}) {
    if (!(std::isfinite(w) && w >= 0.0)) {
      throw InvalidArgument("loss weights must be finite and non-negative");
    }
  }
}

std::string LossReport::log_line(std::size_t epoch) const {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "epoch=%zu j1=%.9g j2=%.9g j3=%.9g j4=%.9g total=%.9g", epoch,
                j1, j2, j3, j4, total);
  return buf;
}

double code_similarity(std::span<const double> bi, std::span<const double> bj) {
  if (bi.size() != bj.size()) {
    throw ShapeError("code_similarity: length mismatch " + std::to_string(bi.size()) + " vs " +
                     std::to_string(bj.size()));
  }
  if (bi.empty()) throw ShapeError("code_similarity: zero-length codes");
  const double k = static_cast<double>(bi.size());
  double dot = 0.0;
  for (std::size_t t = 0; t < bi.size(); ++t) dot += (2.0 * bi[t] - 1.0) * (2.0 * bj[t] - 1.0);
  return (dot + k) / (2.0 * k);
}

TermResult semantic_loss(const CodeBatch& codes, const SimilarityMatrix& s) {
  check_codes(codes, "semantic_loss");
  const std::size_t m = codes.m();
  const std::size_t k = codes.k();
  if (m < 2) throw InvalidArgument("semantic_loss: batch needs at least 2 codes");
  if (s.rows() != m || s.cols() != m) {
    throw ShapeError("semantic_loss: similarity matrix is " + std::to_string(s.rows()) + "x" +
                     std::to_string(s.cols()) + ", batch has m=" + std::to_string(m));
  }
  const double kk = static_cast<double>(k);
  const Matrix& bt = codes.b_tilde;

  // sign[i][j] = sgn(S_ij - sim_ij); the residual matrix itself is not kept.
  Matrix sign(m, m);
  double value = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto bi = bt.row(i);
    for (std::size_t j = 0; j < m; ++j) {
      const auto bj = bt.row(j);
      double dot = 0.0;
      for (std::size_t t = 0; t < k; ++t) dot += bi[t] * bj[t];
      const double r = s(i, j) - (dot + kk) / (2.0 * kk);
      value += std::abs(r);
      sign(i, j) = rsign(r);
    }
  }

  // b_i appears in row i and column i of the double sum; d sim_ij / d b_i is
  // bt_j / k off the diagonal and 2 bt_i / k on it, which the (i,j)+(j,i)
  // pairing below covers uniformly.
  TermResult out{value, Matrix(m, k)};
  for (std::size_t i = 0; i < m; ++i) {
    auto g = out.grad.row(i);
    for (std::size_t j = 0; j < m; ++j) {
      const double coef = -(sign(i, j) + sign(j, i)) / kk;
      const auto bj = bt.row(j);
      for (std::size_t t = 0; t < k; ++t) g[t] += coef * bj[t];
    }
  }
  return out;
}

TermResult quantization_loss(const CodeBatch& codes, double alpha) {
  check_codes(codes, "quantization_loss");
  const std::size_t m = codes.m();
  const std::size_t k = codes.k();
  TermResult out{0.0, Matrix(m, k)};
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double b = codes.b(i, j);
      sum += std::abs(std::abs(codes.b_tilde(i, j)) - 1.0);
      // f(b) = | |2b-1| - 1 | is piecewise linear with slopes
      // -2 (b<0), +2 [0,.5), -2 [.5,1), +2 [1,inf); right-hand at the kinks.
      double slope;
      if (b < 0.0) {
        slope = -2.0;
      } else if (b < 0.5) {
        slope = 2.0;
      } else if (b < 1.0) {
        slope = -2.0;
      } else {
        slope = 2.0;
      }
      out.grad(i, j) = alpha * slope;
    }
  }
  out.value = alpha * sum;
  return out;
}

InformationTerm information_loss(const CodeBatch& codes, double beta) {
  check_codes(codes, "information_loss");
  const std::size_t m = codes.m();
  const std::size_t k = codes.k();
  if (m == 0) throw InvalidArgument("information_loss: empty batch");
  InformationTerm out{0.0, Matrix(m, k), std::vector<double>(k, 0.0)};
  for (std::size_t i = 0; i < m; ++i) {
    const auto b = codes.b.row(i);
    for (std::size_t j = 0; j < k; ++j) out.mu[j] += b[j];
  }
  const double inv_m = 1.0 / static_cast<double>(m);
  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    out.mu[j] *= inv_m;
    const double dev = out.mu[j] - 0.5;
    sum += dev * dev;
    const double g = beta * 2.0 * dev * inv_m;
    for (std::size_t i = 0; i < m; ++i) out.grad(i, j) = g;
  }
  out.value = beta * sum;
  return out;
}

RotationTerm rotation_loss(const CodeBatch& codes, std::span<const CodeBatch> rotated,
                           double gamma) {
  check_codes(codes, "rotation_loss");
  if (rotated.empty()) {
    throw InvalidArgument("rotation_loss: no rotated codes (R = 0), rotation stage inapplicable");
  }
  const std::size_t m = codes.m();
  const std::size_t k = codes.k();
  RotationTerm out{0.0, Matrix(m, k), {}};
  out.grad_rotated.reserve(rotated.size());
  double sum = 0.0;
  for (std::size_t r = 0; r < rotated.size(); ++r) {
    const Matrix& br = rotated[r].b;
    if (br.rows() != m || br.cols() != k) {
      throw ShapeError("rotation_loss: rotated block " + std::to_string(r) +
                       " is not aligned with the reference batch");
    }
    Matrix g(m, k);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        const double diff = br(i, j) - codes.b(i, j);
        sum += diff * diff;
        g(i, j) = gamma * 2.0 * diff;
        out.grad_reference(i, j) -= gamma * 2.0 * diff;
      }
    }
    out.grad_rotated.push_back(std::move(g));
  }
  out.value = gamma * sum;
  return out;
}

Objective total_loss(const CodeBatch& codes, std::span<const CodeBatch> rotated,
                     const SimilarityMatrix& s, const LossWeights& weights) {
  weights.validate();
  const auto sem = semantic_loss(codes, s);
  const auto quant = quantization_loss(codes, 1.0);
  auto info = information_loss(codes, 1.0);

  Objective out;
  out.report.j1 = sem.value;
  out.report.j2 = quant.value;
  out.report.j3 = info.value;
  out.report.mu = std::move(info.mu);

  out.grad_reference = Matrix(codes.m(), codes.k());
  add_scaled(out.grad_reference, sem.grad, weights.w_sem);
  add_scaled(out.grad_reference, quant.grad, weights.alpha);
  add_scaled(out.grad_reference, info.grad, weights.beta);

  if (!rotated.empty()) {
    auto rot = rotation_loss(codes, rotated, 1.0);
    out.report.j4 = rot.value;
    add_scaled(out.grad_reference, rot.grad_reference, weights.gamma);
    out.grad_rotated.reserve(rotated.size());
    for (auto& g : rot.grad_rotated) {
      Matrix scaled(g.rows(), g.cols());
      add_scaled(scaled, g, weights.gamma);
      out.grad_rotated.push_back(std::move(scaled));
    }
  }

  const auto& r = out.report;
  out.report.total =
      weights.w_sem * r.j1 + weights.alpha * r.j2 + weights.beta * r.j3 + weights.gamma * r.j4;
  return out;
}

}  // namespace usdh
