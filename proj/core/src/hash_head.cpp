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

#include "usdh/hash_head.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include "usdh/error.hpp"

namespace usdh {
namespace {

constexpr char kHeadMagic[4] = {'U', 'S', 'D', 'W'};
constexpr std::uint32_t kHeadVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int s = 0; s < 64; s += 8) out.push_back(static_cast<std::uint8_t>(bits >> s));
}

std::uint64_t get_le(std::span<const std::uint8_t> bytes, std::size_t at, int width) {
  std::uint64_t v = 0;
  for (int s = 0; s < width; ++s) v |= std::uint64_t{bytes[at + s]} << (8 * s);
  return v;
}

}  // namespace

CodeBatch CodeBatch::from_codes(Matrix b) {
  CodeBatch out;
  out.b_tilde = Matrix(b.rows(), b.cols());
  for (std::size_t i = 0; i < b.size(); ++i) {
    out.b_tilde.values()[i] = 2.0 * b.values()[i] - 1.0;
  }
  out.z = b;
  out.b = std::move(b);
  return out;
}

HashHeadParams init_head(std::size_t k, std::size_t d, std::uint64_t seed) {
  if (k == 0 || d == 0) throw InvalidArgument("init_head: k and d must be positive");
  HashHeadParams p{Matrix(k, d), std::vector<double>(k, 0.5)};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(d)));
  for (double& w : p.weights.values()) w = normal(rng);
  return p;
}

CodeBatch forward(const HashHeadParams& params, const Matrix& batch) {
  const std::size_t k = params.k();
  const std::size_t d = params.d();
  if (batch.cols() != d) {
    throw ShapeError("forward: batch has " + std::to_string(batch.cols()) +
                     " columns, head expects d=" + std::to_string(d));
  }
  if (params.offsets.size() != k) throw ShapeError("forward: offsets length differs from k");
  const std::size_t m = batch.rows();
  CodeBatch out{Matrix(m, k), Matrix(m, k), Matrix(m, k)};
  for (std::size_t i = 0; i < m; ++i) {
    const auto x = batch.row(i);
    for (std::size_t j = 0; j < k; ++j) {
      const auto w = params.weights.row(j);
      double z = params.offsets[j];
      for (std::size_t t = 0; t < d; ++t) z += w[t] * x[t];
      const double b = z > 0.0 ? z : 0.0;
      out.z(i, j) = z;
      out.b(i, j) = b;
      out.b_tilde(i, j) = 2.0 * b - 1.0;
    }
  }
  return out;
}

HeadGradient zero_gradient(const HashHeadParams& params) {
  return {Matrix(params.k(), params.d()), std::vector<double>(params.k(), 0.0)};
}

void accumulate_backward(const HashHeadParams& params, const Matrix& batch,
                         const CodeBatch& codes, const Matrix& dloss_db, HeadGradient& acc) {
  const std::size_t k = params.k();
  const std::size_t d = params.d();
  const std::size_t m = batch.rows();
  if (batch.cols() != d) throw ShapeError("backward: batch width differs from head d");
  if (codes.z.rows() != m || codes.z.cols() != k) {
    throw ShapeError("backward: retained pre-activations missing or shaped for another batch");
  }
  if (dloss_db.rows() != m || dloss_db.cols() != k) {
    throw ShapeError("backward: upstream gradient must be " + std::to_string(m) + "x" +
                     std::to_string(k));
  }
  if (acc.weights.rows() != k || acc.weights.cols() != d || acc.offsets.size() != k) {
    throw ShapeError("backward: accumulator shaped for another head");
  }
  for (std::size_t i = 0; i < m; ++i) {
    const auto x = batch.row(i);
    for (std::size_t j = 0; j < k; ++j) {
      const double g = dloss_db(i, j);
      if (!std::isfinite(g)) throw InvalidArgument("backward: non-finite upstream gradient");
      if (codes.z(i, j) <= 0.0 || g == 0.0) continue;
      acc.offsets[j] += g;
      auto w = acc.weights.row(j);
      for (std::size_t t = 0; t < d; ++t) w[t] += g * x[t];
    }
  }
}

HeadGradient backward(const HashHeadParams& params, const Matrix& batch, const CodeBatch& codes,
                      const Matrix& dloss_db) {
  HeadGradient g = zero_gradient(params);
  accumulate_backward(params, batch, codes, dloss_db, g);
  return g;
}

std::vector<std::uint8_t> encode_head(const HashHeadParams& params) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeadHeaderBytes + 8 * (params.weights.size() + params.offsets.size()));
  out.insert(out.end(), kHeadMagic, kHeadMagic + 4);
  put_u32(out, kHeadVersion);
  put_u32(out, static_cast<std::uint32_t>(params.k()));
  put_u32(out, static_cast<std::uint32_t>(params.d()));
  for (double w : params.weights.values()) put_f64(out, w);
  for (double c : params.offsets) put_f64(out, c);
  return out;
}

HashHeadParams decode_head(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeadHeaderBytes) {
    throw FormatError("truncated head file: header needs " + std::to_string(kHeadHeaderBytes) +
                          " bytes",
                      bytes.size());
  }
  if (std::memcmp(bytes.data(), kHeadMagic, 4) != 0) {
    throw FormatError("bad magic: not a USDW file", 0);
  }
  const auto version = static_cast<std::uint32_t>(get_le(bytes, 4, 4));
  if (version != kHeadVersion) throw FormatError("unsupported version " + std::to_string(version), 4);
  const auto k = static_cast<std::size_t>(get_le(bytes, 8, 4));
  const auto d = static_cast<std::size_t>(get_le(bytes, 12, 4));
  if (k == 0 || d == 0) throw FormatError("head with zero k or d", 8);
  const std::size_t expected = kHeadHeaderBytes + 8 * (k * d + k);
  if (bytes.size() != expected) {
    throw FormatError("head payload is " + std::to_string(bytes.size()) + " bytes, expected " +
                          std::to_string(expected),
                      std::min(bytes.size(), expected));
  }
  HashHeadParams p{Matrix(k, d), std::vector<double>(k)};
  std::size_t at = kHeadHeaderBytes;
  auto next = [&] {
    const double v = std::bit_cast<double>(get_le(bytes, at, 8));
    if (!std::isfinite(v)) throw FormatError("non-finite head parameter", at);
    at += 8;
    return v;
  };
  for (double& w : p.weights.values()) w = next();
  for (double& c : p.offsets) c = next();
  return p;
}

HashHeadParams read_head(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string() + " for reading");
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  return decode_head(bytes);
}

void write_head(const HashHeadParams& params, const std::filesystem::path& path) {
  const auto bytes = encode_head(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace usdh
