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

#include "usdh/hamming_index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "usdh/error.hpp"

namespace usdh {
namespace {

// Distances of every stored code to `q`, specialised for the common widths.
void scan_distances(const BinaryCodebook& index, std::span<const std::uint64_t> q,
                    std::vector<std::uint32_t>& out) {
  const std::size_t n = index.n();
  const std::size_t wpc = index.words_per_code();
  const std::uint64_t* base = index.words().data();
  out.resize(n);
  if (wpc == 1) {
    const std::uint64_t q0 = q[0];
    for (std::size_t i = 0; i < n; ++i) out[i] = std::popcount(base[i] ^ q0);
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t* c = base + i * wpc;
    std::uint32_t dist = 0;
    for (std::size_t w = 0; w < wpc; ++w) dist += std::popcount(c[w] ^ q[w]);
    out[i] = dist;
  }
}

template <typename Relevant>
EvalReport evaluate_impl(const BinaryCodebook& index, const BinaryCodebook& queries,
                         std::size_t db_label_count, std::size_t K, Relevant&& relevant) {
  if (queries.n() == 0) throw InvalidArgument("evaluate_map: empty query set");
  if (K == 0) throw InvalidArgument("evaluate_map: K must be at least 1");
  if (db_label_count != index.n()) {
    throw ShapeError("evaluate_map: " + std::to_string(db_label_count) +
                     " database labels for " + std::to_string(index.n()) + " indexed codes");
  }
  if (queries.k() != index.k()) {
    throw ShapeError("evaluate_map: query codes have " + std::to_string(queries.k()) +
                     " bits, index has " + std::to_string(index.k()));
  }
  EvalReport report;
  report.K = K;
  report.ap.reserve(queries.n());
  std::vector<std::uint8_t> flags;
  for (std::size_t qi = 0; qi < queries.n(); ++qi) {
    const auto hits = query(index, queries.code(qi), K);
    flags.assign(hits.size(), 0);
    for (std::size_t r = 0; r < hits.size(); ++r) flags[r] = relevant(qi, hits[r].position) ? 1 : 0;
    report.ap.push_back(average_precision(flags));
  }
  double sum = 0.0;
  for (double ap : report.ap) sum += ap;
  report.map_at_k = sum / static_cast<double>(report.ap.size());
  return report;
}

}  // namespace

Bits binarize(std::span<const double> code) {
  Bits out(code.size());
  for (std::size_t j = 0; j < code.size(); ++j) {
    if (!std::isfinite(code[j])) {
      throw InvalidArgument("binarize: non-finite entry at bit " + std::to_string(j));
    }
    out[j] = code[j] >= 0.5 ? 1 : 0;
  }
  return out;
}

BinaryCodebook build_index(std::span<const Bits> codes, std::span<const ItemId> ids) {
  if (codes.size() != ids.size()) {
    throw ShapeError("build_index: " + std::to_string(codes.size()) + " codes but " +
                     std::to_string(ids.size()) + " ids");
  }
  const std::uint32_t k = codes.empty() ? 0 : static_cast<std::uint32_t>(codes.front().size());
  const std::size_t wpc = BinaryCodebook::words_per_code(k);
  std::vector<std::uint64_t> words;
  words.reserve(codes.size() * wpc);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i].size() != k) {
      throw ShapeError("build_index: code " + std::to_string(i) + " has " +
                       std::to_string(codes[i].size()) + " bits, expected " + std::to_string(k));
    }
    const auto packed = pack_bits(codes[i]);
    words.insert(words.end(), packed.begin(), packed.end());
  }
  return BinaryCodebook(k, {ids.begin(), ids.end()}, std::move(words));
}

BinaryCodebook encode_items(const HashHeadParams& params, const FeatureSet& fs, std::size_t block) {
  if (fs.d() != params.d()) {
    throw ShapeError("encode: features have d=" + std::to_string(fs.d()) + ", head expects d=" +
                     std::to_string(params.d()));
  }
  if (block >= fs.blocks()) throw InvalidArgument("encode: no block " + std::to_string(block));
  const auto codes = forward(params, fs.to_matrix(block));
  std::vector<Bits> bits;
  bits.reserve(fs.n());
  std::vector<ItemId> ids(fs.n());
  for (std::size_t i = 0; i < fs.n(); ++i) {
    bits.push_back(binarize(codes.b.row(i)));
    ids[i] = i;
  }
  if (fs.n() == 0) return BinaryCodebook(static_cast<std::uint32_t>(params.k()));
  return build_index(bits, ids);
}

std::uint32_t hamming_distance(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  if (a.size() != b.size()) throw ShapeError("hamming_distance: word count mismatch");
  std::uint32_t dist = 0;
  for (std::size_t w = 0; w < a.size(); ++w) dist += std::popcount(a[w] ^ b[w]);
  return dist;
}

QueryResult query(const BinaryCodebook& index, std::span<const std::uint64_t> packed,
                  std::size_t K) {
  if (K == 0) throw InvalidArgument("query: K must be at least 1");
  if (packed.size() != index.words_per_code()) {
    throw ShapeError("query: code width does not match the index (k=" + std::to_string(index.k()) +
                     ")");
  }
  thread_local std::vector<std::uint32_t> dist;
  scan_distances(index, packed, dist);

  // Counting pass: find the smallest radius whose ball holds K items, then
  // collect everything strictly inside it plus enough ties at the radius.
  const std::size_t n = index.n();
  const std::size_t take = std::min(K, n);
  std::vector<std::size_t> hist(index.k() + 2, 0);
  for (std::uint32_t d : dist) ++hist[d];
  std::uint32_t radius = 0;
  std::size_t inside = 0;
  while (radius <= index.k() && inside + hist[radius] < take) inside += hist[radius++];

  QueryResult out;
  out.reserve(take);
  std::vector<Neighbor> boundary;
  for (std::size_t i = 0; i < n; ++i) {
    if (dist[i] < radius) {
      out.push_back({index.id(i), dist[i], i});
    } else if (dist[i] == radius) {
      boundary.push_back({index.id(i), dist[i], i});
    }
  }
  const std::size_t need = take - out.size();
  auto by_id = [](const Neighbor& a, const Neighbor& b) { return a.id < b.id; };
  if (need < boundary.size()) {
    std::partial_sort(boundary.begin(), boundary.begin() + static_cast<std::ptrdiff_t>(need),
                      boundary.end(), by_id);
    boundary.resize(need);
  }
  out.insert(out.end(), boundary.begin(), boundary.end());
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
  });
  return out;
}

QueryResult query(const BinaryCodebook& index, const Bits& q, std::size_t K) {
  if (q.size() != index.k()) {
    throw ShapeError("query: code has " + std::to_string(q.size()) + " bits, index has " +
                     std::to_string(index.k()));
  }
  return query(index, pack_bits(q), K);
}

double average_precision(std::span<const std::uint8_t> relevant) {
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t p = 0; p < relevant.size(); ++p) {
    if (!relevant[p]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(p + 1);
  }
  return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
}

std::string EvalReport::summary() const {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "map_at_k=%.9f\nK=%zu\nqueries=%zu\n", map_at_k, K, ap.size());
  return buf;
}

std::string EvalReport::per_query_csv(std::span<const ItemId> query_ids) const {
  if (query_ids.size() != ap.size()) throw ShapeError("per_query_csv: id count differs from AP count");
  std::string out = "query_id,ap\n";
  char buf[64];
  for (std::size_t i = 0; i < ap.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%llu,%.9f\n", static_cast<unsigned long long>(query_ids[i]),
                  ap[i]);
    out += buf;
  }
  return out;
}

EvalReport evaluate_map(const BinaryCodebook& index, const BinaryCodebook& queries,
                        std::span<const Label> query_labels, std::span<const Label> db_labels,
                        std::size_t K) {
  if (query_labels.size() != queries.n()) {
    throw ShapeError("evaluate_map: " + std::to_string(query_labels.size()) +
                     " query labels for " + std::to_string(queries.n()) + " queries");
  }
  return evaluate_impl(index, queries, db_labels.size(), K, [&](std::size_t qi, std::size_t pos) {
    return query_labels[qi] == db_labels[pos];
  });
}

EvalReport evaluate_map(const BinaryCodebook& index, const BinaryCodebook& queries,
                        const LabelSets& query_labels, const LabelSets& db_labels, std::size_t K) {
  if (query_labels.size() != queries.n()) {
    throw ShapeError("evaluate_map: " + std::to_string(query_labels.size()) +
                     " query label sets for " + std::to_string(queries.n()) + " queries");
  }
  return evaluate_impl(index, queries, db_labels.size(), K, [&](std::size_t qi, std::size_t pos) {
    for (Label a : query_labels[qi]) {
      if (std::find(db_labels[pos].begin(), db_labels[pos].end(), a) != db_labels[pos].end()) {
        return true;
      }
    }
    return false;
  });
}

}  // namespace usdh
