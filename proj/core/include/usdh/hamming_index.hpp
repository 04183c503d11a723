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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "usdh/feature_io.hpp"
#include "usdh/hash_head.hpp"
#include "usdh/matrix.hpp"

namespace usdh {

/// One bit per entry, values 0 or 1.
using Bits = std::vector<std::uint8_t>;

/// f(b) = 1 iff b >= 0.5. Throws InvalidArgument on non-finite entries.
Bits binarize(std::span<const double> code);

BinaryCodebook build_index(std::span<const Bits> codes, std::span<const ItemId> ids);

/// Runs the head over block `block` of `fs` and binarizes; ids are row indices.
BinaryCodebook encode_items(const HashHeadParams& params, const FeatureSet& fs,
                            std::size_t block = 0);

std::uint32_t hamming_distance(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

struct Neighbor {
  ItemId id = 0;
  std::uint32_t distance = 0;
  std::size_t position = 0;  // row in the codebook

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// At most K neighbors ordered by (distance, id).
using QueryResult = std::vector<Neighbor>;

/// Exact top-K by Hamming distance over the packed codes. Throws
/// InvalidArgument for K == 0 and ShapeError when the query width differs.
QueryResult query(const BinaryCodebook& index, std::span<const std::uint64_t> packed, std::size_t K);
QueryResult query(const BinaryCodebook& index, const Bits& q, std::size_t K);

/// Average precision of one ranked list: mean over relevant positions p of
/// (relevant hits in 1..p) / p. Zero when nothing relevant was retrieved.
double average_precision(std::span<const std::uint8_t> relevant);

struct EvalReport {
  double map_at_k = 0.0;
  std::vector<double> ap;  // per query, in query order
  std::size_t K = 0;

  /// map_at_k, K and query count as key=value lines.
  std::string summary() const;
  /// "query_id,ap" header then one row per query.
  std::string per_query_csv(std::span<const ItemId> query_ids) const;
};

/// Label sets per item; two items are relevant when they share any label.
using LabelSets = std::vector<std::vector<Label>>;

/// `db_labels` is indexed by codebook row, `query_labels` by query row.
EvalReport evaluate_map(const BinaryCodebook& index, const BinaryCodebook& queries,
                        std::span<const Label> query_labels, std::span<const Label> db_labels,
                        std::size_t K);
EvalReport evaluate_map(const BinaryCodebook& index, const BinaryCodebook& queries,
                        const LabelSets& query_labels, const LabelSets& db_labels, std::size_t K);

}  // namespace usdh
