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

// Binary feature ("USDF") and code ("USDB") file formats.
//
// USDF, all integers little-endian:
//   "USDF" u32 version=1 u32 n u32 d u32 R u8 has_labels
//   (R+1) blocks of n*d f32, block 0 = reference, then one block per rotation
//   n u32 labels iff has_labels == 1
//
// USDB:
//   "USDB" u32 version=1 u32 n u32 k
//   n records of (u64 id, ceil(k/8) code bytes)
// Bit j of a code is stored in byte j/8 at bit position j%8. Pad bits are 0.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "usdh/matrix.hpp"

namespace usdh {

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kFeatureHeaderBytes = 21;
inline constexpr std::size_t kCodebookHeaderBytes = 16;

using ItemId = std::uint64_t;
using Label = std::uint32_t;

/// n feature vectors of dimension d, stored as R+1 aligned blocks: block 0
/// holds the reference items and block r > 0 the r-th rotated variant. Row i
/// refers to the same item in every block. Immutable once constructed.
class FeatureSet {
 public:
  FeatureSet() = default;

  /// Takes ownership of `data`, laid out block-major then row-major. Throws
  /// ShapeError on size mismatches and InvalidArgument on non-finite values.
  FeatureSet(std::uint32_t n, std::uint32_t d, std::uint32_t rotations,
             std::vector<float> data,
             std::optional<std::vector<Label>> labels = std::nullopt);

  std::uint32_t n() const { return n_; }
  std::uint32_t d() const { return d_; }
  std::uint32_t rotations() const { return rotations_; }
  std::size_t blocks() const { return std::size_t{rotations_} + 1; }

  std::span<const float> data() const { return data_; }
  std::span<const float> block(std::size_t b) const;
  std::span<const float> row(std::size_t b, std::size_t i) const;

  bool has_labels() const { return labels_.has_value(); }
  const std::optional<std::vector<Label>>& labels() const { return labels_; }

  /// Rows `indices` of block `b`, widened to double.
  Matrix gather(std::span<const std::size_t> indices, std::size_t b = 0) const;
  /// All rows of block `b`, widened to double.
  Matrix to_matrix(std::size_t b = 0) const;

  /// New set holding rows `indices` of every block (labels follow).
  FeatureSet subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;

 private:
  std::uint32_t n_ = 0;
  std::uint32_t d_ = 0;
  std::uint32_t rotations_ = 0;
  std::vector<float> data_;
  std::optional<std::vector<Label>> labels_;
};

/// n bit-packed k-bit codes with unique ids. Codes are held as little-endian
/// 64-bit words (bit j in word j/64 at position j%64), which is byte-for-byte
/// the on-disk LSB-first layout padded out to a whole word.
class BinaryCodebook {
 public:
  explicit BinaryCodebook(std::uint32_t k = 0);

  /// Throws InvalidArgument on duplicate ids or nonzero pad bits and
  /// ShapeError if `words` is not ids.size() * words_per_code(k) long.
  BinaryCodebook(std::uint32_t k, std::vector<ItemId> ids, std::vector<std::uint64_t> words);

  static std::size_t words_per_code(std::uint32_t k) { return (std::size_t{k} + 63) / 64; }
  static std::size_t bytes_per_code(std::uint32_t k) { return (std::size_t{k} + 7) / 8; }

  std::size_t n() const { return ids_.size(); }
  std::uint32_t k() const { return k_; }
  std::size_t words_per_code() const { return words_per_code(k_); }

  std::span<const ItemId> ids() const { return ids_; }
  ItemId id(std::size_t i) const { return ids_[i]; }
  std::span<const std::uint64_t> code(std::size_t i) const;
  std::span<const std::uint64_t> words() const { return words_; }

  /// Bit j of code i as 0/1.
  std::uint8_t bit(std::size_t i, std::size_t j) const;

  friend bool operator==(const BinaryCodebook&, const BinaryCodebook&) = default;

 private:
  std::uint32_t k_ = 0;
  std::vector<ItemId> ids_;
  std::vector<std::uint64_t> words_;
};

/// Packs a 0/1 vector into LSB-first words; any nonzero entry counts as 1.
std::vector<std::uint64_t> pack_bits(std::span<const std::uint8_t> bits);
std::vector<std::uint8_t> unpack_bits(std::span<const std::uint64_t> words, std::uint32_t k);

FeatureSet read_features(const std::filesystem::path& path);
void write_features(const FeatureSet& fs, const std::filesystem::path& path);
/// Exact size in bytes of the USDF encoding of `fs`.
std::uint64_t feature_file_size(const FeatureSet& fs);

BinaryCodebook read_codebook(const std::filesystem::path& path);
void write_codebook(const BinaryCodebook& cb, const std::filesystem::path& path);

// In-memory codecs behind the file functions.
std::vector<std::uint8_t> encode_features(const FeatureSet& fs);
FeatureSet decode_features(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_codebook(const BinaryCodebook& cb);
BinaryCodebook decode_codebook(std::span<const std::uint8_t> bytes);

}  // namespace usdh
