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

#include "usdh/feature_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "usdh/error.hpp"

namespace usdh {
namespace {

constexpr char kFeatureMagic[4] = {'U', 'S', 'D', 'F'};
constexpr char kCodebookMagic[4] = {'U', 'S', 'D', 'B'};

class ByteWriter {
 public:
  explicit ByteWriter(std::size_t reserve) { out_.reserve(reserve); }

  void magic(const char (&m)[4]) { out_.insert(out_.end(), m, m + 4); }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void u64(std::uint64_t v) {
    for (int s = 0; s < 64; s += 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t count, const char* what) const {
    if (remaining() < count) {
      throw FormatError(std::string("truncated payload: expected ") + std::to_string(count) +
                            " bytes for " + what + ", found " + std::to_string(remaining()),
                        pos_);
    }
  }

  void magic(const char (&m)[4], const char* format) {
    need(4, "magic");
    if (std::memcmp(bytes_.data(), m, 4) != 0) {
      throw FormatError(std::string("bad magic: not a ") + format + " file", 0);
    }
    pos_ += 4;
  }

  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int s = 0; s < 4; ++s) v |= std::uint32_t{bytes_[pos_ + s]} << (8 * s);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int s = 0; s < 8; ++s) v |= std::uint64_t{bytes_[pos_ + s]} << (8 * s);
    pos_ += 8;
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string() + " for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spill(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error("write failed for " + path.string());
}

void check_version(std::uint32_t version, std::size_t offset) {
  if (version != kFormatVersion) {
    throw FormatError("unsupported version " + std::to_string(version), offset);
  }
}

std::uint64_t pad_mask(std::uint32_t k) {
  const std::uint32_t used = k % 64;
  return used == 0 ? 0 : ~std::uint64_t{0} << used;
}

}  // namespace

// ---------------------------------------------------------------------------
// FeatureSet

FeatureSet::FeatureSet(std::uint32_t n, std::uint32_t d, std::uint32_t rotations,
                       std::vector<float> data, std::optional<std::vector<Label>> labels)
    : n_(n), d_(d), rotations_(rotations), data_(std::move(data)), labels_(std::move(labels)) {
  const std::size_t expected = blocks() * n_ * d_;
  if (data_.size() != expected) {
    throw ShapeError("feature data holds " + std::to_string(data_.size()) + " values, expected " +
                     std::to_string(expected));
  }
  if (labels_ && labels_->size() != n_) {
    throw ShapeError("label count " + std::to_string(labels_->size()) + " differs from n=" +
                     std::to_string(n_));
  }
  for (std::size_t idx = 0; idx < data_.size(); ++idx) {
    if (!std::isfinite(data_[idx])) {
      const std::size_t per_block = std::size_t{n_} * d_;
      const std::size_t b = idx / per_block;
      const std::size_t r = (idx % per_block) / d_;
      throw InvalidArgument("non-finite feature value at block " + std::to_string(b) + " row " +
                            std::to_string(r) + " col " + std::to_string(idx % d_));
    }
  }
}

std::span<const float> FeatureSet::block(std::size_t b) const {
  const std::size_t per_block = std::size_t{n_} * d_;
  return std::span<const float>(data_).subspan(b * per_block, per_block);
}

std::span<const float> FeatureSet::row(std::size_t b, std::size_t i) const {
  return block(b).subspan(i * d_, d_);
}

Matrix FeatureSet::gather(std::span<const std::size_t> indices, std::size_t b) const {
  Matrix out(indices.size(), d_);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto src = row(b, indices[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

Matrix FeatureSet::to_matrix(std::size_t b) const {
  Matrix out(n_, d_);
  const auto src = block(b);
  std::copy(src.begin(), src.end(), out.values().begin());
  return out;
}

FeatureSet FeatureSet::subset(std::span<const std::size_t> indices) const {
  std::vector<float> data;
  data.reserve(blocks() * indices.size() * d_);
  for (std::size_t b = 0; b < blocks(); ++b) {
    for (std::size_t i : indices) {
      if (i >= n_) throw InvalidArgument("subset index " + std::to_string(i) + " out of range");
      const auto src = row(b, i);
      data.insert(data.end(), src.begin(), src.end());
    }
  }
  std::optional<std::vector<Label>> labels;
  if (labels_) {
    labels.emplace();
    labels->reserve(indices.size());
    for (std::size_t i : indices) labels->push_back((*labels_)[i]);
  }
  return FeatureSet(static_cast<std::uint32_t>(indices.size()), d_, rotations_, std::move(data),
                    std::move(labels));
}

// ---------------------------------------------------------------------------
// BinaryCodebook

BinaryCodebook::BinaryCodebook(std::uint32_t k) : k_(k) {}

BinaryCodebook::BinaryCodebook(std::uint32_t k, std::vector<ItemId> ids,
                               std::vector<std::uint64_t> words)
    : k_(k), ids_(std::move(ids)), words_(std::move(words)) {
  const std::size_t wpc = words_per_code(k_);
  if (words_.size() != ids_.size() * wpc) {
    throw ShapeError("codebook holds " + std::to_string(words_.size()) + " words for " +
                     std::to_string(ids_.size()) + " codes of " + std::to_string(k_) + " bits");
  }
  const std::uint64_t mask = pad_mask(k_);
  if (mask != 0) {
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (words_[i * wpc + wpc - 1] & mask) {
        throw InvalidArgument("code " + std::to_string(i) + " has nonzero pad bits");
      }
    }
  }
  std::vector<ItemId> sorted = ids_;
  std::sort(sorted.begin(), sorted.end());
  if (auto dup = std::adjacent_find(sorted.begin(), sorted.end()); dup != sorted.end()) {
    throw InvalidArgument("duplicate id " + std::to_string(*dup));
  }
}

std::span<const std::uint64_t> BinaryCodebook::code(std::size_t i) const {
  const std::size_t wpc = words_per_code();
  return std::span<const std::uint64_t>(words_).subspan(i * wpc, wpc);
}

std::uint8_t BinaryCodebook::bit(std::size_t i, std::size_t j) const {
  return static_cast<std::uint8_t>((code(i)[j / 64] >> (j % 64)) & 1U);
}

std::vector<std::uint64_t> pack_bits(std::span<const std::uint8_t> bits) {
  std::vector<std::uint64_t> words((bits.size() + 63) / 64, 0);
  for (std::size_t j = 0; j < bits.size(); ++j) {
    if (bits[j]) words[j / 64] |= std::uint64_t{1} << (j % 64);
  }
  return words;
}

std::vector<std::uint8_t> unpack_bits(std::span<const std::uint64_t> words, std::uint32_t k) {
  std::vector<std::uint8_t> bits(k);
  for (std::size_t j = 0; j < k; ++j) bits[j] = (words[j / 64] >> (j % 64)) & 1U;
  return bits;
}

// ---------------------------------------------------------------------------
// USDF

std::uint64_t feature_file_size(const FeatureSet& fs) {
  return kFeatureHeaderBytes + std::uint64_t{4} * fs.blocks() * fs.n() * fs.d() +
         (fs.has_labels() ? std::uint64_t{4} * fs.n() : 0);
}

std::vector<std::uint8_t> encode_features(const FeatureSet& fs) {
  ByteWriter w(feature_file_size(fs));
  w.magic(kFeatureMagic);
  w.u32(kFormatVersion);
  w.u32(fs.n());
  w.u32(fs.d());
  w.u32(fs.rotations());
  w.u8(fs.has_labels() ? 1 : 0);
  for (float v : fs.data()) w.f32(v);
  if (fs.has_labels()) {
    for (Label l : *fs.labels()) w.u32(l);
  }
  return w.take();
}

FeatureSet decode_features(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.magic(kFeatureMagic, "USDF");
  const std::size_t version_at = r.offset();
  check_version(r.u32("version"), version_at);
  const std::uint32_t n = r.u32("n");
  const std::uint32_t d = r.u32("d");
  const std::uint32_t rotations = r.u32("R");
  const std::size_t flag_at = r.offset();
  const std::uint8_t has_labels = r.u8("has_labels");
  if (has_labels > 1) throw FormatError("has_labels must be 0 or 1", flag_at);

  const std::uint64_t per_block = std::uint64_t{n} * d;
  const std::uint64_t count = per_block * (std::uint64_t{rotations} + 1);
  if (count > r.remaining() / 4) {
    // Locate the first block/row that runs off the end for the message.
    const std::uint64_t have = r.remaining() / 4;
    const std::uint64_t b = per_block == 0 ? 0 : have / per_block;
    const std::uint64_t row = (have % per_block) / d;
    throw FormatError("truncated payload: declared n=" + std::to_string(n) + " d=" +
                          std::to_string(d) + " R=" + std::to_string(rotations) +
                          " but data ends inside block " + std::to_string(b) + " row " +
                          std::to_string(row),
                      r.offset() + have * 4);
  }

  std::vector<float> data(count);
  for (std::uint64_t idx = 0; idx < count; ++idx) {
    const std::size_t at = r.offset();
    const float v = r.f32("feature value");
    if (!std::isfinite(v)) {
      const std::uint64_t b = idx / per_block;
      const std::uint64_t row = (idx % per_block) / d;
      throw FormatError("non-finite value at block " + std::to_string(b) + " row " +
                            std::to_string(row) + " col " + std::to_string(idx % d),
                        at);
    }
    data[idx] = v;
  }

  std::optional<std::vector<Label>> labels;
  if (has_labels) {
    labels.emplace(n);
    for (auto& l : *labels) l = r.u32("label");
  }
  if (r.remaining() != 0) {
    throw FormatError(std::to_string(r.remaining()) + " trailing bytes after payload", r.offset());
  }
  return FeatureSet(n, d, rotations, std::move(data), std::move(labels));
}

FeatureSet read_features(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error("missing file: " + path.string());
  return decode_features(slurp(path));
}

void write_features(const FeatureSet& fs, const std::filesystem::path& path) {
  spill(encode_features(fs), path);
}

// ---------------------------------------------------------------------------
// USDB

std::vector<std::uint8_t> encode_codebook(const BinaryCodebook& cb) {
  const std::size_t bpc = BinaryCodebook::bytes_per_code(cb.k());
  ByteWriter w(kCodebookHeaderBytes + cb.n() * (8 + bpc));
  w.magic(kCodebookMagic);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(cb.n()));
  w.u32(cb.k());
  for (std::size_t i = 0; i < cb.n(); ++i) {
    w.u64(cb.id(i));
    const auto code = cb.code(i);
    for (std::size_t byte = 0; byte < bpc; ++byte) {
      w.u8(static_cast<std::uint8_t>(code[byte / 8] >> (8 * (byte % 8))));
    }
  }
  return w.take();
}

BinaryCodebook decode_codebook(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.magic(kCodebookMagic, "USDB");
  const std::size_t version_at = r.offset();
  check_version(r.u32("version"), version_at);
  const std::uint32_t n = r.u32("n");
  const std::uint32_t k = r.u32("k");

  const std::size_t bpc = BinaryCodebook::bytes_per_code(k);
  const std::size_t wpc = BinaryCodebook::words_per_code(k);
  if (std::uint64_t{n} * (8 + bpc) > r.remaining()) {
    const std::uint64_t whole = r.remaining() / (8 + bpc);
    throw FormatError("truncated payload: declared n=" + std::to_string(n) +
                          " codes but data ends inside record " + std::to_string(whole),
                      r.offset() + whole * (8 + bpc));
  }

  std::vector<ItemId> ids(n);
  std::vector<std::uint64_t> words(std::size_t{n} * wpc, 0);
  const std::uint8_t last_mask =
      k % 8 == 0 ? 0 : static_cast<std::uint8_t>(0xFFU << (k % 8));
  for (std::size_t i = 0; i < n; ++i) {
    ids[i] = r.u64("id");
    for (std::size_t byte = 0; byte < bpc; ++byte) {
      const std::size_t at = r.offset();
      const std::uint8_t v = r.u8("code byte");
      if (byte + 1 == bpc && (v & last_mask)) {
        throw FormatError("nonzero pad bits in code " + std::to_string(i), at);
      }
      words[i * wpc + byte / 8] |= std::uint64_t{v} << (8 * (byte % 8));
    }
  }
  if (r.remaining() != 0) {
    throw FormatError(std::to_string(r.remaining()) + " trailing bytes after payload", r.offset());
  }
  try {
    return BinaryCodebook(k, std::move(ids), std::move(words));
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  }
}

BinaryCodebook read_codebook(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error("missing file: " + path.string());
  return decode_codebook(slurp(path));
}

void write_codebook(const BinaryCodebook& cb, const std::filesystem::path& path) {
  spill(encode_codebook(cb), path);
}

}  // namespace usdh
