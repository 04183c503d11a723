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

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "test_support.hpp"
#include "usdh/error.hpp"
#include "usdh/feature_io.hpp"

namespace usdh {
namespace {

using testing::TempDir;

FeatureSet two_by_three() {
  return FeatureSet(2, 3, 0, {1, 2, 3, 4, 5, 6});
}

TEST(FeatureIo, SmallFileEchoesValues) {
  TempDir dir;
  write_features(two_by_three(), dir / "a.usdf");
  const FeatureSet fs = read_features(dir / "a.usdf");
  EXPECT_EQ(fs.n(), 2u);
  EXPECT_EQ(fs.d(), 3u);
  EXPECT_EQ(fs.rotations(), 0u);
  EXPECT_FALSE(fs.has_labels());
  const auto r1 = fs.row(0, 1);
  EXPECT_EQ(r1[0], 4.0f);
  EXPECT_EQ(r1[1], 5.0f);
  EXPECT_EQ(r1[2], 6.0f);
  EXPECT_EQ(fs, two_by_three());
}

TEST(FeatureIo, HeaderLayoutIsLittleEndian) {
  const auto bytes = encode_features(FeatureSet(2, 3, 1, std::vector<float>(12, 0.5f),
                                                std::vector<Label>{7, 9}));
  ASSERT_GE(bytes.size(), kFeatureHeaderBytes);
  EXPECT_EQ(std::memcmp(bytes.data(), "USDF", 4), 0);
  auto u32 = [&](std::size_t at) {
    return std::uint32_t{bytes[at]} | std::uint32_t{bytes[at + 1]} << 8 |
           std::uint32_t{bytes[at + 2]} << 16 | std::uint32_t{bytes[at + 3]} << 24;
  };
  EXPECT_EQ(u32(4), kFormatVersion);
  EXPECT_EQ(u32(8), 2u);
  EXPECT_EQ(u32(12), 3u);
  EXPECT_EQ(u32(16), 1u);
  EXPECT_EQ(bytes[20], 1);
  EXPECT_EQ(u32(bytes.size() - 8), 7u);
  EXPECT_EQ(u32(bytes.size() - 4), 9u);
}

TEST(FeatureIo, FileLengthWithRotationBlocks) {
  TempDir dir;
  std::mt19937_64 rng(3);
  const FeatureSet fs = testing::random_features(5, 4, 2, true, rng);
  write_features(fs, dir / "r.usdf");
  const auto expected = kFeatureHeaderBytes + 3 * 5 * 4 * 4 + 5 * 4;
  EXPECT_EQ(std::filesystem::file_size(dir / "r.usdf"), expected);
  EXPECT_EQ(feature_file_size(fs), expected);
  EXPECT_EQ(read_features(dir / "r.usdf"), fs);
}

TEST(FeatureIo, EmptySetRoundTrips) {
  TempDir dir;
  const FeatureSet empty(0, 8, 0, {});
  write_features(empty, dir / "e.usdf");
  EXPECT_EQ(std::filesystem::file_size(dir / "e.usdf"), kFeatureHeaderBytes);
  EXPECT_EQ(read_features(dir / "e.usdf"), empty);
}

TEST(FeatureIo, RandomRoundTrip) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = static_cast<std::uint32_t>(rng() % 20);
    const auto d = static_cast<std::uint32_t>(1 + rng() % 10);
    const auto r = static_cast<std::uint32_t>(rng() % 3);
    const FeatureSet fs = testing::random_features(n, d, r, trial % 2 == 0, rng);
    EXPECT_EQ(decode_features(encode_features(fs)), fs);
  }
}

TEST(FeatureIo, TruncatedPayloadIsRejected) {
  auto bytes = encode_features(FeatureSet(5, 2, 0, std::vector<float>(10, 1.0f)));
  // Declared n=5, only 4 rows present.
  bytes.resize(bytes.size() - 2 * 4);
  try {
    decode_features(bytes);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("row 4"), std::string::npos) << e.what();
    EXPECT_TRUE(e.has_offset());
    EXPECT_EQ(e.offset(), kFeatureHeaderBytes + 4 * 2 * 4);
  }
}

TEST(FeatureIo, TruncatedHeaderIsRejected) {
  auto bytes = encode_features(two_by_three());
  bytes.resize(10);
  EXPECT_THROW(decode_features(bytes), FormatError);
}

TEST(FeatureIo, NonFiniteValueNamesRow) {
  auto bytes = encode_features(two_by_three());
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(bytes.data() + kFeatureHeaderBytes + 3 * 4, &nan, 4);  // row 1, col 0
  try {
    decode_features(bytes);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
  }
}

TEST(FeatureIo, ConstructorRejectsNonFinite) {
  EXPECT_THROW(FeatureSet(1, 2, 0, {1.0f, std::numeric_limits<float>::infinity()}), InvalidArgument);
}

TEST(FeatureIo, ConstructorRejectsShapeMismatch) {
  EXPECT_THROW(FeatureSet(2, 3, 0, std::vector<float>(5)), ShapeError);
  EXPECT_THROW(FeatureSet(2, 3, 1, std::vector<float>(6)), ShapeError);
  EXPECT_THROW(FeatureSet(2, 1, 0, {1, 2}, std::vector<Label>{1}), ShapeError);
}

TEST(FeatureIo, BadMagicVersionAndFlag) {
  auto bytes = encode_features(two_by_three());
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_features(bad), FormatError);
  bad = bytes;
  bad[4] = 2;
  EXPECT_THROW(decode_features(bad), FormatError);
  bad = bytes;
  bad[20] = 2;
  EXPECT_THROW(decode_features(bad), FormatError);
  bad = bytes;
  bad.push_back(0);
  EXPECT_THROW(decode_features(bad), FormatError);
}

TEST(FeatureIo, MissingFile) {
  EXPECT_THROW(read_features("/nonexistent/x.usdf"), Error);
}

TEST(FeatureIo, SubsetKeepsBlocksAndLabels) {
  const FeatureSet fs(3, 1, 1, {0, 1, 2, 10, 11, 12}, std::vector<Label>{5, 6, 7});
  const std::vector<std::size_t> rows{2, 0};
  const FeatureSet sub = fs.subset(rows);
  EXPECT_EQ(sub, FeatureSet(2, 1, 1, {2, 0, 12, 10}, std::vector<Label>{7, 5}));
  const Matrix m = fs.gather(rows, 1);
  EXPECT_EQ(m(0, 0), 12.0);
  EXPECT_EQ(m(1, 0), 10.0);
}

TEST(Codebook, TenBitExampleBytes) {
  const std::vector<std::uint8_t> bits{1, 0, 1, 0, 1, 0, 1, 0, 1, 0};
  const BinaryCodebook cb(10, {0}, pack_bits(bits));
  const auto bytes = encode_codebook(cb);
  ASSERT_EQ(bytes.size(), kCodebookHeaderBytes + 8 + 2);
  EXPECT_EQ(bytes[kCodebookHeaderBytes + 8], 0x55);
  EXPECT_EQ(bytes[kCodebookHeaderBytes + 9], 0x01);
  EXPECT_EQ(unpack_bits(cb.code(0), 10), bits);
}

TEST(Codebook, NonzeroPadBitIsRejected) {
  const BinaryCodebook cb(10, {0}, pack_bits(std::vector<std::uint8_t>(10, 1)));
  auto bytes = encode_codebook(cb);
  bytes.back() |= 0x80;
  try {
    decode_codebook(bytes);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("pad"), std::string::npos) << e.what();
  }
  EXPECT_THROW(BinaryCodebook(10, {0}, {0x400}), InvalidArgument);
}

TEST(Codebook, DuplicateIdsRejected) {
  EXPECT_THROW(BinaryCodebook(8, {3, 3}, {1, 2}), InvalidArgument);
  EXPECT_THROW(BinaryCodebook(8, {1, 2}, {1}), ShapeError);
}

TEST(Codebook, RandomRoundTripThroughFile) {
  TempDir dir;
  std::mt19937_64 rng(5);
  for (std::uint32_t k : {1u, 7u, 8u, 16u, 33u, 64u, 65u, 130u}) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<ItemId> ids(n);
    std::vector<std::uint64_t> words;
    for (std::size_t i = 0; i < n; ++i) {
      ids[i] = rng();
      std::vector<std::uint8_t> bits(k);
      for (auto& b : bits) b = rng() & 1;
      const auto packed = pack_bits(bits);
      words.insert(words.end(), packed.begin(), packed.end());
    }
    const BinaryCodebook cb(k, ids, words);
    write_codebook(cb, dir / "c.usdb");
    EXPECT_EQ(std::filesystem::file_size(dir / "c.usdb"),
              kCodebookHeaderBytes + n * (8 + BinaryCodebook::bytes_per_code(k)));
    EXPECT_EQ(read_codebook(dir / "c.usdb"), cb) << "k=" << k;
  }
}

TEST(Codebook, TruncatedFile) {
  const BinaryCodebook cb(16, {0, 1}, {3, 4});
  auto bytes = encode_codebook(cb);
  bytes.pop_back();
  EXPECT_THROW(decode_codebook(bytes), FormatError);
}

}  // namespace
}  // namespace usdh
