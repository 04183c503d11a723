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

#include "test_support.hpp"
#include "usdh/error.hpp"
#include "usdh/manifest.hpp"

namespace usdh {
namespace {

TEST(Manifest, ParsesAndSkipsComments) {
  const KeyValues kv = parse_key_values("# header\n a = 1 \n\nb=x=y\r\n");
  EXPECT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv.at("a"), "1");
  EXPECT_EQ(kv.at("b"), "x=y");
}

TEST(Manifest, RejectsMalformedLines) {
  EXPECT_THROW(parse_key_values("novalue\n"), InvalidArgument);
  EXPECT_THROW(parse_key_values("=3\n"), InvalidArgument);
}

TEST(Manifest, FormatParseRoundTrip) {
  const KeyValues kv{{"angles", "-10,-5,5,10"}, {"model", "vgg19"}, {"n", "6"}};
  EXPECT_EQ(parse_key_values(format_key_values(kv)), kv);
}

TEST(Manifest, SidecarFile) {
  testing::TempDir dir;
  const auto features = dir / "f.usdf";
  EXPECT_FALSE(read_manifest(features).has_value());
  write_manifest({{"k", "v"}}, features);
  EXPECT_EQ(manifest_path(features), dir / "f.usdf.manifest");
  ASSERT_TRUE(read_manifest(features).has_value());
  EXPECT_EQ(read_manifest(features)->at("k"), "v");
}

TEST(Manifest, RealLists) {
  EXPECT_EQ(parse_real_list("1, 1/2,1/4 ,0.125"), (std::vector<double>{1, 0.5, 0.25, 0.125}));
  EXPECT_TRUE(parse_real_list("").empty());
  EXPECT_THROW(parse_real_list("1,x"), InvalidArgument);
  EXPECT_THROW(parse_real_list("1/0"), InvalidArgument);
  const std::vector<double> v{-10, 0.1, 1.0 / 3.0};
  EXPECT_EQ(parse_real_list(format_real_list(v)), v);
  EXPECT_EQ(format_real(0.1), "0.1");
}

}  // namespace
}  // namespace usdh
