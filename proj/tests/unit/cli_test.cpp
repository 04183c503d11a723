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

#include <fstream>
#include <sstream>

#include "test_support.hpp"
#include "usdh/cli.hpp"
#include "usdh/feature_io.hpp"
#include "usdh/hash_head.hpp"
#include "usdh/manifest.hpp"

namespace usdh {
namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run usdh_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string p(const testing::TempDir& dir, const std::string& f) { return (dir / f).string(); }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ASSERT_EQ(usdh_cli({"synth", "--n", "90", "--d", "8", "--out", p(dir, "db.usdf"), "--queries",
                        "15", "--query-out", p(dir, "q.usdf")})
                  .code,
              0);
  }
  testing::TempDir dir;
};

TEST(Cli, UsageErrors) {
  EXPECT_EQ(usdh_cli({}).code, cli::kExitUsage);
  EXPECT_EQ(usdh_cli({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(usdh_cli({"train", "--bogus", "1"}).code, cli::kExitUsage);
  EXPECT_EQ(usdh_cli({"train", "--out", "x"}).code, cli::kExitUsage);
  EXPECT_EQ(usdh_cli({"gradcheck", "--loss", "j9"}).code, cli::kExitUsage);
  EXPECT_EQ(usdh_cli({"bench", "--n", "ten"}).code, cli::kExitUsage);
  EXPECT_EQ(usdh_cli({"train", "--help"}).code, cli::kExitOk);
}

TEST(Cli, MissingInputIsRuntimeError) {
  const auto r = usdh_cli({"train", "--features", "/nonexistent.usdf", "--out", "/tmp/x.usdw"});
  EXPECT_EQ(r.code, cli::kExitRuntime);
  EXPECT_NE(r.err.find("missing file"), std::string::npos) << r.err;
}

TEST_F(CliTest, SynthWritesManifestAndSplit) {
  const auto db = read_features(dir / "db.usdf");
  const auto q = read_features(dir / "q.usdf");
  EXPECT_EQ(db.n(), 75u);
  EXPECT_EQ(q.n(), 15u);
  EXPECT_TRUE(db.has_labels());
  const auto m = read_manifest(dir / "db.usdf");
  ASSERT_TRUE(m.has_value());
  EXPECT_EQ(m->at("seed"), "42");
  EXPECT_EQ(m->at("role"), "database");
}

TEST_F(CliTest, ZeroEpochTrainWritesInit) {
  const auto r = usdh_cli({"train", "--features", p(dir, "db.usdf"), "--out", p(dir, "h.usdw"),
                           "--bits", "16", "--epochs-stage1", "0", "--epochs-stage2", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_head(dir / "h.usdw"), init_head(16, 8, 42));
  EXPECT_NE(r.out.find("# bits=16"), std::string::npos);
  EXPECT_NE(r.out.find("# lr=0.001"), std::string::npos);
}

TEST_F(CliTest, ConfigPrecedence) {
  {
    std::ofstream cfg(dir / "train.cfg");
    cfg << "# test config\nbits=24\nlr=0.0005\nepochs_stage1=3\nepochs_stage2=0\n";
  }
  const auto r = usdh_cli({"train", "--config", p(dir, "train.cfg"), "--features",
                           p(dir, "db.usdf"), "--out", p(dir, "h.usdw"), "--lr", "0.0002",
                           "--log", p(dir, "train.log")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("# bits=24"), std::string::npos);
  EXPECT_NE(r.out.find("# lr=0.0002"), std::string::npos);
  EXPECT_NE(r.out.find("# momentum=0"), std::string::npos);
  EXPECT_EQ(read_head(dir / "h.usdw").k(), 24u);
  std::ifstream log(dir / "train.log");
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) {
    EXPECT_EQ(line.rfind("epoch=", 0), 0u) << line;
    EXPECT_NE(line.find(" total="), std::string::npos);
    ++lines;
  }
  EXPECT_EQ(lines, 3);

  std::ofstream bad(dir / "bad.cfg");
  bad << "bits=8\nwhatever=1\n";
  bad.close();
  EXPECT_EQ(usdh_cli({"train", "--config", p(dir, "bad.cfg"), "--features", p(dir, "db.usdf"),
                      "--out", p(dir, "h.usdw")})
                .code,
            cli::kExitUsage);
}

TEST_F(CliTest, StageTwoWithoutRotationsFails) {
  const auto r = usdh_cli({"train", "--features", p(dir, "db.usdf"), "--out", p(dir, "h.usdw"),
                           "--epochs-stage1", "1"});
  EXPECT_EQ(r.code, cli::kExitRuntime);
  EXPECT_NE(r.err.find("R=0"), std::string::npos) << r.err;
}

TEST_F(CliTest, TrainTwiceIsByteIdentical) {
  for (const char* name : {"a.usdw", "b.usdw"}) {
    ASSERT_EQ(usdh_cli({"train", "--features", p(dir, "db.usdf"), "--out", p(dir, name),
                        "--epochs-stage1", "5", "--epochs-stage2", "0", "--log",
                        p(dir, "log.txt")})
                  .code,
              0);
  }
  EXPECT_EQ(testing::slurp(dir / "a.usdw"), testing::slurp(dir / "b.usdw"));
}

TEST_F(CliTest, EncodeConstantHeadGivesAllOnes) {
  write_head(HashHeadParams{Matrix(12, 8, 0.0), std::vector<double>(12, 1.0)}, dir / "one.usdw");
  ASSERT_EQ(usdh_cli({"encode", "--features", p(dir, "db.usdf"), "--params", p(dir, "one.usdw"),
                      "--out", p(dir, "one.usdb")})
                .code,
            0);
  const auto cb = read_codebook(dir / "one.usdb");
  EXPECT_EQ(cb.n(), 75u);
  EXPECT_EQ(cb.k(), 12u);
  for (std::size_t i = 0; i < cb.n(); ++i) {
    EXPECT_EQ(cb.id(i), i);
    for (std::size_t j = 0; j < 12; ++j) EXPECT_EQ(cb.bit(i, j), 1);
  }
}

TEST_F(CliTest, EncodeDimensionMismatch) {
  write_head(init_head(4, 5, 1), dir / "h5.usdw");
  EXPECT_EQ(usdh_cli({"encode", "--features", p(dir, "db.usdf"), "--params", p(dir, "h5.usdw"),
                      "--out", p(dir, "x.usdb")})
                .code,
            cli::kExitRuntime);
}

TEST_F(CliTest, EvalAllSameLabelGivesOne) {
  // The constant head puts every item at distance 0, and one-cluster synth
  // data gives every item the same label.
  ASSERT_EQ(usdh_cli({"synth", "--clusters", "1", "--n", "30", "--d", "4", "--out",
                      p(dir, "one.usdf")})
                .code,
            0);
  write_head(HashHeadParams{Matrix(8, 4, 0.0), std::vector<double>(8, 1.0)}, dir / "c.usdw");
  ASSERT_EQ(usdh_cli({"encode", "--features", p(dir, "one.usdf"), "--params", p(dir, "c.usdw"),
                      "--out", p(dir, "one.usdb")})
                .code,
            0);
  const auto r = usdh_cli({"eval", "--index", p(dir, "one.usdb"), "--queries", p(dir, "one.usdb"),
                           "--labels", p(dir, "one.usdf"), "--query-labels", p(dir, "one.usdf"),
                           "--K", "30", "--csv", p(dir, "ap.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("map_at_k=1.000000000"), std::string::npos) << r.out;
  std::ifstream csv(dir / "ap.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "query_id,ap");
}

TEST_F(CliTest, QueryByCodeAndByFeatures) {
  ASSERT_EQ(usdh_cli({"encode", "--lsh", "--bits", "8", "--features", p(dir, "db.usdf"), "--out",
                      p(dir, "l.usdb")})
                .code,
            0);
  const auto cb = read_codebook(dir / "l.usdb");
  std::string code;
  for (std::size_t j = 0; j < 8; ++j) code += cb.bit(3, j) ? '1' : '0';
  const auto r = usdh_cli({"query", "--index", p(dir, "l.usdb"), "--code", code, "--k", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("rank=1 id="), std::string::npos);
  EXPECT_NE(r.out.find("distance=0"), std::string::npos);
  EXPECT_EQ(usdh_cli({"query", "--index", p(dir, "l.usdb"), "--code", "0101", "--k", "2"}).code,
            cli::kExitRuntime);
  EXPECT_EQ(usdh_cli({"query", "--index", p(dir, "l.usdb"), "--code", "01x1"}).code,
            cli::kExitUsage);

  write_head(init_head(8, 8, 3), dir / "h.usdw");
  ASSERT_EQ(usdh_cli({"encode", "--features", p(dir, "db.usdf"), "--params", p(dir, "h.usdw"),
                      "--out", p(dir, "h.usdb")})
                .code,
            0);
  const auto f = usdh_cli({"query", "--index", p(dir, "h.usdb"), "--features", p(dir, "db.usdf"),
                           "--params", p(dir, "h.usdw"), "--row", "4", "--k", "1"});
  ASSERT_EQ(f.code, 0) << f.err;
  EXPECT_NE(f.out.find("query=4 rank=1"), std::string::npos) << f.out;
  EXPECT_NE(f.out.find("distance=0"), std::string::npos) << f.out;
}

TEST(Cli, GradcheckSmoothTerm) {
  const auto r = usdh_cli({"gradcheck", "--loss", "j3", "--trials", "100"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto at = r.out.find("max_rel_error=");
  ASSERT_NE(at, std::string::npos);
  EXPECT_LT(std::stod(r.out.substr(at + 14)), 1e-6);
}

TEST(Cli, GradcheckFailsOnTightTolerance) {
  EXPECT_EQ(usdh_cli({"gradcheck", "--loss", "j1", "--trials", "20", "--tolerance", "0"}).code,
            cli::kExitRuntime);
}

TEST(Cli, BenchReportsThroughputAndParity) {
  const auto r = usdh_cli({"bench", "--n", "20000", "--bits", "64", "--queries", "20"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto at = r.out.find("codes_per_second=");
  ASSERT_NE(at, std::string::npos);
  EXPECT_GT(std::stod(r.out.substr(at + 17)), 0.0);
  EXPECT_NE(r.out.find("parity=ok"), std::string::npos);
}

}  // namespace
}  // namespace usdh
