/*
 * Copyright 2026 The detcfg Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "detcfg/cli.hpp"
#include "detcfg/detcfg.hpp"
#include "support/synthetic.hpp"

namespace detcfg {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("detcfg_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

void write(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string dataset_csv(const Dataset& ds) {
  std::ostringstream os;
  write_csv_annotations(ds, os);
  return os.str();
}

int cli(std::vector<std::string> args, std::string* out = nullptr, std::string* err = nullptr) {
  args.insert(args.begin(), "detcfg");
  std::ostringstream o, e;
  const int code = run_cli(args, o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return code;
}

TEST(Config, Defaults) {
  const Config c = parse_config("");
  EXPECT_EQ(c.levels.size(), 5u);
  EXPECT_EQ(c.penalty_factor, 0.0001);
  EXPECT_EQ(c.weighting_factor, -1.0);
  EXPECT_EQ(c.positive_iou, 0.5);
  EXPECT_EQ(c.negative_iou, 0.4);
  EXPECT_EQ(c.eval_iou, 0.3);
  EXPECT_FALSE(c.seed.has_value());
}

TEST(Config, OverridesAndComments) {
  const Config c = parse_config(
      "# comment\nlevels = P4:16, P5:32\nseed = 12  # trailing\nsampling_mode = biased\n"
      "biased_clusters = 0,2\nlog_base = 2\n");
  EXPECT_EQ(c.levels.size(), 2u);
  EXPECT_EQ(c.levels[1].stride, 32);
  EXPECT_EQ(c.seed, 12u);
  EXPECT_EQ(c.sampling_mode, SamplingMode::Biased);
  EXPECT_EQ(c.biased_clusters, (std::vector<int>{0, 2}));
  EXPECT_EQ(c.log_base, LogBase::Two);
}

TEST(Config, UnknownKeyNamed) {
  try {
    parse_config("penalty = 3\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("'penalty'"), std::string::npos);
  }
}

TEST(Config, CrossFieldValidation) {
  EXPECT_THROW(parse_config("positive_iou = 0.3\nnegative_iou = 0.4\n"), ConfigError);
  EXPECT_THROW(parse_config("anchor_k_min = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("seed = abc\n"), ConfigError);
}

TEST(Config, RelativePathsResolveAgainstConfigDir) {
  const Config c = parse_config("annotations = data/a.json\n", "/srv/run");
  EXPECT_EQ(c.annotations, "/srv/run/data/a.json");
}

TEST(Config, TextRoundTrip) {
  Config c = parse_config("levels = P3:8\nnum_anchors = 3\npca_components = 4\nseed = 5\n"
                          "force_match = true\nbiased_clusters = 1\n");
  EXPECT_EQ(parse_config(config_to_text(c)), c);
  EXPECT_EQ(parse_config(config_to_text(Config{})), Config{});
}

class CliFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    ::unsetenv(kSeedEnvVar);
    write(dir / "boxes.csv", dataset_csv(testing::planted_two_mode(4, 200)));
  }
  TempDir dir;
};

TEST_F(CliFixture, StatsRun) {
  std::string out;
  ASSERT_EQ(cli({"stats", "--annotations", (dir / "boxes.csv").string(), "--out",
                 (dir / "o").string()},
                &out),
            0);
  EXPECT_NE(out.find("annotations: 200"), std::string::npos);
  const auto j = nlohmann::json::parse(slurp(dir / "o" / "report.json"));
  EXPECT_EQ(j["stages"]["stats"]["annotations"], 200);
  EXPECT_TRUE(fs::exists(dir / "o" / "config.txt"));
  EXPECT_FALSE(fs::exists(dir / "o" / "report.json.tmp"));
}

TEST_F(CliFixture, ExitCodes) {
  std::string err;
  EXPECT_EQ(cli({"bogus"}, nullptr, &err), 1);
  EXPECT_EQ(cli({"stats", "--annotations", (dir / "missing.json").string(), "--out",
                 (dir / "o").string()},
                nullptr, &err),
            1);
  EXPECT_EQ(cli({"anchors", "--annotations", (dir / "boxes.csv").string(), "--out",
                 (dir / "o").string()},
                nullptr, &err),
            1);
  EXPECT_NE(err.find("seed"), std::string::npos);
  EXPECT_EQ(cli({"stats", "--annotations", (dir / "boxes.csv").string(), "--positive-iou", "2"},
                nullptr, &err),
            1);
}

TEST_F(CliFixture, SeedFromEnvironment) {
  ::setenv(kSeedEnvVar, "3", 1);
  EXPECT_EQ(cli({"anchors", "--annotations", (dir / "boxes.csv").string(), "--out",
                 (dir / "o").string()}),
            0);
  ::unsetenv(kSeedEnvVar);
  EXPECT_NE(slurp(dir / "o" / "config.txt").find("seed = 3"), std::string::npos);
}

TEST_F(CliFixture, ConfigFileThenFlags) {
  write(dir / "run.cfg", "annotations = boxes.csv\nseed = 9\nlevels = P3:8,P5:32\n");
  ASSERT_EQ(cli({"featuremap", "--config", (dir / "run.cfg").string(), "--levels", "P4:16",
                 "--out", (dir / "o").string()}),
            0);
  const auto j = nlohmann::json::parse(slurp(dir / "o" / "report.json"));
  EXPECT_EQ(j["config"]["levels"], "P4:16");
  EXPECT_EQ(j["config"]["seed"], "9");
}

TEST_F(CliFixture, PipelineCouplesAnchorCountIntoLevelScoring) {
  ASSERT_EQ(cli({"pipeline", "--annotations", (dir / "boxes.csv").string(), "--seed", "2",
                 "--per-cluster", "2", "--out", (dir / "o").string()}),
            0);
  const auto j = nlohmann::ordered_json::parse(slurp(dir / "o" / "report.json"));
  const auto& st = j["stages"];
  EXPECT_EQ(st["anchors"]["k"], 2);
  EXPECT_EQ(st["featuremap"]["num_anchors"], 2);
  std::vector<std::string> order;
  for (const auto& [k, v] : st.items()) order.push_back(k);
  EXPECT_EQ(order, (std::vector<std::string>{"stats", "anchors", "featuremap", "match", "sample"}));
  for (const char* f : {"anchors.csv", "plotdata_silhouette.csv", "plotdata_scores.csv",
                        "sampling_plan.txt", "sampling_summary.json",
                        "plotdata_image_silhouette.csv", "plotdata_clusters.csv"})
    EXPECT_TRUE(fs::exists(dir / "o" / f)) << f;
  EXPECT_EQ(slurp(dir / "o" / "plotdata_scores.csv").substr(0, 19), "level,stride,score\n");
  EXPECT_EQ(slurp(dir / "o" / "plotdata_clusters.csv").substr(0, 22), "cluster,size,selected\n");
  // Emitted anchors feed back into the match command.
  ASSERT_EQ(cli({"match", "--annotations", (dir / "boxes.csv").string(), "--anchors",
                 (dir / "o" / "anchors.csv").string(), "--out", (dir / "m").string()}),
            0);
}

TEST_F(CliFixture, IdenticalRunsAreByteIdenticalApartFromTiming) {
  for (const char* o : {"r1", "r2"})
    ASSERT_EQ(cli({"pipeline", "--annotations", (dir / "boxes.csv").string(), "--seed", "6",
                   "--out", (dir / o).string()}),
              0);
  auto a = nlohmann::ordered_json::parse(slurp(dir / "r1" / "report.json"));
  auto b = nlohmann::ordered_json::parse(slurp(dir / "r2" / "report.json"));
  a.erase("timing");
  b.erase("timing");
  EXPECT_EQ(a.dump(), b.dump());
  for (const auto& e : fs::directory_iterator(dir / "r1")) {
    if (e.path().filename() == "report.json") continue;
    EXPECT_EQ(slurp(e.path()), slurp(dir / "r2" / e.path().filename())) << e.path();
  }
}

TEST_F(CliFixture, RerunOverwritesCleanly) {
  for (int i = 0; i < 2; ++i)
    ASSERT_EQ(cli({"stats", "--annotations", (dir / "boxes.csv").string(), "--out",
                   (dir / "o").string()}),
              0);
  for (const auto& e : fs::directory_iterator(dir / "o"))
    EXPECT_NE(e.path().extension(), ".tmp");
}

TEST_F(CliFixture, EvalCommand) {
  const Dataset ds = load_dataset((dir / "boxes.csv").string());
  std::string det = std::string(kDetectionCsvHeader) + "\n";
  const auto& img = ds.images.front();
  const auto& b = img.annotations.front().box;
  det += img.id + "," + csv::format_double(b.x) + "," + csv::format_double(b.y) + "," +
         csv::format_double(b.w) + "," + csv::format_double(b.h) + ",0.9,bird\n";
  write(dir / "det.csv", det);
  std::string out;
  ASSERT_EQ(cli({"eval", "--annotations", (dir / "boxes.csv").string(), "--detections",
                 (dir / "det.csv").string(), "--out", (dir / "o").string()},
                &out),
            0);
  const auto j = nlohmann::json::parse(slurp(dir / "o" / "report.json"));
  EXPECT_DOUBLE_EQ(j["stages"]["eval"]["map_percent"].get<double>(), 100.0 * 1.0 / 200.0);
}

TEST(Report, AnchorsCsvRoundTrip) {
  const auto set = make_anchor_set({{12.5, 20}, {40, 33.25}});
  EXPECT_EQ(parse_anchors_csv(anchors_csv(set)).sizes, set.sizes);
  EXPECT_THROW(parse_anchors_csv("w,h\n0,3\n"), StructuralError);
}

}  // namespace
}  // namespace detcfg
