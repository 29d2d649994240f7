// Copyright 2026 The clutterlab Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>

#include "clutterlab/dataset_io.hpp"
#include "clutterlab/fixtures.hpp"
#include "gtest/gtest.h"
#include "nlohmann/json.hpp"
#include "test_util.hpp"

namespace clutterlab {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(CLUTTERLAB_CLI_PATH) + " " + args + " 2>/dev/null";
  RunResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::map<std::string, std::string> directory_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    out[e.path().filename().string()] = read_file_text(e.path());
  }
  return out;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    FixtureSpec spec;
    spec.classes = 3;
    spec.images_per_class = 4;
    spec.width = spec.height = 96;
    spec.backgrounds = 1;
    write_fixture_dataset(spec, corpus_.path());
  }

  std::string corpus() const { return corpus_.path().string(); }

  testing::TempDir corpus_{"cli-corpus"};
  testing::TempDir work_{"cli-work"};
};

TEST_F(CliTest, SynthesizeIsByteIdenticalForASeed) {
  const std::string args = " --seed 42 synthesize --manifest " + corpus() + " --count 6";
  ASSERT_EQ(run_cli(args + " --out " + (work_ / "a").string()).exit_code, 0);
  ASSERT_EQ(run_cli(args + " --out " + (work_ / "b").string()).exit_code, 0);
  ASSERT_EQ(run_cli(args + " --workers 3 --out " + (work_ / "c").string()).exit_code, 0);
  const auto a = directory_bytes(work_ / "a");
  EXPECT_EQ(a, directory_bytes(work_ / "b"));
  EXPECT_EQ(a, directory_bytes(work_ / "c"));
  EXPECT_GE(a.size(), 6u * 3u);
}

TEST_F(CliTest, SynthesizeZeroScenesSucceeds) {
  const RunResult r = run_cli("--json synthesize --manifest " + corpus() +
                              " --count 0 --out " + (work_ / "z").string());
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(json::parse(r.out)["count"], 0);
}

TEST_F(CliTest, LargerGridsPlaceMoreObjects) {
  auto mean = [&](int grid) {
    const RunResult r = run_cli("--json --seed 5 synthesize --manifest " + corpus() +
                                " --count 30 --grid " + std::to_string(grid) +
                                " --out " + (work_ / ("g" + std::to_string(grid))).string());
    EXPECT_EQ(r.exit_code, 0);
    return json::parse(r.out)["mean_objects"].get<double>();
  };
  EXPECT_GT(mean(5), mean(3));
}

TEST_F(CliTest, AnnotatePolicySelectsRule) {
  FixtureSpec spec;
  spec.classes = 3;
  spec.images_per_class = 4;
  spec.width = spec.height = 96;
  write_fixture_dataset(spec, work_ / "single");
  const RunResult r = run_cli("--json annotate --input " + (work_ / "single").string() +
                              " --policy 1,0 --out " + (work_ / "ann").string());
  ASSERT_EQ(r.exit_code, 0);
  const json j = json::parse(r.out);
  ASSERT_EQ(j["samples"].size(), 12u);
  for (const auto& row : j["samples"]) EXPECT_EQ(row["rule"], "mask_only");
  EXPECT_EQ(Manifest::load(work_ / "ann").records.size(), 12u);
}

TEST_F(CliTest, AnnotateRejectsUnlabelledRecordsWithoutWriting) {
  // The shared corpus holds a background image with no class.
  const RunResult r = run_cli("annotate --input " + corpus() + " --out " +
                              (work_ / "partial").string());
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_FALSE(fs::exists(work_ / "partial" / "manifest.jsonl"));
}

TEST_F(CliTest, UnknownPredictorIsAValidationError) {
  const RunResult r = run_cli("annotate --input " + corpus() + " --predictor nope --out " +
                              (work_ / "bad").string());
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_FALSE(fs::exists(work_ / "bad" / "manifest.jsonl"));
}

TEST_F(CliTest, MissingInputIsAnIoError) {
  EXPECT_EQ(run_cli("annotate --input " + (work_ / "absent").string() + " --out " +
                    (work_ / "o").string())
                .exit_code,
            2);
}

TEST_F(CliTest, EvalOfTruthAgainstItselfIsOne) {
  const Manifest m = Manifest::load(corpus_.path());
  const fs::path labels = corpus_.path() / m.records.front().labels;
  const RunResult r =
      run_cli("--json eval --pred " + labels.string() + " --truth " + labels.string());
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_DOUBLE_EQ(json::parse(r.out)["mean"].get<double>(), 1.0);
}

TEST_F(CliTest, HeadShapesReportsQuarterResolution) {
  const RunResult r = run_cli("--json head-shapes --input 512x512 --width 256");
  ASSERT_EQ(r.exit_code, 0);
  const json j = json::parse(r.out);
  bool found = false;
  for (const auto& n : j["nodes"]) {
    if (n["id"] == "output_fsb") {
      EXPECT_EQ(n["shape"], json({128, 128, 256}));
      found = true;
    }
  }
  EXPECT_TRUE(found);
  EXPECT_EQ(j["param_count"], 2499584);
}

TEST_F(CliTest, BenchReportsEveryModeAndGrid) {
  const RunResult r = run_cli("--json bench --manifest " + corpus() +
                              " --mode both --grids 3,4 --reps 2");
  ASSERT_EQ(r.exit_code, 0);
  const json j = json::parse(r.out);
  EXPECT_EQ(j["rows"].size(), 4u);
  EXPECT_EQ(j["corpus_images"], 13);
}

TEST_F(CliTest, BadArgumentsExitOne) {
  EXPECT_EQ(run_cli("synthesize").exit_code, 1);
  EXPECT_EQ(run_cli("head-shapes --input 10x10").exit_code, 1);
}

}  // namespace
}  // namespace clutterlab
