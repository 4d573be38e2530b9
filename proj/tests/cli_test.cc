// Copyright 2026 The Tabgen Authors
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


#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "gtest/gtest.h"
#include "json.hpp"
#include "tabgen/common.h"
#include "tabgen/fixtures.h"

namespace tabgen {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("tabgen_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    input_ = (dir_ / "toy.csv").string();
    AtomicWriteFile(input_, ToyCsv(60, 0.2, 7));
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs the binary with TABGEN_OUTPUT_DIR unset unless `env` sets it.
  int Run(const std::string& args, const std::string& env = "") const {
    const std::string cmd = "env -u TABGEN_OUTPUT_DIR " + env + " " + TABGEN_CLI_PATH + " " + args +
                            " > " + (dir_ / "stdout.txt").string() + " 2> " +
                            (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string WriteConfig(const nlohmann::json& j) const {
    const std::string path = (dir_ / "config.json").string();
    AtomicWriteFile(path, j.dump());
    return path;
  }

  nlohmann::json TinyConfig() const {
    return {{"paths", {{"input", input_}, {"output_dir", (dir_ / "out").string()}}},
            {"policy", {{"embed", 4}, {"hidden", 6}, {"value_widths", {4}}}},
            {"mle", {{"max_epochs", 0}}},
            {"discriminators", {{"embed", 4}, {"hidden", 4}, {"widths", {4}}}}};
  }

  fs::path dir_;
  std::string input_;
};

TEST_F(CliTest, HelpSucceeds) {
  EXPECT_EQ(Run("--help"), 0);
  EXPECT_NE(ReadFile((dir_ / "stdout.txt").string()).find("TABGEN_OUTPUT_DIR"), std::string::npos);
}

TEST_F(CliTest, UsageErrorsExitOne) {
  EXPECT_EQ(Run(""), 1);
  EXPECT_EQ(Run("frobnicate"), 1);
  EXPECT_EQ(Run("--seed notanumber discover"), 1);
  EXPECT_EQ(Run("-c " + (dir_ / "absent.json").string() + " discover"), 1);
}

TEST_F(CliTest, UnknownConfigKeyExitsOne) {
  nlohmann::json j = TinyConfig();
  j["policy"]["hiden"] = 3;
  EXPECT_EQ(Run("-c " + WriteConfig(j) + " discover"), 1);
  EXPECT_NE(ReadFile((dir_ / "stderr.txt").string()).find("hiden"), std::string::npos);
}

TEST_F(CliTest, DataErrorsExitTwo) {
  EXPECT_EQ(Run("-c " + WriteConfig(TinyConfig()) + " -i " + (dir_ / "missing.csv").string() + " discover"), 2);
  AtomicWriteFile(input_, "a,b\n1,2\n1,3\n");
  EXPECT_EQ(Run("-c " + WriteConfig(TinyConfig()) + " discover"), 2);
}

TEST_F(CliTest, TrainBeforePretrainIsConfigError) {
  EXPECT_EQ(Run("-c " + WriteConfig(TinyConfig()) + " train"), 1);
}

TEST_F(CliTest, EnvironmentOverridesOutputDirectory) {
  const fs::path env_out = dir_ / "env_out";
  EXPECT_EQ(Run("-c " + WriteConfig(TinyConfig()) + " discover", "TABGEN_OUTPUT_DIR=" + env_out.string()), 0);
  EXPECT_TRUE(fs::exists(env_out / "pcrit.json"));
  EXPECT_FALSE(fs::exists(dir_ / "out" / "pcrit.json"));
  EXPECT_EQ(Run("-c " + WriteConfig(TinyConfig()) + " discover"), 0);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "pcrit.json"));
}

TEST_F(CliTest, UntrainedGeneratorAbortsWithThree) {
  const std::string c = "-c " + WriteConfig(TinyConfig());
  ASSERT_EQ(Run(c + " discover"), 0);
  ASSERT_EQ(Run(c + " pretrain"), 0);
  ASSERT_EQ(Run(c + " --epochs 0 train"), 0);
  // Random weights almost never emit a parseable record.
  EXPECT_EQ(Run(c + " generate -n 20"), 3);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "synthetic.csv"));
}

}  // namespace
}  // namespace tabgen
