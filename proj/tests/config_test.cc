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

#include "tabgen/config.h"

#include "gtest/gtest.h"
#include "tabgen/common.h"

namespace tabgen {
namespace {

using nlohmann::json;

TEST(RunConfigTest, DefaultsMaterialized) {
  const RunConfig c = RunConfig::FromJson(json::object());
  const json j = c.ToJson();
  EXPECT_DOUBLE_EQ(j["discovery"]["delta_thresh"], 0.3);
  EXPECT_EQ(j["discovery"]["k"], 10);
  EXPECT_DOUBLE_EQ(j["ppo"]["clip_epsilon"], 0.2);
  EXPECT_DOUBLE_EQ(j["ppo"]["alpha"], 1.0);
  EXPECT_EQ(j["ppo"]["minibatch_size"], 64);
  EXPECT_EQ(j["mle"]["patience"], 10);
  EXPECT_EQ(j["evaluation"]["folds"], 5);
  EXPECT_TRUE(j["evaluation"]["epsilon_priv"].is_null());
  EXPECT_DOUBLE_EQ(j["evaluation"]["faith_weights"]["fact"], 0.25);
}

TEST(RunConfigTest, RoundTripPreservesEveryField) {
  RunConfig c;
  c.seed = 42;
  c.discovery.k = 3;
  c.ppo.alpha = 0.0;
  c.discriminators.lambda = {0.0, 0.0, 0.0, 0.0};
  c.evaluation.epsilon_priv = 0.25;
  const RunConfig back = RunConfig::FromJson(c.ToJson());
  EXPECT_EQ(back.ToJson(), c.ToJson());
  EXPECT_EQ(back.Hash(), c.Hash());
}

TEST(RunConfigTest, UnknownKeysRejectedAtAnyDepth) {
  EXPECT_THROW(RunConfig::FromJson(json{{"sed", 1}}), ConfigError);
  EXPECT_THROW(RunConfig::FromJson(json{{"ppo", {{"alhpa", 1.0}}}}), ConfigError);
  EXPECT_THROW(RunConfig::FromJson(json{{"evaluation", {{"faith_weights", {{"x", 1}}}}}}),
               ConfigError);
}

TEST(RunConfigTest, InvalidValuesRejected) {
  EXPECT_THROW(RunConfig::FromJson(json{{"discovery", {{"delta_thresh", 1.5}}}}), ConfigError);
  EXPECT_THROW(RunConfig::FromJson(json{{"discovery", {{"k", 0}}}}), ConfigError);
  EXPECT_THROW(RunConfig::FromJson(json{{"ppo", {{"clip_epsilon", 1.0}}}}), ConfigError);
  EXPECT_THROW(RunConfig::FromJson(json{{"seed", "abc"}}), ConfigError);
  EXPECT_THROW(RunConfig::FromJson(json::array()), ConfigError);
}

TEST(RunConfigTest, HashTracksSettingsButNotOutputDir) {
  RunConfig a, b;
  EXPECT_EQ(a.Hash(), b.Hash());
  b.paths.output_dir = "/elsewhere";
  EXPECT_EQ(a.Hash(), b.Hash());
  b.seed = 1;
  EXPECT_NE(a.Hash(), b.Hash());
}

}  // namespace
}  // namespace tabgen
