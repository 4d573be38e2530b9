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

#ifndef TABGEN_CONFIG_H_
#define TABGEN_CONFIG_H_

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"
#include "tabgen/discriminators.h"
#include "tabgen/evaluation.h"
#include "tabgen/policy.h"
#include "tabgen/rl.h"

namespace tabgen {

struct PathsConfig {
  std::string input;
  std::string schema;  // optional schema-hints file
  std::string rules;   // optional user rule file
  std::string output_dir = "tabgen_out";
};

struct DiscoveryConfig {
  double delta_thresh = 0.3;
  int k = 10;
};

struct EvaluationConfig {
  int bins = kDefaultBins;
  // Unset selects the leave-one-out 5th-percentile radius.
  std::optional<double> epsilon_priv;
  int folds = 5;
  FaithWeights weights;
};

struct RunConfig {
  PathsConfig paths;
  DiscoveryConfig discovery;
  PolicyConfig policy;
  MleConfig mle;
  PpoConfig ppo;
  DiscriminatorConfig discriminators;
  EvaluationConfig evaluation;
  // Fraction of the input held out from training for utility scoring.
  double holdout_fraction = 0.2;
  uint64_t seed = 0;

  // Every field, defaults included.
  nlohmann::json ToJson() const;
  // Missing keys take defaults; unknown keys and invalid values throw
  // ConfigError.
  static RunConfig FromJson(const nlohmann::json& j);
  void Validate() const;
  // FNV-1a of the canonical JSON dump, excluding paths.output_dir.
  uint64_t Hash() const;
};

RunConfig LoadRunConfig(const std::string& path);

}  // namespace tabgen

#endif  // TABGEN_CONFIG_H_
