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

#include "tabgen/common.h"

namespace tabgen {

using nlohmann::json;

namespace {

void RejectUnknownKeys(const json& given, const json& reference, const std::string& where) {
  if (!given.is_object()) return;
  for (const auto& [key, value] : given.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!reference.contains(key)) throw ConfigError("unknown config key: " + path);
    if (value.is_object() && reference[key].is_object()) RejectUnknownKeys(value, reference[key], path);
  }
}

template <typename T>
T Section(const json& j, const char* key) {
  return j.contains(key) ? T::FromJson(j.at(key)) : T{};
}

}  // namespace

json RunConfig::ToJson() const {
  return {{"paths",
           {{"input", paths.input},
            {"schema", paths.schema},
            {"rules", paths.rules},
            {"output_dir", paths.output_dir}}},
          {"discovery", {{"delta_thresh", discovery.delta_thresh}, {"k", discovery.k}}},
          {"policy", policy.ToJson()},
          {"mle", mle.ToJson()},
          {"ppo", ppo.ToJson()},
          {"discriminators", discriminators.ToJson()},
          {"evaluation",
           {{"bins", evaluation.bins},
            {"epsilon_priv", evaluation.epsilon_priv ? json(*evaluation.epsilon_priv) : json(nullptr)},
            {"folds", evaluation.folds},
            {"faith_weights", evaluation.weights.ToJson()}}},
          {"holdout_fraction", holdout_fraction},
          {"seed", seed}};
}

RunConfig RunConfig::FromJson(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RejectUnknownKeys(j, RunConfig{}.ToJson(), "");
  RunConfig c;
  try {
    if (j.contains("paths")) {
      const json& p = j["paths"];
      c.paths.input = p.value("input", c.paths.input);
      c.paths.schema = p.value("schema", c.paths.schema);
      c.paths.rules = p.value("rules", c.paths.rules);
      c.paths.output_dir = p.value("output_dir", c.paths.output_dir);
    }
    if (j.contains("discovery")) {
      const json& d = j["discovery"];
      c.discovery.delta_thresh = d.value("delta_thresh", c.discovery.delta_thresh);
      c.discovery.k = d.value("k", c.discovery.k);
    }
    c.policy = Section<PolicyConfig>(j, "policy");
    c.mle = Section<MleConfig>(j, "mle");
    c.ppo = Section<PpoConfig>(j, "ppo");
    c.discriminators = Section<DiscriminatorConfig>(j, "discriminators");
    if (j.contains("evaluation")) {
      const json& e = j["evaluation"];
      c.evaluation.bins = e.value("bins", c.evaluation.bins);
      if (e.contains("epsilon_priv") && !e["epsilon_priv"].is_null()) {
        c.evaluation.epsilon_priv = e["epsilon_priv"].get<double>();
      }
      c.evaluation.folds = e.value("folds", c.evaluation.folds);
      if (e.contains("faith_weights")) c.evaluation.weights = FaithWeights::FromJson(e["faith_weights"]);
    }
    c.holdout_fraction = j.value("holdout_fraction", c.holdout_fraction);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  }
  c.Validate();
  return c;
}

void RunConfig::Validate() const {
  if (!(discovery.delta_thresh > 0.0 && discovery.delta_thresh < 1.0)) {
    throw ConfigError("discovery.delta_thresh must lie in (0, 1)");
  }
  if (discovery.k < 1) throw ConfigError("discovery.k must be >= 1");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw ConfigError("holdout_fraction must lie in (0, 1)");
  }
  if (evaluation.bins < 1) throw ConfigError("evaluation.bins must be >= 1");
  if (evaluation.folds < 1) throw ConfigError("evaluation.folds must be >= 1");
  if (evaluation.epsilon_priv && *evaluation.epsilon_priv < 0.0) {
    throw ConfigError("evaluation.epsilon_priv must be >= 0");
  }
  if (policy.embed < 1 || policy.hidden < 1) throw ConfigError("policy sizes must be >= 1");
  evaluation.weights.Validate();
  ppo.Validate();
}

uint64_t RunConfig::Hash() const {
  json j = ToJson();
  j["paths"].erase("output_dir");
  return Fnv1a64(j.dump());
}

RunConfig LoadRunConfig(const std::string& path) {
  json j;
  try {
    j = json::parse(ReadFile(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return RunConfig::FromJson(j);
}

}  // namespace tabgen
