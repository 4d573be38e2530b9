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

#include "tabgen/pipeline.h"

#include <filesystem>
#include <variant>

#include "tabgen/common.h"
#include "tabgen/policy.h"
#include "tabgen/rl.h"

namespace tabgen {

using nlohmann::json;

namespace {

enum Stage : uint64_t {
  kSplitStage = 1,
  kPolicyInitStage = 2,
  kMleStage = 3,
  kEnsembleInitStage = 4,
  kRlStage = 5,
  kGenerateStage = 6,
  kAuditStage = 7,
};

void WriteWithMeta(const RunConfig& config, const std::string& path, const std::string& contents) {
  AtomicWriteFile(path, contents);
  AtomicWriteFile(path + ".meta.json", ArtifactMeta(config).dump(2) + "\n");
}

std::optional<json> ReadJsonFile(const std::string& path, const char* what) {
  if (path.empty()) return std::nullopt;
  try {
    return json::parse(ReadFile(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(what) + " " + path + " is not valid JSON: " + e.what());
  }
}

void RequireFile(const std::string& path, const char* produced_by) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError(path + " not found; run '" + produced_by + "' first");
  }
}

CriticalPairs LoadPairs(const RunConfig& config, const Schema& schema) {
  const std::string path = OutputPath(config, kPcritFile);
  RequireFile(path, "discover");
  return CriticalPairs::FromJson(json::parse(ReadFile(path)), schema);
}

}  // namespace

json ArtifactMeta(const RunConfig& config) {
  return {{"config_hash", HexU64(config.Hash())},
          {"seed", config.seed},
          {"format_version", kArtifactFormatVersion}};
}

uint64_t StageSeed(const RunConfig& config, uint64_t stage) {
  return Rng(config.seed).Fork(stage).NextU64();
}

std::string OutputPath(const RunConfig& config, const std::string& file) {
  return (std::filesystem::path(config.paths.output_dir) / file).string();
}

PreparedData PrepareData(const RunConfig& config) {
  if (config.paths.input.empty()) throw ConfigError("paths.input is required");
  const std::optional<json> hints = ReadJsonFile(config.paths.schema, "schema file");
  Dataset raw = LoadCsv(config.paths.input, hints);
  auto [train_raw, holdout_raw] = Split(raw, config.holdout_fraction, StageSeed(config, kSplitStage));
  Dataset train = Standardize(train_raw);
  return {std::move(train_raw), std::move(holdout_raw), std::move(train)};
}

DiscoverResult RunDiscover(const RunConfig& config) {
  const PreparedData data = PrepareData(config);
  std::filesystem::create_directories(config.paths.output_dir);
  DiscoverResult r;
  r.association = ComputeAssociationMatrix(data.train);
  r.pairs = ExtractCriticalPairs(r.association, config.discovery.delta_thresh,
                                 static_cast<size_t>(config.discovery.k), data.train.schema.label);
  if (r.pairs.empty()) {
    Warn("no feature pair reaches delta_thresh " + std::to_string(config.discovery.delta_thresh) +
         "; feature-level discrimination is disabled");
  }
  json j = r.pairs.ToJson(data.train.schema);
  j["meta"] = ArtifactMeta(config);
  AtomicWriteFile(OutputPath(config, kPcritFile), j.dump(2) + "\n");
  WriteWithMeta(config, OutputPath(config, kAssociationFile), r.association.ToCsv(data.train.schema));
  return r;
}

Checkpoint RunPretrain(const RunConfig& config) {
  const PreparedData data = PrepareData(config);
  std::filesystem::create_directories(config.paths.output_dir);
  Serializer serializer = Serializer::ForDataset(data.train);
  PolicyState policy(static_cast<int>(serializer.vocab().size()), config.policy,
                     StageSeed(config, kPolicyInitStage));
  const MleResult result = MlePretrain(policy, serializer, data.train, config.mle,
                                       StageSeed(config, kMleStage));
  std::string log;
  for (const auto& e : result.history) {
    json line = {{"epoch", e.epoch},
                 {"train_loss", e.train_loss},
                 {"validation_perplexity", e.validation_perplexity},
                 {"selected", e.epoch == result.best_epoch},
                 {"meta", ArtifactMeta(config)}};
    log += line.dump() + "\n";
  }
  AtomicWriteFile(OutputPath(config, kPretrainLog), log);
  Checkpoint ckpt{"pretrain", config.Hash(), config.seed, 0, std::move(serializer), std::move(policy),
                  std::nullopt};
  SaveCheckpoint(OutputPath(config, kPretrainCheckpoint), ckpt);
  return ckpt;
}

Checkpoint RunTrain(const RunConfig& config) {
  const std::string pretrain_path = OutputPath(config, kPretrainCheckpoint);
  RequireFile(pretrain_path, "pretrain");
  const std::string bytes = ReadFile(pretrain_path);
  Checkpoint ckpt = DecodeCheckpoint(bytes);
  const CriticalPairs pairs = LoadPairs(config, ckpt.serializer.schema());
  const std::string train_path = OutputPath(config, kTrainCheckpoint);
  const std::string log_path = OutputPath(config, kTrainLog);
  if (config.ppo.epochs == 0) {
    AtomicWriteFile(train_path, bytes);
    AtomicWriteFile(log_path, "");
    return ckpt;
  }

  const PreparedData data = PrepareData(config);
  ckpt.ensemble.emplace(static_cast<int>(ckpt.serializer.vocab().size()), ckpt.policy.config().hidden,
                        static_cast<int>(ckpt.serializer.max_clause_length()), config.discriminators,
                        StageSeed(config, kEnsembleInitStage));
  ckpt.stage = "train";
  ckpt.config_hash = config.Hash();
  ckpt.seed = config.seed;
  const TrainInputs inputs{&ckpt.serializer, &data.train, &pairs};
  std::string log;
  AtomicWriteFile(log_path, log);
  try {
    TrainRl(ckpt.policy, *ckpt.ensemble, inputs, config.ppo, StageSeed(config, kRlStage),
            [&](const EpochLog& epoch, const PolicyState&, const DiscriminatorEnsemble&) {
              json line = epoch.ToJson();
              line["meta"] = ArtifactMeta(config);
              log += line.dump() + "\n";
              AtomicWriteFile(log_path, log);
              ckpt.epochs_completed = epoch.epoch;
              SaveCheckpoint(train_path, ckpt);
            });
  } catch (const NonFiniteError&) {
    // TrainRl has rolled the models back to the start of the failing epoch.
    SaveCheckpoint(train_path, ckpt);
    throw;
  }
  return ckpt;
}

GenerateResult GenerateRows(const Checkpoint& checkpoint, size_t count, uint64_t seed) {
  const Serializer& serializer = checkpoint.serializer;
  GenerateResult r;
  Dataset std_rows;
  std_rows.schema = serializer.schema();
  std_rows.standardized = true;
  Rng rng(seed);
  const size_t cap = 10 * count;
  const double temperature = checkpoint.policy.config().generation_temperature;
  while (std_rows.rows.size() < count && r.attempts < cap) {
    ++r.attempts;
    const Rollout rollout = SampleRecord(checkpoint.policy, serializer, temperature, rng);
    ParseOutcome parsed = serializer.Deserialize(rollout.tokens);
    if (auto* ok = std::get_if<ParsedRecord>(&parsed)) {
      std_rows.rows.push_back(std::move(ok->row));
    } else {
      ++r.malformed;
    }
  }
  r.rows = Destandardize(std_rows);
  return r;
}

GenerateResult RunGenerate(const RunConfig& config, size_t count,
                           const std::optional<std::string>& checkpoint_path,
                           const std::optional<std::string>& output) {
  const std::string ckpt_path = checkpoint_path ? *checkpoint_path : OutputPath(config, kTrainCheckpoint);
  RequireFile(ckpt_path, "train");
  const Checkpoint ckpt = LoadCheckpoint(ckpt_path);
  std::filesystem::create_directories(config.paths.output_dir);
  GenerateResult r = GenerateRows(ckpt, count, StageSeed(config, kGenerateStage));
  const std::string out = output ? *output : OutputPath(config, kSyntheticFile);
  WriteWithMeta(config, out, ToCsv(r.rows));
  const json summary = {
      {"requested", count},
      {"written", r.rows.num_rows()},
      {"attempts", r.attempts},
      {"malformed", r.malformed},
      {"malformed_rate", r.attempts ? static_cast<double>(r.malformed) / static_cast<double>(r.attempts) : 0.0},
      {"temperature", ckpt.policy.config().generation_temperature},
      {"meta", ArtifactMeta(config)}};
  AtomicWriteFile(out + ".summary.json", summary.dump(2) + "\n");
  if (r.rows.num_rows() < count) {
    throw GenerationError("retry cap of " + std::to_string(10 * count) + " samples reached with " +
                          std::to_string(r.rows.num_rows()) + " of " + std::to_string(count) +
                          " rows; partial output written to " + out);
  }
  return r;
}

AuditReport RunAudit(const RunConfig& config, const std::string& synthetic_csv,
                     const std::optional<std::string>& real_csv) {
  const PreparedData data = PrepareData(config);
  const Schema& schema = data.train_raw.schema;
  const Dataset real = real_csv ? ParseCsvWithSchema(ReadFile(*real_csv), schema) : data.train_raw;
  const Dataset synthetic = ParseCsvWithSchema(ReadFile(synthetic_csv), schema);

  const std::optional<json> user_rules = ReadJsonFile(config.paths.rules, "rule file");
  const RuleSet rules = AutoRules(real, user_rules);
  CriticalPairs pairs;
  if (std::filesystem::exists(OutputPath(config, kPcritFile))) {
    pairs = LoadPairs(config, schema);
  } else {
    const AssociationMatrix c = ComputeAssociationMatrix(data.train);
    pairs = ExtractCriticalPairs(c, config.discovery.delta_thresh,
                                 static_cast<size_t>(config.discovery.k), schema.label);
  }

  AuditOptions opt;
  opt.bins = config.evaluation.bins;
  opt.folds = config.evaluation.folds;
  opt.seed = StageSeed(config, kAuditStage);
  opt.epsilon_priv = config.evaluation.epsilon_priv;
  opt.weights = config.evaluation.weights;
  AuditReport rep = Audit(real, synthetic, rules, pairs, opt, &data.holdout_raw);

  std::filesystem::create_directories(config.paths.output_dir);
  json j = rep.ToJson(rules);
  j["rules_source"] = user_rules ? "auto+user" : "auto";
  if (!user_rules) j["notes"].push_back("no rule file given; FAITH factuality uses auto rules only");
  j["meta"] = ArtifactMeta(config);
  AtomicWriteFile(OutputPath(config, kAuditFile), j.dump(2) + "\n");
  WriteWithMeta(config, OutputPath(config, kAuditCsvFile), rep.ToCsv());
  return rep;
}

}  // namespace tabgen
