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

#ifndef TABGEN_PIPELINE_H_
#define TABGEN_PIPELINE_H_

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"
#include "tabgen/checkpoint.h"
#include "tabgen/config.h"
#include "tabgen/constraints.h"
#include "tabgen/data.h"
#include "tabgen/evaluation.h"

namespace tabgen {

inline constexpr int kArtifactFormatVersion = 1;

// Artifact file names inside the output directory.
inline constexpr char kPcritFile[] = "pcrit.json";
inline constexpr char kAssociationFile[] = "association.csv";
inline constexpr char kPretrainCheckpoint[] = "pretrain.ckpt";
inline constexpr char kTrainCheckpoint[] = "train.ckpt";
inline constexpr char kPretrainLog[] = "pretrain_log.jsonl";
inline constexpr char kTrainLog[] = "train_log.jsonl";
inline constexpr char kSyntheticFile[] = "synthetic.csv";
inline constexpr char kAuditFile[] = "audit.json";
inline constexpr char kAuditCsvFile[] = "audit_features.csv";

// Raised when generation exhausts its retry budget (exit code 3).
class GenerationError : public Error {
 public:
  using Error::Error;
};

// {config_hash, seed, format_version}, embedded in every artifact. CSV
// artifacts carry it in a "<file>.meta.json" sibling.
nlohmann::json ArtifactMeta(const RunConfig& config);

// Input split into training and holdout parts, plus the standardized
// training rows the models consume.
struct PreparedData {
  Dataset train_raw;
  Dataset holdout_raw;
  Dataset train;
};
PreparedData PrepareData(const RunConfig& config);

// Independent seeds for each stage, derived from config.seed.
uint64_t StageSeed(const RunConfig& config, uint64_t stage);

std::string OutputPath(const RunConfig& config, const std::string& file);

struct DiscoverResult {
  AssociationMatrix association;
  CriticalPairs pairs;
};
DiscoverResult RunDiscover(const RunConfig& config);

Checkpoint RunPretrain(const RunConfig& config);

// Requires pcrit.json and pretrain.ckpt. With ppo.epochs == 0 the pretrain
// checkpoint is copied unchanged.
Checkpoint RunTrain(const RunConfig& config);

struct GenerateResult {
  Dataset rows;  // raw units
  size_t attempts = 0;
  size_t malformed = 0;
};
// Samples `count` well-formed rows from `checkpoint` at the generation
// temperature, resampling malformed records up to 10 x count attempts.
GenerateResult GenerateRows(const Checkpoint& checkpoint, size_t count, uint64_t seed);
// Writes synthetic.csv (or `output`) and its summary. Throws GenerationError
// after writing the partial file when the retry cap is hit.
GenerateResult RunGenerate(const RunConfig& config, size_t count,
                           const std::optional<std::string>& checkpoint_path = std::nullopt,
                           const std::optional<std::string>& output = std::nullopt);

// Audits `synthetic_csv` against `real_csv` (default: the training split)
// with utility scored on the holdout split.
AuditReport RunAudit(const RunConfig& config, const std::string& synthetic_csv,
                     const std::optional<std::string>& real_csv = std::nullopt);

}  // namespace tabgen

#endif  // TABGEN_PIPELINE_H_
