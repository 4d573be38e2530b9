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

#ifndef TABGEN_DISCRIMINATORS_H_
#define TABGEN_DISCRIMINATORS_H_

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "tabgen/constraints.h"
#include "tabgen/neural.h"
#include "tabgen/policy.h"
#include "tabgen/serializer.h"

namespace tabgen {

enum Level { kTokenLevel = 0, kSentenceLevel = 1, kFeatureLevel = 2, kRowLevel = 3 };
inline constexpr size_t kNumLevels = 4;
const char* LevelName(size_t level);

using LevelArray = std::array<double, kNumLevels>;

// Probability clamp inside logs and the score of unparseable records at the
// clause, pair and row levels.
inline constexpr double kScoreFloor = 1e-7;

struct DiscriminatorConfig {
  int embed = 64;
  int hidden = 128;
  std::vector<int> widths = {64, 64};
  double learning_rate = 1e-4;
  int steps = 4;
  int batch_size = 64;
  // Loss weights mu_k and reward weights lambda_k. A level is disabled when
  // both are zero.
  LevelArray mu = {1.0, 1.0, 1.0, 1.0};
  LevelArray lambda = {0.25, 0.25, 0.25, 0.25};

  bool enabled(size_t level) const { return mu[level] > 0.0 || lambda[level] > 0.0; }
  nlohmann::json ToJson() const;
  static DiscriminatorConfig FromJson(const nlohmann::json& j);
};

// A token sequence with its parse (when well-formed) and generator states.
struct RecordView {
  std::vector<int> tokens;
  std::optional<SerializedRecord> parsed;
  Mat states;  // H x T, column t follows token t
};

// Generator states H_t after consuming token t under teacher forcing.
// Throws VocabError for ids outside the vocabulary.
Mat EmbedSequence(const PolicyState& policy, std::span<const int> tokens);
// Mean of the columns of H at `span`; empty when the span is empty.
std::optional<Vec> PoolFeatureEmbedding(const Mat& states, std::span<const size_t> span);

RecordView MakeRecordView(const PolicyState& policy, const Serializer& serializer,
                          std::vector<int> tokens);

struct ScoreBreakdown {
  std::vector<double> token_scores;
  std::vector<double> sentence_scores;
  std::vector<double> feature_scores;
  std::optional<double> row_score;
  // D_k(S) per level; empty when the level is disabled or has nothing to score.
  std::array<std::optional<double>, kNumLevels> aggregated;
  bool malformed = false;
};

class DiscriminatorEnsemble {
 public:
  DiscriminatorEnsemble() = default;
  DiscriminatorEnsemble(int vocab, int generator_hidden, int max_clause_tokens,
                        const DiscriminatorConfig& config, uint64_t seed);

  const DiscriminatorConfig& config() const { return config_; }
  DiscriminatorConfig& mutable_config() { return config_; }
  ParamStore& store(size_t level) { return stores_[level]; }
  const ParamStore& store(size_t level) const { return stores_[level]; }

  const BiRnnScorer& token() const { return token_; }
  const ClauseScorer& sentence() const { return sentence_; }
  const MlpScorer& feature() const { return feature_; }
  const MlpScorer& row() const { return row_; }

  ScoreBreakdown Score(const RecordView& record, const CriticalPairs& pairs) const;

 private:
  DiscriminatorConfig config_;
  std::array<ParamStore, kNumLevels> stores_;
  BiRnnScorer token_;
  ClauseScorer sentence_;
  MlpScorer feature_;
  MlpScorer row_;
};

struct DiscriminatorLoss {
  double total = 0.0;
  std::array<std::optional<double>, kNumLevels> per_level;
};

// -mean log D(real) - mean log(1 - D(fake)), scores clamped to
// [kScoreFloor, 1 - kScoreFloor].
double BinaryCrossEntropy(std::span<const double> real, std::span<const double> fake);
// Levels whose real or fake list is empty are skipped.
DiscriminatorLoss CombineLevelLosses(const std::array<std::vector<double>, kNumLevels>& real,
                                     const std::array<std::vector<double>, kNumLevels>& fake,
                                     const LevelArray& mu);

// Inputs of one level for one side of a minibatch.
struct LevelBatch {
  std::vector<const RecordView*> token_records;
  std::vector<std::vector<int>> clauses;
  Mat pairs;  // 2H x P
  Mat rows;   // H x R
};

LevelBatch CollectLevelInputs(const std::vector<const RecordView*>& records,
                              const CriticalPairs& pairs, int generator_hidden);

// Loss of every enabled level on one real/fake minibatch. With `step`, also
// applies one optimizer update per level followed by spectral normalization.
DiscriminatorLoss DiscriminatorMinibatch(DiscriminatorEnsemble& ens,
                                         const std::vector<const RecordView*>& real,
                                         const std::vector<const RecordView*>& fake,
                                         const CriticalPairs& pairs, int generator_hidden,
                                         bool step);

// `steps` minibatches of `batch_size` records per side, sampled with
// replacement. Returns the loss trace, one entry per step.
std::vector<DiscriminatorLoss> TrainDiscriminators(DiscriminatorEnsemble& ens,
                                                   const std::vector<RecordView>& real,
                                                   const std::vector<RecordView>& fake,
                                                   const CriticalPairs& pairs,
                                                   int generator_hidden, int steps, Rng& rng);

}  // namespace tabgen

#endif  // TABGEN_DISCRIMINATORS_H_
