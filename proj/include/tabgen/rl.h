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

#ifndef TABGEN_RL_H_
#define TABGEN_RL_H_

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "tabgen/discriminators.h"
#include "tabgen/policy.h"

namespace tabgen {

struct PpoConfig {
  double clip_epsilon = 0.2;
  double beta = 0.1;
  double value_coef = 0.5;
  double alpha = 1.0;
  double policy_learning_rate = 2e-5;
  double value_learning_rate = 1.4e-5;
  int minibatch_size = 64;
  int epochs = 20;
  int rollouts_per_epoch = 256;
  int passes = 4;

  // Throws ConfigError when a field is out of range.
  void Validate() const;
  nlohmann::json ToJson() const;
  static PpoConfig FromJson(const nlohmann::json& j);
};

struct RewardRecord {
  double raw = 0.0;
  double weight = 1.0;
  double total = 0.0;
  // lambda_k D_k(S) after renormalization over active levels.
  LevelArray contributions = {0.0, 0.0, 0.0, 0.0};
  std::optional<int> label;
  bool malformed = false;
};

// R_raw = sum_k lambda_k D_k(S), lambda renormalized over the levels present
// in `breakdown`. Zero when no level is active.
double RawReward(const ScoreBreakdown& breakdown, const LevelArray& lambda,
                 LevelArray* contributions = nullptr);

// W_y = 1 + alpha * max(0, ln(N_total / (N_y |Y|))). Absent labels and
// classes with no training rows get 1.
double IfrsWeight(const ClassCensus& census, std::optional<int> label, double alpha);

inline double ShapedReward(double raw, double weight) { return weight * raw; }

// Terminal reward broadcast: G_t = R_total, A_t = G_t - V(s_t).
void Advantages(std::span<const double> values, double reward_total, std::vector<double>* advantages,
                std::vector<double>* returns);

// min(r A, clip(r, 1 - eps, 1 + eps) A).
double ClipContribution(double ratio, double advantage, double epsilon);

// Exact KL(p || q) between tempered softmaxes of two logit columns.
double ExactKl(const Vec& logits, const Vec& reference_logits, double temperature);

struct PpoTerms {
  double objective = 0.0;
  double clip_term = 0.0;
  double kl_term = 0.0;
  double value_term = 0.0;
  size_t tokens = 0;
  std::vector<double> ratios;
};

// Token-averaged objective
//   mean_t clip_t - beta mean_t KL_t - c_v mean_t (V(s_t) - G_t)^2
// over the minibatch. With `accumulate`, adds gradients of the negated
// objective to theta and phi. Throws NonFiniteError naming the term.
PpoTerms PpoObjective(PolicyState& policy, std::span<const Rollout* const> rollouts,
                      std::span<const double> reward_totals, const PpoConfig& config,
                      double temperature, bool accumulate);

struct EpochLog {
  int epoch = 0;
  double mean_raw = 0.0;
  double mean_weight = 0.0;
  double mean_total = 0.0;
  double kl = 0.0;
  std::array<std::optional<double>, kNumLevels> disc_loss;
  double clip_term = 0.0;
  double kl_term = 0.0;
  double value_term = 0.0;
  double objective = 0.0;
  double well_formed = 0.0;
  std::vector<int64_t> label_counts;
  std::vector<RewardRecord> rewards;

  nlohmann::json ToJson() const;
};

struct TrainInputs {
  const Serializer* serializer = nullptr;
  const Dataset* train = nullptr;  // standardized real training split
  const CriticalPairs* pairs = nullptr;
};

using EpochCallback =
    std::function<void(const EpochLog&, const PolicyState&, const DiscriminatorEnsemble&)>;

// Alternates discriminator updates and PPO updates for config.epochs epochs.
// On NonFiniteError the policy and ensemble are restored to their state at
// the start of the failing epoch before the error propagates.
std::vector<EpochLog> TrainRl(PolicyState& policy, DiscriminatorEnsemble& ensemble,
                              const TrainInputs& inputs, const PpoConfig& config, uint64_t seed,
                              const EpochCallback& on_epoch = nullptr);

}  // namespace tabgen

#endif  // TABGEN_RL_H_
