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

#ifndef TABGEN_POLICY_H_
#define TABGEN_POLICY_H_

#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "tabgen/neural.h"
#include "tabgen/serializer.h"

namespace tabgen {

struct PolicyConfig {
  int embed = 64;
  int hidden = 128;
  std::vector<int> value_widths = {64};
  // Temperature of on-policy rollouts; <= 0 selects greedy decoding.
  double temperature = 1.0;
  double generation_temperature = 0.8;

  nlohmann::json ToJson() const;
  static PolicyConfig FromJson(const nlohmann::json& j);
};

struct MleConfig {
  int max_epochs = 100;
  int patience = 10;
  double learning_rate = 2e-4;
  int batch_size = 1;
  // Share of the training split held out for perplexity early stopping.
  double validation_fraction = 0.1;

  nlohmann::json ToJson() const;
  static MleConfig FromJson(const nlohmann::json& j);
};

struct Rollout {
  std::vector<int> tokens;
  // log pi_old(a_t | s_t) and V(s_t), one per token.
  std::vector<double> log_probs;
  std::vector<double> values;
  // Class index of the final clause; empty when it does not parse.
  std::optional<int> label;
  bool hit_length_cap = false;
};

// Generator pi_theta (decoder), value head V_phi and frozen reference copy.
class PolicyState {
 public:
  PolicyState() = default;
  PolicyState(int vocab_size, const PolicyConfig& config, uint64_t seed);

  const PolicyConfig& config() const { return config_; }
  PolicyConfig& mutable_config() { return config_; }
  const ScorerSpec& spec() const { return decoder_.spec(); }
  const CausalRnn& decoder() const { return decoder_; }
  const Mlp& value_head() const { return value_head_; }
  int vocab_size() const { return decoder_.spec().vocab; }

  ParamStore& theta() { return theta_; }
  const ParamStore& theta() const { return theta_; }
  ParamStore& phi() { return phi_; }
  const ParamStore& phi() const { return phi_; }
  const ParamStore& reference() const { return reference_; }
  // Replaces pi_ref by a copy of the current theta.
  void SnapshotReference();
  void set_reference(ParamStore ref) { reference_ = std::move(ref); }

 private:
  PolicyConfig config_;
  CausalRnn decoder_;
  Mlp value_head_;
  ParamStore theta_;
  ParamStore phi_;
  ParamStore reference_;
};

// Teacher-forced pass over a token sequence.
struct PolicyPass {
  Mat logits;       // V x T, untempered
  Mat states;       // H x (T + 1); column t is s_t, the state before token t
  Vec log_probs;    // tempered log pi(a_t | s_t)
  Vec values;       // V_phi(s_t) on detached states
  CausalRnn::Tape tape;
  Mlp::Cache value_cache;
};

// Throws VocabError for ids outside the vocabulary.
PolicyPass EvaluateTokens(const PolicyState& policy, std::span<const int> tokens,
                          double temperature, bool record_tape);

// Per-step log-probabilities and values under the current parameters.
void LogProbsAndValues(const PolicyState& policy, std::span<const int> tokens, double temperature,
                       std::vector<double>* log_probs, std::vector<double>* values);

// Ancestral sampling until EOR or `max_length` tokens. Stored log-probs and
// values come from the teacher-forced path, so they round-trip bitwise.
Rollout SampleRecord(const PolicyState& policy, const Serializer& serializer, double temperature,
                     Rng& rng);

// Final-clause label. `unknown_value` is set when the clause names the label
// feature but its value lies outside the label vocabulary.
std::optional<int> ExtractLabel(std::span<const int> tokens, const Serializer& serializer,
                                bool* unknown_value = nullptr);

// Tempered next-token distribution at `state`.
Vec NextTokenDistribution(const PolicyState& policy, const Vec& state, double temperature);

struct MleEpoch {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_perplexity = 0.0;
};

struct MleResult {
  std::vector<MleEpoch> history;
  int best_epoch = 0;
  double best_perplexity = 0.0;
};

// Next-token cross-entropy pretraining with perplexity early stopping. Keeps
// the best epoch's theta and snapshots the reference from it. Throws
// NonFiniteError on a non-finite loss.
MleResult MlePretrain(PolicyState& policy, const Serializer& serializer, const Dataset& train,
                      const MleConfig& config, uint64_t seed);

// exp(mean token negative log-likelihood) at temperature 1.
double Perplexity(const PolicyState& policy, const std::vector<std::vector<int>>& sequences);

}  // namespace tabgen

#endif  // TABGEN_POLICY_H_
