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

#include "tabgen/policy.h"

#include <algorithm>
#include <cmath>

namespace tabgen {
namespace {

using nlohmann::json;

double Effective(double temperature) { return temperature > 0.0 ? temperature : 1.0; }

void CheckIds(std::span<const int> tokens, int vocab) {
  for (int t : tokens) {
    if (t < 0 || t >= vocab) throw VocabError("token id " + std::to_string(t) + " outside vocabulary");
  }
}

// Softmax of one logit column at temperature tau.
Vec Softmax(const Vec& logits, double tau) {
  const Vec z = logits / tau;
  Vec p = (z.array() - z.maxCoeff()).exp();
  return p / p.sum();
}

}  // namespace

json PolicyConfig::ToJson() const {
  return {{"embed", embed},
          {"hidden", hidden},
          {"value_widths", value_widths},
          {"temperature", temperature},
          {"generation_temperature", generation_temperature}};
}

PolicyConfig PolicyConfig::FromJson(const json& j) {
  PolicyConfig c;
  c.embed = j.value("embed", c.embed);
  c.hidden = j.value("hidden", c.hidden);
  c.value_widths = j.value("value_widths", c.value_widths);
  c.temperature = j.value("temperature", c.temperature);
  c.generation_temperature = j.value("generation_temperature", c.generation_temperature);
  return c;
}

json MleConfig::ToJson() const {
  return {{"max_epochs", max_epochs},
          {"patience", patience},
          {"learning_rate", learning_rate},
          {"batch_size", batch_size},
          {"validation_fraction", validation_fraction}};
}

MleConfig MleConfig::FromJson(const json& j) {
  MleConfig c;
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
  return c;
}

PolicyState::PolicyState(int vocab_size, const PolicyConfig& config, uint64_t seed)
    : config_(config) {
  Rng rng(seed);
  ScorerSpec spec;
  spec.architecture = Architecture::kCausalRnn;
  spec.vocab = vocab_size;
  spec.embed = config.embed;
  spec.hidden = config.hidden;
  decoder_ = CausalRnn(spec, theta_, "policy", &rng);
  value_head_ = Mlp::Create(phi_, "value", config.hidden, config.value_widths, 1, false, &rng, true);
  SnapshotReference();
}

void PolicyState::SnapshotReference() { reference_ = theta_; }

PolicyPass EvaluateTokens(const PolicyState& policy, std::span<const int> tokens,
                          double temperature, bool record_tape) {
  CheckIds(tokens, policy.vocab_size());
  const double tau = Effective(temperature);
  PolicyPass pass;
  pass.logits = policy.decoder().Forward(policy.theta(), tokens, true, &pass.states,
                                         record_tape ? &pass.tape : nullptr);
  const auto t = static_cast<Eigen::Index>(tokens.size());
  pass.log_probs.resize(t);
  const Mat ls = LogSoftmaxColumns(pass.logits / tau);
  for (Eigen::Index i = 0; i < t; ++i) pass.log_probs[i] = ls(tokens[static_cast<size_t>(i)], i);
  const Mat v = policy.value_head().Forward(policy.phi(), pass.states.leftCols(t),
                                            record_tape ? &pass.value_cache : nullptr);
  pass.values = v.row(0).transpose();
  return pass;
}

void LogProbsAndValues(const PolicyState& policy, std::span<const int> tokens, double temperature,
                       std::vector<double>* log_probs, std::vector<double>* values) {
  const PolicyPass pass = EvaluateTokens(policy, tokens, temperature, false);
  if (log_probs) log_probs->assign(pass.log_probs.data(), pass.log_probs.data() + pass.log_probs.size());
  if (values) values->assign(pass.values.data(), pass.values.data() + pass.values.size());
}

Vec NextTokenDistribution(const PolicyState& policy, const Vec& state, double temperature) {
  return Softmax(policy.decoder().Logits(policy.theta(), state), Effective(temperature));
}

Rollout SampleRecord(const PolicyState& policy, const Serializer& serializer, double temperature,
                     Rng& rng) {
  Rollout out;
  const size_t cap = serializer.max_length();
  const CausalRnn& dec = policy.decoder();
  Vec state = dec.Advance(policy.theta(), dec.start_token(), dec.InitialState());
  while (out.tokens.size() < cap) {
    int token = 0;
    if (temperature > 0.0) {
      const Vec p = NextTokenDistribution(policy, state, temperature);
      token = static_cast<int>(rng.Categorical(p.data(), static_cast<size_t>(p.size())));
    } else {
      dec.Logits(policy.theta(), state).maxCoeff(&token);
    }
    out.tokens.push_back(token);
    if (token == kTokEor) break;
    state = dec.Advance(policy.theta(), token, state);
  }
  out.hit_length_cap = out.tokens.empty() || out.tokens.back() != kTokEor;
  LogProbsAndValues(policy, out.tokens, temperature, &out.log_probs, &out.values);
  out.label = ExtractLabel(out.tokens, serializer);
  return out;
}

std::optional<int> ExtractLabel(std::span<const int> tokens, const Serializer& serializer,
                                bool* unknown_value) {
  if (unknown_value) *unknown_value = false;
  std::optional<int> label = serializer.FinalLabel(tokens);
  if (!label && unknown_value) {
    const size_t n = tokens.size();
    const int label_name = serializer.vocab().Id(serializer.schema().label_spec().name);
    *unknown_value = n >= 5 && tokens[n - 1] == kTokEor && tokens[n - 2] == kTokSep &&
                     tokens[n - 4] == kTokIs && tokens[n - 5] == label_name;
  }
  return label;
}

double Perplexity(const PolicyState& policy, const std::vector<std::vector<int>>& sequences) {
  double nll = 0.0;
  size_t count = 0;
  for (const auto& s : sequences) {
    const Mat ls = LogSoftmaxColumns(policy.decoder().Forward(policy.theta(), s, false, nullptr, nullptr));
    for (size_t t = 0; t < s.size(); ++t) nll -= ls(s[t], static_cast<Eigen::Index>(t));
    count += s.size();
  }
  return count == 0 ? 1.0 : std::exp(nll / static_cast<double>(count));
}

MleResult MlePretrain(PolicyState& policy, const Serializer& serializer, const Dataset& train,
                      const MleConfig& config, uint64_t seed) {
  if (train.rows.empty()) throw InsufficientDataError("pretraining needs at least one record");
  if (config.batch_size < 1 || config.max_epochs < 0 || config.patience < 1) {
    throw ConfigError("invalid pretraining configuration");
  }
  Rng rng(seed);
  std::vector<std::vector<int>> all;
  for (const auto& row : train.rows) all.push_back(serializer.Serialize(row).tokens);
  rng.Shuffle(all);
  size_t n_val = static_cast<size_t>(std::lround(config.validation_fraction * static_cast<double>(all.size())));
  if (all.size() >= 2) n_val = std::clamp<size_t>(n_val, 1, all.size() - 1);
  else n_val = 0;
  std::vector<std::vector<int>> validation(all.begin(), all.begin() + static_cast<long>(n_val));
  std::vector<std::vector<int>> fit(all.begin() + static_cast<long>(n_val), all.end());
  if (validation.empty()) validation = fit;

  const CausalRnn& dec = policy.decoder();
  ParamStore& theta = policy.theta();
  MleResult result;
  result.best_perplexity = Perplexity(policy, validation);
  ParamStore best = theta;
  int stale = 0;
  std::vector<size_t> order(fit.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.Shuffle(order);
    double loss_sum = 0.0;
    size_t token_sum = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch_size)) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(config.batch_size));
      size_t batch_tokens = 0;
      for (size_t i = start; i < end; ++i) batch_tokens += fit[order[i]].size();
      const double scale = 1.0 / static_cast<double>(batch_tokens);
      for (size_t i = start; i < end; ++i) {
        const auto& seq = fit[order[i]];
        CausalRnn::Tape tape;
        const Mat logits = dec.Forward(theta, seq, false, nullptr, &tape);
        const Mat ls = LogSoftmaxColumns(logits);
        Mat dlogits = ls.array().exp().matrix();
        for (size_t t = 0; t < seq.size(); ++t) {
          const auto c = static_cast<Eigen::Index>(t);
          loss_sum -= ls(seq[t], c);
          dlogits(seq[t], c) -= 1.0;
        }
        dlogits *= scale;
        dec.Backward(theta, tape, dlogits);
      }
      token_sum += batch_tokens;
      if (!std::isfinite(loss_sum)) {
        throw NonFiniteError("non-finite pretraining loss at epoch " + std::to_string(epoch), "policy");
      }
      AdamStep(theta, config.learning_rate);
    }
    MleEpoch record;
    record.epoch = epoch;
    record.train_loss = token_sum ? loss_sum / static_cast<double>(token_sum) : 0.0;
    record.validation_perplexity = Perplexity(policy, validation);
    result.history.push_back(record);
    if (record.validation_perplexity < result.best_perplexity || result.best_epoch == 0) {
      result.best_perplexity = record.validation_perplexity;
      result.best_epoch = epoch;
      best = theta;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  theta = best;
  theta.Touch();
  policy.SnapshotReference();
  return result;
}

}  // namespace tabgen
