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

#include "tabgen/rl.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tabgen {
namespace {

using nlohmann::json;

void Require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("ppo: " + what);
}

}  // namespace

void PpoConfig::Validate() const {
  Require(clip_epsilon > 0.0 && clip_epsilon < 1.0, "clip_epsilon must lie in (0, 1)");
  Require(beta >= 0.0, "beta must be >= 0");
  Require(value_coef >= 0.0, "value_coef must be >= 0");
  Require(alpha >= 0.0, "alpha must be >= 0");
  Require(policy_learning_rate >= 0.0 && value_learning_rate >= 0.0, "learning rates must be >= 0");
  Require(minibatch_size >= 1, "minibatch_size must be >= 1");
  Require(epochs >= 0, "epochs must be >= 0");
  Require(rollouts_per_epoch >= 1, "rollouts_per_epoch must be >= 1");
  Require(passes >= 1, "passes must be >= 1");
}

json PpoConfig::ToJson() const {
  return {{"clip_epsilon", clip_epsilon},
          {"beta", beta},
          {"value_coef", value_coef},
          {"alpha", alpha},
          {"policy_learning_rate", policy_learning_rate},
          {"value_learning_rate", value_learning_rate},
          {"minibatch_size", minibatch_size},
          {"epochs", epochs},
          {"rollouts_per_epoch", rollouts_per_epoch},
          {"passes", passes}};
}

PpoConfig PpoConfig::FromJson(const json& j) {
  PpoConfig c;
  c.clip_epsilon = j.value("clip_epsilon", c.clip_epsilon);
  c.beta = j.value("beta", c.beta);
  c.value_coef = j.value("value_coef", c.value_coef);
  c.alpha = j.value("alpha", c.alpha);
  c.policy_learning_rate = j.value("policy_learning_rate", c.policy_learning_rate);
  c.value_learning_rate = j.value("value_learning_rate", c.value_learning_rate);
  c.minibatch_size = j.value("minibatch_size", c.minibatch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.rollouts_per_epoch = j.value("rollouts_per_epoch", c.rollouts_per_epoch);
  c.passes = j.value("passes", c.passes);
  return c;
}

double RawReward(const ScoreBreakdown& breakdown, const LevelArray& lambda,
                 LevelArray* contributions) {
  double z = 0.0;
  for (size_t k = 0; k < kNumLevels; ++k) {
    if (breakdown.aggregated[k] && lambda[k] > 0.0) z += lambda[k];
  }
  LevelArray c = {0.0, 0.0, 0.0, 0.0};
  double raw = 0.0;
  if (z > 0.0) {
    for (size_t k = 0; k < kNumLevels; ++k) {
      if (!breakdown.aggregated[k] || lambda[k] <= 0.0) continue;
      c[k] = lambda[k] / z * *breakdown.aggregated[k];
      raw += c[k];
    }
  }
  if (contributions) *contributions = c;
  return raw;
}

double IfrsWeight(const ClassCensus& census, std::optional<int> label, double alpha) {
  if (!label || *label < 0 || static_cast<size_t>(*label) >= census.counts.size()) return 1.0;
  const auto n_y = static_cast<double>(census.counts[static_cast<size_t>(*label)]);
  if (n_y <= 0.0) return 1.0;
  const double classes = static_cast<double>(census.counts.size());
  const double ratio = static_cast<double>(census.total) / (n_y * classes);
  return 1.0 + alpha * std::max(0.0, std::log(ratio));
}

void Advantages(std::span<const double> values, double reward_total, std::vector<double>* advantages,
                std::vector<double>* returns) {
  if (returns) returns->assign(values.size(), reward_total);
  if (advantages) {
    advantages->resize(values.size());
    for (size_t t = 0; t < values.size(); ++t) (*advantages)[t] = reward_total - values[t];
  }
}

double ClipContribution(double ratio, double advantage, double epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

double ExactKl(const Vec& logits, const Vec& reference_logits, double temperature) {
  Mat both(logits.size(), 2);
  both.col(0) = logits / temperature;
  both.col(1) = reference_logits / temperature;
  const Mat ls = LogSoftmaxColumns(both);
  return (ls.col(0).array().exp() * (ls.col(0) - ls.col(1)).array()).sum();
}

PpoTerms PpoObjective(PolicyState& policy, std::span<const Rollout* const> rollouts,
                      std::span<const double> reward_totals, const PpoConfig& config,
                      double temperature, bool accumulate) {
  const double tau = temperature > 0.0 ? temperature : 1.0;
  PpoTerms terms;
  for (const Rollout* r : rollouts) terms.tokens += r->tokens.size();
  if (terms.tokens == 0) return terms;
  const double inv_n = 1.0 / static_cast<double>(terms.tokens);
  double clip_sum = 0.0, kl_sum = 0.0, value_sum = 0.0;
  for (size_t i = 0; i < rollouts.size(); ++i) {
    const Rollout& ro = *rollouts[i];
    const double g = reward_totals[i];
    PolicyPass pass = EvaluateTokens(policy, ro.tokens, tau, accumulate);
    const Mat ref = policy.decoder().Forward(policy.reference(), ro.tokens, false, nullptr, nullptr);
    const Mat lp = LogSoftmaxColumns(pass.logits / tau);
    const Mat lq = LogSoftmaxColumns(ref / tau);
    const auto steps = static_cast<Eigen::Index>(ro.tokens.size());
    Mat dlogits(pass.logits.rows(), steps);
    Mat dvalues(1, steps);
    for (Eigen::Index t = 0; t < steps; ++t) {
      const auto st = static_cast<size_t>(t);
      const double advantage = g - ro.values[st];
      const double ratio = std::exp(pass.log_probs[t] - ro.log_probs[st]);
      terms.ratios.push_back(ratio);
      clip_sum += ClipContribution(ratio, advantage, config.clip_epsilon);
      const Vec p = lp.col(t).array().exp();
      const Vec log_ratio = lp.col(t) - lq.col(t);
      const double kl = p.dot(log_ratio);
      kl_sum += kl;
      const double dv = pass.values[t] - g;
      value_sum += dv * dv;
      if (!accumulate) continue;
      const bool active = advantage >= 0.0 ? ratio <= 1.0 + config.clip_epsilon
                                           : ratio >= 1.0 - config.clip_epsilon;
      const double surrogate = active ? ratio * advantage : 0.0;
      // d(-clip)/dz = -surrogate (onehot - p) / tau.
      Vec d = surrogate * p;
      d(ro.tokens[st]) -= surrogate;
      // d(beta KL)/dz = beta p (log p - log q - KL) / tau.
      d += config.beta * p.cwiseProduct((log_ratio.array() - kl).matrix());
      dlogits.col(t) = d * inv_n / tau;
      dvalues(0, t) = 2.0 * config.value_coef * dv * inv_n;
    }
    if (accumulate) {
      policy.decoder().Backward(policy.theta(), pass.tape, dlogits);
      policy.value_head().Backward(policy.phi(), pass.value_cache, dvalues);
    }
  }
  terms.clip_term = clip_sum * inv_n;
  terms.kl_term = kl_sum * inv_n;
  terms.value_term = value_sum * inv_n;
  if (!std::isfinite(terms.clip_term)) throw NonFiniteError("non-finite clip term", "clip");
  if (!std::isfinite(terms.kl_term)) throw NonFiniteError("non-finite KL term", "kl");
  if (!std::isfinite(terms.value_term)) throw NonFiniteError("non-finite value term", "value");
  terms.objective = terms.clip_term - config.beta * terms.kl_term - config.value_coef * terms.value_term;
  return terms;
}

json EpochLog::ToJson() const {
  json disc = json::object();
  for (size_t k = 0; k < kNumLevels; ++k) {
    disc[LevelName(k)] = disc_loss[k] ? json(*disc_loss[k]) : json(nullptr);
  }
  json raw = json::array(), weight = json::array(), total = json::array();
  for (const auto& r : rewards) {
    raw.push_back(r.raw);
    weight.push_back(r.weight);
    total.push_back(r.total);
  }
  return {{"epoch", epoch},
          {"mean_R_raw", mean_raw},
          {"mean_W", mean_weight},
          {"mean_R_total", mean_total},
          {"kl", kl},
          {"L_disc", disc},
          {"ppo", {{"objective", objective}, {"clip", clip_term}, {"kl", kl_term}, {"value", value_term}}},
          {"well_formed", well_formed},
          {"label_counts", label_counts},
          {"rollouts", {{"R_raw", raw}, {"W", weight}, {"R_total", total}}}};
}

std::vector<EpochLog> TrainRl(PolicyState& policy, DiscriminatorEnsemble& ensemble,
                              const TrainInputs& inputs, const PpoConfig& config, uint64_t seed,
                              const EpochCallback& on_epoch) {
  config.Validate();
  const Serializer& serializer = *inputs.serializer;
  const Dataset& train = *inputs.train;
  const CriticalPairs& pairs = *inputs.pairs;
  const ClassCensus census = Census(train);
  const int hidden = policy.config().hidden;
  const double tau = policy.config().temperature;
  std::vector<std::vector<int>> real_tokens;
  for (const auto& row : train.rows) real_tokens.push_back(serializer.Serialize(row).tokens);

  std::vector<EpochLog> logs;
  Rng master(seed);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const PolicyState policy_backup = policy;
    const DiscriminatorEnsemble ensemble_backup = ensemble;
    Rng epoch_rng = master.Fork(static_cast<uint64_t>(epoch));
    Rng sample_rng = epoch_rng.Fork(1);
    Rng disc_rng = epoch_rng.Fork(2);
    Rng ppo_rng = epoch_rng.Fork(3);
    try {
      const auto n = static_cast<size_t>(config.rollouts_per_epoch);
      std::vector<Rollout> rollouts;
      rollouts.reserve(n);
      for (size_t i = 0; i < n; ++i) rollouts.push_back(SampleRecord(policy, serializer, tau, sample_rng));

      // Step A: discriminators on real vs current rollouts.
      std::vector<RecordView> fake, real;
      fake.reserve(n);
      for (const auto& r : rollouts) fake.push_back(MakeRecordView(policy, serializer, r.tokens));
      const bool any_level = std::any_of(ensemble.config().mu.begin(), ensemble.config().mu.end(),
                                         [](double m) { return m > 0.0; });
      std::vector<DiscriminatorLoss> trace;
      if (any_level) {
        real.reserve(real_tokens.size());
        for (const auto& t : real_tokens) real.push_back(MakeRecordView(policy, serializer, t));
        trace = TrainDiscriminators(ensemble, real, fake, pairs, hidden, ensemble.config().steps,
                                    disc_rng);
      }

      // Step B: shaped terminal rewards, then clipped policy updates.
      EpochLog log;
      log.epoch = epoch;
      log.label_counts.assign(census.counts.size(), 0);
      std::vector<double> totals(n);
      size_t well_formed = 0;
      for (size_t i = 0; i < n; ++i) {
        const ScoreBreakdown bd = ensemble.Score(fake[i], pairs);
        RewardRecord rec;
        rec.raw = RawReward(bd, ensemble.config().lambda, &rec.contributions);
        rec.label = rollouts[i].label;
        rec.weight = IfrsWeight(census, rec.label, config.alpha);
        rec.total = ShapedReward(rec.raw, rec.weight);
        rec.malformed = bd.malformed;
        totals[i] = rec.total;
        well_formed += !bd.malformed;
        if (rec.label) ++log.label_counts[static_cast<size_t>(*rec.label)];
        log.mean_raw += rec.raw;
        log.mean_weight += rec.weight;
        log.mean_total += rec.total;
        log.rewards.push_back(rec);
      }
      log.mean_raw /= static_cast<double>(n);
      log.mean_weight /= static_cast<double>(n);
      log.mean_total /= static_cast<double>(n);
      log.well_formed = static_cast<double>(well_formed) / static_cast<double>(n);
      for (size_t k = 0; k < kNumLevels; ++k) {
        double sum = 0.0;
        size_t count = 0;
        for (const auto& l : trace) {
          if (l.per_level[k]) {
            sum += *l.per_level[k];
            ++count;
          }
        }
        if (count) log.disc_loss[k] = sum / static_cast<double>(count);
      }

      std::vector<size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      const auto mb = static_cast<size_t>(config.minibatch_size);
      size_t updates = 0;
      for (int pass = 0; pass < config.passes; ++pass) {
        ppo_rng.Shuffle(order);
        for (size_t start = 0; start < n; start += mb) {
          const size_t end = std::min(n, start + mb);
          std::vector<const Rollout*> batch;
          std::vector<double> batch_totals;
          for (size_t i = start; i < end; ++i) {
            batch.push_back(&rollouts[order[i]]);
            batch_totals.push_back(totals[order[i]]);
          }
          const PpoTerms terms = PpoObjective(policy, batch, batch_totals, config, tau, true);
          AdamStep(policy.theta(), config.policy_learning_rate);
          AdamStep(policy.phi(), config.value_learning_rate);
          log.clip_term += terms.clip_term;
          log.kl_term += terms.kl_term;
          log.value_term += terms.value_term;
          log.objective += terms.objective;
          ++updates;
        }
      }
      const double inv = 1.0 / static_cast<double>(std::max<size_t>(updates, 1));
      log.clip_term *= inv;
      log.kl_term *= inv;
      log.value_term *= inv;
      log.objective *= inv;
      log.kl = log.kl_term;
      logs.push_back(std::move(log));
      if (on_epoch) on_epoch(logs.back(), policy, ensemble);
    } catch (const NonFiniteError&) {
      policy = policy_backup;
      ensemble = ensemble_backup;
      throw;
    }
  }
  return logs;
}

}  // namespace tabgen
