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

#include "tabgen/discriminators.h"

#include <algorithm>
#include <cmath>

namespace tabgen {
namespace {

using nlohmann::json;

double Mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double Clamp(double p) { return std::clamp(p, kScoreFloor, 1.0 - kScoreFloor); }

// dL/dp of one side of the binary cross-entropy, scaled by `weight`.
Mat BceUpstream(const Mat& probs, bool real, double weight) {
  Mat g(probs.rows(), probs.cols());
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    const double p = probs(i);
    if (p < kScoreFloor || p > 1.0 - kScoreFloor) {
      g(i) = 0.0;
    } else {
      g(i) = real ? -weight / p : weight / (1.0 - p);
    }
  }
  return g;
}

std::vector<double> ToVector(const Mat& m) { return std::vector<double>(m.data(), m.data() + m.size()); }

Mat ColumnsOf(const std::vector<Vec>& cols, Eigen::Index rows) {
  Mat m(rows, static_cast<Eigen::Index>(cols.size()));
  for (size_t i = 0; i < cols.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = cols[i];
  return m;
}

}  // namespace

const char* LevelName(size_t level) {
  static const char* kNames[] = {"token", "sentence", "feature", "row"};
  return kNames[level];
}

json DiscriminatorConfig::ToJson() const {
  return {{"embed", embed},   {"hidden", hidden}, {"widths", widths},
          {"learning_rate", learning_rate}, {"steps", steps}, {"batch_size", batch_size},
          {"mu", mu},         {"lambda", lambda}};
}

DiscriminatorConfig DiscriminatorConfig::FromJson(const json& j) {
  DiscriminatorConfig c;
  c.embed = j.value("embed", c.embed);
  c.hidden = j.value("hidden", c.hidden);
  c.widths = j.value("widths", c.widths);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.steps = j.value("steps", c.steps);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.mu = j.value("mu", c.mu);
  c.lambda = j.value("lambda", c.lambda);
  return c;
}

Mat EmbedSequence(const PolicyState& policy, std::span<const int> tokens) {
  for (int t : tokens) {
    if (t < 0 || t >= policy.vocab_size()) {
      throw VocabError("token id " + std::to_string(t) + " outside vocabulary");
    }
  }
  Mat states;
  policy.decoder().Forward(policy.theta(), tokens, true, &states, nullptr);
  return states.rightCols(static_cast<Eigen::Index>(tokens.size()));
}

std::optional<Vec> PoolFeatureEmbedding(const Mat& states, std::span<const size_t> span) {
  if (span.empty()) return std::nullopt;
  Vec sum = Vec::Zero(states.rows());
  for (size_t t : span) sum += states.col(static_cast<Eigen::Index>(t));
  return Vec(sum / static_cast<double>(span.size()));
}

RecordView MakeRecordView(const PolicyState& policy, const Serializer& serializer,
                          std::vector<int> tokens) {
  RecordView view;
  view.states = EmbedSequence(policy, tokens);
  ParseOutcome parsed = serializer.Deserialize(tokens);
  if (auto* ok = std::get_if<ParsedRecord>(&parsed)) view.parsed = std::move(ok->record);
  view.tokens = std::move(tokens);
  return view;
}

DiscriminatorEnsemble::DiscriminatorEnsemble(int vocab, int generator_hidden,
                                             int max_clause_tokens,
                                             const DiscriminatorConfig& config, uint64_t seed)
    : config_(config) {
  Rng base(seed);
  ScorerSpec token;
  token.architecture = Architecture::kBiRnn;
  token.vocab = vocab;
  token.embed = config.embed;
  token.hidden = config.hidden;
  Rng r0 = base.Fork(kTokenLevel);
  token_ = BiRnnScorer(token, stores_[kTokenLevel], "d_token", &r0);

  ScorerSpec sentence;
  sentence.architecture = Architecture::kEmbeddingMlp;
  sentence.vocab = vocab;
  sentence.embed = config.embed;
  sentence.widths = config.widths;
  sentence.max_positions = std::max(1, max_clause_tokens);
  Rng r1 = base.Fork(kSentenceLevel);
  sentence_ = ClauseScorer(sentence, stores_[kSentenceLevel], "d_sent", &r1);

  ScorerSpec feature;
  feature.architecture = Architecture::kMlp;
  feature.input_dim = 2 * generator_hidden;
  feature.widths = config.widths;
  Rng r2 = base.Fork(kFeatureLevel);
  feature_ = MlpScorer(feature, stores_[kFeatureLevel], "d_feat", &r2);

  ScorerSpec row = feature;
  row.input_dim = generator_hidden;
  Rng r3 = base.Fork(kRowLevel);
  row_ = MlpScorer(row, stores_[kRowLevel], "d_row", &r3);
}

LevelBatch CollectLevelInputs(const std::vector<const RecordView*>& records,
                              const CriticalPairs& pairs, int generator_hidden) {
  LevelBatch batch;
  std::vector<Vec> pair_cols, row_cols;
  for (const RecordView* r : records) {
    batch.token_records.push_back(r);
    if (!r->parsed) continue;
    const SerializedRecord& sr = *r->parsed;
    for (const Clause& c : sr.clauses) {
      batch.clauses.emplace_back(r->tokens.begin() + static_cast<long>(c.begin),
                                 r->tokens.begin() + static_cast<long>(c.end));
    }
    for (const CriticalPair& p : pairs.pairs) {
      auto ha = PoolFeatureEmbedding(r->states, sr.value_spans[p.a]);
      auto hb = PoolFeatureEmbedding(r->states, sr.value_spans[p.b]);
      if (!ha || !hb) continue;
      Vec v(2 * generator_hidden);
      v << *ha, *hb;
      pair_cols.push_back(std::move(v));
    }
    row_cols.push_back(r->states.rowwise().mean());
  }
  batch.pairs = ColumnsOf(pair_cols, 2 * generator_hidden);
  batch.rows = ColumnsOf(row_cols, generator_hidden);
  return batch;
}

ScoreBreakdown DiscriminatorEnsemble::Score(const RecordView& record,
                                            const CriticalPairs& pairs) const {
  ScoreBreakdown out;
  out.malformed = !record.parsed.has_value();
  if (config_.enabled(kTokenLevel)) {
    out.token_scores = ToVector(token_.Forward(stores_[kTokenLevel], record.tokens, nullptr));
    out.aggregated[kTokenLevel] = Mean(out.token_scores);
  }
  const bool feature_possible = config_.enabled(kFeatureLevel) && !pairs.empty();
  if (out.malformed) {
    if (config_.enabled(kSentenceLevel)) out.aggregated[kSentenceLevel] = kScoreFloor;
    if (feature_possible) out.aggregated[kFeatureLevel] = kScoreFloor;
    if (config_.enabled(kRowLevel)) out.aggregated[kRowLevel] = kScoreFloor;
    return out;
  }
  const Eigen::Index h = record.states.rows();
  LevelBatch in = CollectLevelInputs({&record}, pairs, static_cast<int>(h));
  if (config_.enabled(kSentenceLevel) && !in.clauses.empty()) {
    out.sentence_scores = ToVector(sentence_.Forward(stores_[kSentenceLevel], in.clauses, nullptr));
    out.aggregated[kSentenceLevel] = Mean(out.sentence_scores);
  }
  if (feature_possible && in.pairs.cols() > 0) {
    out.feature_scores = ToVector(feature_.Forward(stores_[kFeatureLevel], in.pairs, nullptr));
    out.aggregated[kFeatureLevel] = Mean(out.feature_scores);
  }
  if (config_.enabled(kRowLevel)) {
    out.row_score = row_.Forward(stores_[kRowLevel], in.rows, nullptr)(0, 0);
    out.aggregated[kRowLevel] = *out.row_score;
  }
  return out;
}

double BinaryCrossEntropy(std::span<const double> real, std::span<const double> fake) {
  double r = 0.0, f = 0.0;
  for (double p : real) r -= std::log(Clamp(p));
  for (double p : fake) f -= std::log(1.0 - Clamp(p));
  return r / static_cast<double>(real.size()) + f / static_cast<double>(fake.size());
}

DiscriminatorLoss CombineLevelLosses(const std::array<std::vector<double>, kNumLevels>& real,
                                     const std::array<std::vector<double>, kNumLevels>& fake,
                                     const LevelArray& mu) {
  DiscriminatorLoss loss;
  for (size_t k = 0; k < kNumLevels; ++k) {
    if (mu[k] <= 0.0 || real[k].empty() || fake[k].empty()) continue;
    const double l = BinaryCrossEntropy(real[k], fake[k]);
    loss.per_level[k] = l;
    loss.total += mu[k] * l;
  }
  return loss;
}

DiscriminatorLoss DiscriminatorMinibatch(DiscriminatorEnsemble& ens,
                                         const std::vector<const RecordView*>& real,
                                         const std::vector<const RecordView*>& fake,
                                         const CriticalPairs& pairs, int generator_hidden,
                                         bool step) {
  const DiscriminatorConfig& cfg = ens.config();
  const LevelBatch in_real = CollectLevelInputs(real, pairs, generator_hidden);
  const LevelBatch in_fake = CollectLevelInputs(fake, pairs, generator_hidden);
  std::array<std::vector<double>, kNumLevels> real_scores, fake_scores;

  if (cfg.mu[kTokenLevel] > 0.0 && !real.empty() && !fake.empty()) {
    ParamStore& store = ens.store(kTokenLevel);
    std::vector<BiRnnScorer::Tape> real_tapes(real.size()), fake_tapes(fake.size());
    for (size_t i = 0; i < real.size(); ++i) {
      const Mat p = ens.token().Forward(store, real[i]->tokens, &real_tapes[i]);
      real_scores[kTokenLevel].insert(real_scores[kTokenLevel].end(), p.data(), p.data() + p.size());
    }
    for (size_t i = 0; i < fake.size(); ++i) {
      const Mat p = ens.token().Forward(store, fake[i]->tokens, &fake_tapes[i]);
      fake_scores[kTokenLevel].insert(fake_scores[kTokenLevel].end(), p.data(), p.data() + p.size());
    }
    if (step) {
      const double wr = cfg.mu[kTokenLevel] / static_cast<double>(real_scores[kTokenLevel].size());
      const double wf = cfg.mu[kTokenLevel] / static_cast<double>(fake_scores[kTokenLevel].size());
      for (auto& t : real_tapes) ens.token().Backward(store, t, BceUpstream(t.probs, true, wr));
      for (auto& t : fake_tapes) ens.token().Backward(store, t, BceUpstream(t.probs, false, wf));
    }
  }

  if (cfg.mu[kSentenceLevel] > 0.0 && !in_real.clauses.empty() && !in_fake.clauses.empty()) {
    ParamStore& store = ens.store(kSentenceLevel);
    ClauseScorer::Tape tr, tf;
    const Mat pr = ens.sentence().Forward(store, in_real.clauses, &tr);
    const Mat pf = ens.sentence().Forward(store, in_fake.clauses, &tf);
    real_scores[kSentenceLevel] = ToVector(pr);
    fake_scores[kSentenceLevel] = ToVector(pf);
    if (step) {
      const double mu = cfg.mu[kSentenceLevel];
      ens.sentence().Backward(store, tr, BceUpstream(pr, true, mu / static_cast<double>(pr.size())));
      ens.sentence().Backward(store, tf, BceUpstream(pf, false, mu / static_cast<double>(pf.size())));
    }
  }

  auto mlp_level = [&](size_t level, const MlpScorer& scorer, const Mat& xr, const Mat& xf) {
    if (cfg.mu[level] <= 0.0 || xr.cols() == 0 || xf.cols() == 0) return;
    ParamStore& store = ens.store(level);
    MlpScorer::Tape tr, tf;
    const Mat pr = scorer.Forward(store, xr, &tr);
    const Mat pf = scorer.Forward(store, xf, &tf);
    real_scores[level] = ToVector(pr);
    fake_scores[level] = ToVector(pf);
    if (step) {
      scorer.Backward(store, tr, BceUpstream(pr, true, cfg.mu[level] / static_cast<double>(pr.size())));
      scorer.Backward(store, tf, BceUpstream(pf, false, cfg.mu[level] / static_cast<double>(pf.size())));
    }
  };
  if (!pairs.empty()) mlp_level(kFeatureLevel, ens.feature(), in_real.pairs, in_fake.pairs);
  mlp_level(kRowLevel, ens.row(), in_real.rows, in_fake.rows);

  DiscriminatorLoss loss = CombineLevelLosses(real_scores, fake_scores, cfg.mu);
  if (!std::isfinite(loss.total)) throw NonFiniteError("non-finite discriminator loss", "discriminators");
  if (step) {
    for (size_t k = 0; k < kNumLevels; ++k) {
      if (!loss.per_level[k]) continue;
      AdamStep(ens.store(k), cfg.learning_rate);
      SpectralNormalizeAll(ens.store(k));
    }
  }
  return loss;
}

std::vector<DiscriminatorLoss> TrainDiscriminators(DiscriminatorEnsemble& ens,
                                                   const std::vector<RecordView>& real,
                                                   const std::vector<RecordView>& fake,
                                                   const CriticalPairs& pairs,
                                                   int generator_hidden, int steps, Rng& rng) {
  std::vector<DiscriminatorLoss> trace;
  if (real.empty() || fake.empty()) return trace;
  const auto n = static_cast<size_t>(std::max(1, ens.config().batch_size));
  for (int s = 0; s < steps; ++s) {
    std::vector<const RecordView*> rb, fb;
    for (size_t i = 0; i < n; ++i) rb.push_back(&real[rng.Index(real.size())]);
    for (size_t i = 0; i < n; ++i) fb.push_back(&fake[rng.Index(fake.size())]);
    trace.push_back(DiscriminatorMinibatch(ens, rb, fb, pairs, generator_hidden, true));
  }
  return trace;
}

}  // namespace tabgen
