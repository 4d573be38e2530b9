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

#include <cmath>

#include "gtest/gtest.h"
#include "tabgen/checkpoint.h"
#include "tabgen/fixtures.h"

namespace tabgen {
namespace {

class DiscriminatorTest : public ::testing::Test {
 protected:
  void SetUp() override {
    train_ = Standardize(ParseCsv(ToyCsv(80, 0.2, 7)));
    serializer_ = std::make_unique<Serializer>(Serializer::ForDataset(train_));
    PolicyConfig pc;
    pc.embed = 8;
    pc.hidden = kHidden;
    pc.value_widths = {4};
    policy_ = PolicyState(Vocab(), pc, 1);
    pairs_ = ExtractCriticalPairs(ComputeAssociationMatrix(train_), 0.01, 3, train_.schema.label);
    for (size_t i = 0; i < train_.rows.size(); ++i) {
      real_.push_back(MakeRecordView(policy_, *serializer_, serializer_->Serialize(train_.rows[i]).tokens));
    }
  }

  int Vocab() const { return static_cast<int>(serializer_->vocab().size()); }

  DiscriminatorConfig SmallConfig() const {
    DiscriminatorConfig c;
    c.embed = 8;
    c.hidden = 8;
    c.widths = {8};
    c.batch_size = 16;
    return c;
  }

  DiscriminatorEnsemble Ensemble(const DiscriminatorConfig& c, uint64_t seed = 4) const {
    return DiscriminatorEnsemble(Vocab(), kHidden, static_cast<int>(serializer_->max_clause_length()),
                                 c, seed);
  }

  // Replaces every value token of continuous features by a name token.
  RecordView Corrupt(size_t i, Rng& rng) const {
    SerializedRecord sr = serializer_->Serialize(train_.rows[i]);
    const auto& names = train_.schema;
    for (size_t j = 0; j < names.size(); ++j) {
      if (!names[j].is_continuous()) continue;
      for (size_t pos : sr.value_spans[j]) {
        sr.tokens[pos] = serializer_->vocab().Id(names[rng.Index(names.size())].name);
      }
    }
    return MakeRecordView(policy_, *serializer_, sr.tokens);
  }

  static constexpr int kHidden = 10;
  Dataset train_;
  std::unique_ptr<Serializer> serializer_;
  PolicyState policy_;
  CriticalPairs pairs_;
  std::vector<RecordView> real_;
};

double PlainMean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

TEST_F(DiscriminatorTest, EmbedSequenceShapeDeterminismAndRestore) {
  const auto tokens = serializer_->Serialize(train_.rows[0]).tokens;
  const Mat h = EmbedSequence(policy_, tokens);
  EXPECT_EQ(h.cols(), static_cast<Eigen::Index>(tokens.size()));
  EXPECT_EQ(h.rows(), kHidden);
  EXPECT_EQ(EmbedSequence(policy_, tokens), h);

  PolicyState restored(Vocab(), policy_.config(), 77);
  ParamStoreFromJson(ParamStoreToJson(policy_.theta()), restored.theta());
  EXPECT_EQ(EmbedSequence(restored, tokens), h);

  const std::vector<int> bad = {Vocab()};
  EXPECT_THROW(EmbedSequence(policy_, bad), VocabError);
}

TEST(PoolTest, SingletonConstantAndBruteForce) {
  Rng rng(3);
  Mat h(4, 7);
  for (Eigen::Index i = 0; i < h.size(); ++i) h(i) = rng.Normal();
  const std::vector<size_t> one = {4};
  EXPECT_EQ(*PoolFeatureEmbedding(h, one), Vec(h.col(4)));

  Mat c(3, 5);
  Vec v(3);
  v << 0.25, -1.5, 2.0;
  for (Eigen::Index t = 0; t < 5; ++t) c.col(t) = v;
  const std::vector<size_t> all = {0, 1, 2, 3, 4};
  EXPECT_TRUE(PoolFeatureEmbedding(c, all)->isApprox(v, 1e-15));

  const std::vector<size_t> span = {2, 3, 5};
  const Vec pooled = *PoolFeatureEmbedding(h, span);
  for (Eigen::Index r = 0; r < 4; ++r) {
    EXPECT_NEAR(pooled(r), (h(r, 2) + h(r, 3) + h(r, 5)) / 3.0, 1e-12);
  }
  EXPECT_FALSE(PoolFeatureEmbedding(h, std::vector<size_t>{}).has_value());
}

TEST_F(DiscriminatorTest, FreshEnsembleScoresOneHalfEverywhere) {
  const DiscriminatorEnsemble ens = Ensemble(SmallConfig());
  ASSERT_FALSE(pairs_.empty());
  const ScoreBreakdown b = ens.Score(real_[0], pairs_);
  EXPECT_FALSE(b.malformed);
  EXPECT_EQ(b.token_scores.size(), real_[0].tokens.size());
  EXPECT_EQ(b.sentence_scores.size(), train_.schema.size());
  EXPECT_FALSE(b.feature_scores.empty());
  for (double s : b.token_scores) EXPECT_EQ(s, 0.5);
  for (double s : b.sentence_scores) EXPECT_EQ(s, 0.5);
  for (double s : b.feature_scores) EXPECT_EQ(s, 0.5);
  EXPECT_EQ(*b.row_score, 0.5);
  for (const auto& a : b.aggregated) EXPECT_EQ(*a, 0.5);
}

TEST_F(DiscriminatorTest, AggregatesAreExactMeansAfterTraining) {
  DiscriminatorEnsemble ens = Ensemble(SmallConfig());
  Rng rng(5);
  std::vector<RecordView> fake;
  for (size_t i = 0; i < 20; ++i) fake.push_back(Corrupt(i, rng));
  TrainDiscriminators(ens, real_, fake, pairs_, kHidden, 5, rng);
  for (size_t i = 0; i < 10; ++i) {
    const ScoreBreakdown b = ens.Score(real_[i], pairs_);
    EXPECT_EQ(*b.aggregated[kTokenLevel], PlainMean(b.token_scores));
    EXPECT_EQ(*b.aggregated[kSentenceLevel], PlainMean(b.sentence_scores));
    EXPECT_EQ(*b.aggregated[kFeatureLevel], PlainMean(b.feature_scores));
    EXPECT_EQ(*b.aggregated[kRowLevel], *b.row_score);
    for (const auto& list : {b.token_scores, b.sentence_scores, b.feature_scores}) {
      for (double s : list) {
        EXPECT_GT(s, 0.0);
        EXPECT_LT(s, 1.0);
      }
    }
  }
}

TEST_F(DiscriminatorTest, NoCriticalPairsDropsFeatureLevel) {
  const DiscriminatorEnsemble ens = Ensemble(SmallConfig());
  const ScoreBreakdown b = ens.Score(real_[0], CriticalPairs{});
  EXPECT_TRUE(b.feature_scores.empty());
  EXPECT_FALSE(b.aggregated[kFeatureLevel].has_value());
  EXPECT_TRUE(b.aggregated[kTokenLevel].has_value());
}

TEST_F(DiscriminatorTest, MalformedRecordGetsFloorAboveTokenLevel) {
  const DiscriminatorEnsemble ens = Ensemble(SmallConfig());
  std::vector<int> tokens = serializer_->Serialize(train_.rows[0]).tokens;
  tokens.resize(tokens.size() - 4);
  const RecordView view = MakeRecordView(policy_, *serializer_, tokens);
  EXPECT_FALSE(view.parsed.has_value());
  const ScoreBreakdown b = ens.Score(view, pairs_);
  EXPECT_TRUE(b.malformed);
  EXPECT_EQ(b.token_scores.size(), tokens.size());
  EXPECT_EQ(*b.aggregated[kTokenLevel], 0.5);
  EXPECT_EQ(*b.aggregated[kSentenceLevel], kScoreFloor);
  EXPECT_EQ(*b.aggregated[kFeatureLevel], kScoreFloor);
  EXPECT_EQ(*b.aggregated[kRowLevel], kScoreFloor);
}

TEST(BceTest, HandValues) {
  const std::vector<double> half = {0.5};
  EXPECT_NEAR(BinaryCrossEntropy(half, half), 2.0 * std::log(2.0), 1e-15);
  const std::vector<double> one = {1.0}, zero = {0.0};
  EXPECT_NEAR(BinaryCrossEntropy(one, zero), 2e-7, 1e-12);

  // -ln r = 0.5 and -ln(1 - f) = 0.5 give a level loss of 1.
  std::array<std::vector<double>, kNumLevels> real, fake;
  for (size_t k = 0; k < kNumLevels; ++k) {
    real[k] = {std::exp(-0.5)};
    fake[k] = {1.0 - std::exp(-0.5)};
  }
  const DiscriminatorLoss l = CombineLevelLosses(real, fake, {1.0, 1.0, 1.0, 1.0});
  EXPECT_NEAR(l.total, 4.0, 1e-12);
  for (const auto& p : l.per_level) EXPECT_NEAR(*p, 1.0, 1e-12);

  fake[kRowLevel].clear();
  const DiscriminatorLoss skipped = CombineLevelLosses(real, fake, {1.0, 1.0, 1.0, 1.0});
  EXPECT_FALSE(skipped.per_level[kRowLevel].has_value());
  EXPECT_NEAR(skipped.total, 3.0, 1e-12);
}

TEST_F(DiscriminatorTest, DisabledLevelLeavesOthersBitIdentical) {
  Rng rng(8);
  std::vector<RecordView> fake;
  for (size_t i = 0; i < 10; ++i) fake.push_back(Corrupt(i, rng));
  for (size_t off = 0; off < kNumLevels; ++off) {
    DiscriminatorConfig all = SmallConfig();
    DiscriminatorConfig less = all;
    less.mu[off] = 0.0;
    less.lambda[off] = 0.0;
    DiscriminatorEnsemble a = Ensemble(all), b = Ensemble(less);
    Rng ra(2), rb(2);
    TrainDiscriminators(a, real_, fake, pairs_, kHidden, 3, ra);
    TrainDiscriminators(b, real_, fake, pairs_, kHidden, 3, rb);
    for (size_t i = 0; i < 5; ++i) {
      const ScoreBreakdown sa = a.Score(fake[i], pairs_), sb = b.Score(fake[i], pairs_);
      EXPECT_FALSE(sb.aggregated[off].has_value());
      for (size_t k = 0; k < kNumLevels; ++k) {
        if (k != off) EXPECT_EQ(sa.aggregated[k], sb.aggregated[k]) << "level " << k << " off " << off;
      }
    }
  }
}

TEST_F(DiscriminatorTest, OneStepDecreasesBatchLoss) {
  DiscriminatorConfig c = SmallConfig();
  c.learning_rate = 1e-4;
  DiscriminatorEnsemble ens = Ensemble(c);
  Rng rng(6);
  std::vector<const RecordView*> real, fake_ptrs;
  std::vector<RecordView> fake;
  for (size_t i = 0; i < 4; ++i) fake.push_back(Corrupt(i, rng));
  // Well-formed fakes with flipped labels keep every level active.
  for (size_t i = 40; i < 44; ++i) {
    Row row = train_.rows[i];
    row[train_.schema.label] = 1.0 - row[train_.schema.label];
    fake.push_back(MakeRecordView(policy_, *serializer_, serializer_->Serialize(row).tokens));
  }
  for (size_t i = 0; i < 8; ++i) {
    real.push_back(&real_[i + 8]);
    fake_ptrs.push_back(&fake[i]);
  }
  // Move off the symmetric starting point, then run the power iteration to
  // its fixed point so that normalization after a step only rescales by
  // 1 + O(learning rate).
  DiscriminatorMinibatch(ens, real, fake_ptrs, pairs_, kHidden, true);
  for (int i = 0; i < 200; ++i) {
    for (size_t k = 0; k < kNumLevels; ++k) SpectralNormalizeAll(ens.store(k));
  }
  for (int step = 0; step < 3; ++step) {
    const DiscriminatorLoss before = DiscriminatorMinibatch(ens, real, fake_ptrs, pairs_, kHidden, true);
    const DiscriminatorLoss after = DiscriminatorMinibatch(ens, real, fake_ptrs, pairs_, kHidden, false);
    for (const auto& level : before.per_level) EXPECT_TRUE(level.has_value());
    EXPECT_LT(after.total, before.total);
    EXPECT_TRUE(std::isfinite(after.total));
  }
}

TEST_F(DiscriminatorTest, ZeroStepsLeaveEnsembleUnchanged) {
  DiscriminatorEnsemble ens = Ensemble(SmallConfig());
  const nlohmann::json before = ParamStoreToJson(ens.store(kTokenLevel));
  Rng rng(1);
  EXPECT_TRUE(TrainDiscriminators(ens, real_, real_, pairs_, kHidden, 0, rng).empty());
  EXPECT_EQ(ParamStoreToJson(ens.store(kTokenLevel)), before);
}

TEST_F(DiscriminatorTest, TokenLevelSeparatesCorruptedNumerics) {
  DiscriminatorConfig c = SmallConfig();
  c.mu = {1.0, 0.0, 0.0, 0.0};
  c.lambda = {1.0, 0.0, 0.0, 0.0};
  DiscriminatorEnsemble ens = Ensemble(c);
  Rng rng(12);
  std::vector<RecordView> fake;
  for (size_t i = 0; i < train_.rows.size(); ++i) fake.push_back(Corrupt(i, rng));
  const size_t n_fit = 60;
  std::vector<RecordView> real_fit(real_.begin(), real_.begin() + n_fit);
  std::vector<RecordView> fake_fit(fake.begin(), fake.begin() + n_fit);
  const auto trace = TrainDiscriminators(ens, real_fit, fake_fit, pairs_, kHidden, 200, rng);
  ASSERT_EQ(trace.size(), 200u);
  for (const auto& l : trace) EXPECT_TRUE(std::isfinite(l.total));
  size_t correct = 0, total = 0;
  for (size_t i = n_fit; i < real_.size(); ++i, total += 2) {
    correct += *ens.Score(real_[i], pairs_).aggregated[kTokenLevel] > 0.5;
    correct += *ens.Score(fake[i], pairs_).aggregated[kTokenLevel] < 0.5;
  }
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(total), 0.95);
}

}  // namespace
}  // namespace tabgen
