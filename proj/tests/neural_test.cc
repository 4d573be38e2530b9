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

#include "tabgen/neural.h"

#include <cmath>

#include "gtest/gtest.h"

namespace tabgen {
namespace {

ScorerSpec Small(Architecture a) {
  ScorerSpec s;
  s.architecture = a;
  s.vocab = 11;
  s.input_dim = 5;
  s.embed = 6;
  s.hidden = 5;
  s.widths = {4, 3};
  s.max_positions = 4;
  return s;
}

class GradCheckTest : public ::testing::TestWithParam<Architecture> {};

TEST_P(GradCheckTest, PassesOverTenSeeds) {
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    GradCheckReport r = GradCheckScorer(Small(GetParam()), seed, 1e-4);
    EXPECT_TRUE(r.pass) << "seed " << seed << " worst " << r.worst_param << " "
                        << r.worst_relative_error;
  }
}

INSTANTIATE_TEST_SUITE_P(AllArchitectures, GradCheckTest,
                         ::testing::Values(Architecture::kMlp, Architecture::kBiRnn,
                                           Architecture::kCausalRnn,
                                           Architecture::kEmbeddingMlp));

TEST(GradCheckHarnessTest, CorruptedBackwardIsNamed) {
  Rng rng(3);
  ParamStore store;
  Linear layer = Linear::Create(store, "probe", 3, 2, false, &rng);
  Mat x = Mat::Random(3, 4);
  auto loss = [&](bool backward) {
    const Mat y = layer.Forward(store, x);
    if (backward) {
      const Mat dy = Mat::Ones(2, 4);
      layer.Backward(store, x, dy);
      // Wrong rule: doubles the weight gradient.
      store[layer.w].grad *= 2.0;
    }
    return y.sum();
  };
  GradCheckReport bad = GradCheck(store, loss, 1e-4);
  EXPECT_FALSE(bad.pass);
  EXPECT_EQ(bad.worst_param, "probe.w");
  EXPECT_TRUE(GradCheck(store, loss, 1e9).pass);
}

TEST(ForwardTest, ZeroHeadGivesOneHalf) {
  Rng rng(1);
  ParamStore store;
  MlpScorer scorer(Small(Architecture::kMlp), store, "d", &rng);
  Mat x = Mat::Random(5, 3);
  Mat p = scorer.Forward(store, x, nullptr);
  for (Eigen::Index i = 0; i < p.size(); ++i) EXPECT_EQ(p(i), 0.5);
  EXPECT_EQ(p, scorer.Forward(store, x, nullptr));
}

TEST(ForwardTest, LinearLayerHandValue) {
  ParamStore store;
  Linear l = Linear::Create(store, "l", 2, 1, false, nullptr);
  store[l.w].value << 2.0, -1.0;
  store[l.b].value << 0.5;
  Mat x(2, 1);
  x << 3.0, 4.0;
  EXPECT_DOUBLE_EQ(l.Forward(store, x)(0, 0), 2.5);
}

TEST(BackwardTest, LogisticSlopeAtZero) {
  Rng rng(1);
  ParamStore store;
  ScorerSpec spec = Small(Architecture::kMlp);
  spec.widths = {1};
  spec.input_dim = 1;
  MlpScorer scorer(spec, store, "d", &rng);
  MlpScorer::Tape tape;
  Mat x = Mat::Zero(1, 1);
  scorer.Forward(store, x, &tape);
  scorer.Backward(store, tape, Mat::Ones(1, 1));
  // Output bias gradient equals dσ/dz at z = 0.
  EXPECT_DOUBLE_EQ(store[store.Index("d.mlp.out.b")].grad(0, 0), 0.25);
}

TEST(BackwardTest, ZeroUpstreamGivesZeroGradients) {
  Rng rng(2);
  ParamStore store;
  BiRnnScorer scorer(Small(Architecture::kBiRnn), store, "t", &rng);
  for (auto& p : store.params()) InitUniform(p, 0.5, rng);
  BiRnnScorer::Tape tape;
  std::vector<int> ids = {1, 2, 3, 4};
  scorer.Forward(store, ids, &tape);
  scorer.Backward(store, tape, Mat::Zero(1, 4));
  EXPECT_FALSE(store.HasGradient());
}

TEST(TapeTest, ReuseAndStaleAreRejected) {
  Rng rng(2);
  ParamStore store;
  MlpScorer scorer(Small(Architecture::kMlp), store, "d", &rng);
  Mat x = Mat::Random(5, 2);
  MlpScorer::Tape tape;
  scorer.Forward(store, x, &tape);
  scorer.Backward(store, tape, Mat::Ones(1, 2));
  EXPECT_THROW(scorer.Backward(store, tape, Mat::Ones(1, 2)), TapeError);
  scorer.Forward(store, x, &tape);
  AdamStep(store, 1e-3);
  EXPECT_THROW(scorer.Backward(store, tape, Mat::Ones(1, 2)), TapeError);
  MlpScorer::Tape never;
  EXPECT_THROW(scorer.Backward(store, never, Mat::Ones(1, 2)), TapeError);
}

TEST(ShapeTest, MismatchNamesLayer) {
  Rng rng(2);
  ParamStore store;
  MlpScorer scorer(Small(Architecture::kMlp), store, "d", &rng);
  try {
    scorer.Forward(store, Mat::Zero(4, 1), nullptr);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("d.mlp.l0"), std::string::npos) << e.what();
  }
  ScorerSpec bad = Small(Architecture::kMlp);
  bad.widths = {0};
  EXPECT_THROW(MlpScorer(bad, store, "e", &rng), ShapeError);
}

TEST(AdamTest, HandRecursionTwoSteps) {
  ParamStore store;
  const size_t id = store.Add("p", 1, 1);
  store[id].value(0, 0) = 1.0;
  store[id].grad(0, 0) = 0.5;
  AdamStep(store, 0.1);
  EXPECT_NEAR(store[id].value(0, 0), 0.8990000019999999, 1e-15);
  EXPECT_EQ(store[id].grad(0, 0), 0.0);
  store[id].grad(0, 0) = -0.2;
  AdamStep(store, 0.1);
  EXPECT_NEAR(store[id].value(0, 0), 0.8635404181145107, 1e-15);
  EXPECT_EQ(store.step(), 2);
}

TEST(AdamTest, ZeroGradientOnlyDecays) {
  ParamStore store;
  const size_t id = store.Add("p", 2, 1);
  store[id].value << 3.0, -2.0;
  AdamStep(store, 0.1);
  EXPECT_DOUBLE_EQ(store[id].value(0, 0), 3.0 * 0.999);
  EXPECT_DOUBLE_EQ(store[id].value(1, 0), -2.0 * 0.999);
}

TEST(AdamTest, NonFiniteGradientNamesParameter) {
  ParamStore store;
  store.Add("fine", 1, 1);
  const size_t id = store.Add("broken", 1, 1);
  store[id].grad(0, 0) = std::nan("");
  try {
    AdamStep(store, 0.1);
    FAIL() << "expected NonFiniteError";
  } catch (const NonFiniteError& e) {
    EXPECT_EQ(e.component(), "broken");
  }
}

TEST(AdamTest, BitwiseDeterminism) {
  auto run = [] {
    Rng rng(5);
    ParamStore store;
    BiRnnScorer scorer(Small(Architecture::kBiRnn), store, "t", &rng);
    std::vector<int> ids = {3, 1, 4, 1, 5};
    for (int i = 0; i < 3; ++i) {
      BiRnnScorer::Tape tape;
      scorer.Forward(store, ids, &tape);
      scorer.Backward(store, tape, Mat::Ones(1, 5));
      AdamStep(store, 1e-2);
      SpectralNormalizeAll(store);
    }
    return store;
  };
  EXPECT_TRUE(run().ValuesEqual(run()));
}

TEST(SpectralTest, IdentityUnchanged) {
  ParamStore store;
  const size_t id = store.Add("w", 2, 2, true);
  store[id].value = Mat::Identity(2, 2);
  const double sigma = SpectralNormalize(store, id);
  EXPECT_NEAR(sigma, 1.0, 1e-12);
  EXPECT_TRUE(store[id].value.isApprox(Mat::Identity(2, 2), 1e-12));
}

TEST(SpectralTest, DiagonalConverges) {
  ParamStore store;
  const size_t id = store.Add("w", 2, 2, true);
  store[id].value << 4.0, 0.0, 0.0, 1.0;
  for (int i = 0; i < 20; ++i) SpectralNormalize(store, id);
  EXPECT_NEAR(store[id].value(0, 0), 1.0, 1e-9);
  EXPECT_NEAR(store[id].value(1, 1), 0.25, 1e-9);
  EXPECT_EQ(store[id].value(0, 1), 0.0);
}

TEST(SpectralTest, RandomMatricesBoundedBySvdOracle) {
  Rng rng(8);
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    ParamStore store;
    const size_t id = store.Add("w", 8, 8, true);
    InitUniform(store[id], 3.0, rng);
    const Vec before = Eigen::JacobiSVD<Mat>(store[id].value).singularValues();
    for (int i = 0; i < 20; ++i) SpectralNormalize(store, id);
    const double top = Eigen::JacobiSVD<Mat>(store[id].value).singularValues()(0);
    // The power estimate never exceeds the true value.
    EXPECT_GE(top, 1.0 - 1e-12);
    // Twenty steps resolve the top value only when it is separated.
    if (before(1) / before(0) <= 0.8) {
      EXPECT_LE(top, 1.0 + 1e-3) << "trial " << trial;
      ++checked;
    }
  }
  EXPECT_GE(checked, 10) << checked;
}

TEST(SpectralTest, ZeroMatrixUntouched) {
  ParamStore store;
  const size_t id = store.Add("w", 3, 2, true);
  SpectralNormalize(store, id);
  EXPECT_TRUE(store[id].value.isZero(0));
}

TEST(ScorerSpecTest, JsonRoundTrip) {
  for (Architecture a : {Architecture::kMlp, Architecture::kBiRnn, Architecture::kCausalRnn,
                         Architecture::kEmbeddingMlp}) {
    ScorerSpec s = Small(a);
    ScorerSpec back = ScorerSpec::FromJson(s.ToJson());
    EXPECT_EQ(back.architecture, a);
    EXPECT_EQ(back.widths, s.widths);
    EXPECT_EQ(back.max_positions, s.max_positions);
  }
}

TEST(OutputRangeTest, ProbabilitiesStrictlyInsideUnitInterval) {
  Rng rng(4);
  ParamStore store;
  ScorerSpec spec = Small(Architecture::kEmbeddingMlp);
  ClauseScorer scorer(spec, store, "s", &rng);
  for (auto& p : store.params()) InitUniform(p, 2.0, rng);
  Mat p = scorer.Forward(store, {{1, 2}, {3}, {4, 5, 6, 7, 8}}, nullptr);
  EXPECT_GT(p.minCoeff(), 0.0);
  EXPECT_LT(p.maxCoeff(), 1.0);
}

TEST(CausalRnnTest, IncrementalMatchesTeacherForced) {
  Rng rng(6);
  ParamStore store;
  CausalRnn decoder(Small(Architecture::kCausalRnn), store, "pi", &rng);
  for (auto& p : store.params()) InitUniform(p, 0.5, rng);
  std::vector<int> ids = {5, 7, 2, 9};
  Mat states;
  Mat logits = decoder.Forward(store, ids, true, &states, nullptr);
  ASSERT_EQ(states.cols(), 5);
  Vec h = decoder.Advance(store, decoder.start_token(), decoder.InitialState());
  for (size_t t = 0; t < ids.size(); ++t) {
    EXPECT_TRUE(decoder.Logits(store, h).isApprox(logits.col(static_cast<Eigen::Index>(t)), 1e-12));
    h = decoder.Advance(store, ids[t], h);
  }
  EXPECT_TRUE(h.isApprox(states.col(4), 1e-12));
}

TEST(LogSoftmaxTest, ColumnsNormalize) {
  Mat l(3, 2);
  l << 1000, 0, 1001, 1, 999, 2;
  Mat ls = LogSoftmaxColumns(l);
  for (Eigen::Index c = 0; c < 2; ++c) EXPECT_NEAR(ls.col(c).array().exp().sum(), 1.0, 1e-12);
}

}  // namespace
}  // namespace tabgen
