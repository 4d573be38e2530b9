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

#include "tabgen/metrics.h"

#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "gtest/gtest.h"
#include "oracles.h"
#include "tabgen/common.h"

namespace tabgen {
namespace {

using namespace oracle;

TEST(KsTest, HandExamples) {
  const std::vector<double> same{1, 2, 3};
  EXPECT_EQ(KsStatistic(same, same), 0.0);
  EXPECT_EQ(KsStatistic(std::vector<double>{1, 2}, std::vector<double>{10, 11}), 1.0);
  EXPECT_NEAR(KsStatistic(std::vector<double>{1, 2, 3}, std::vector<double>{2, 3, 4}), 1.0 / 3.0,
              1e-15);
}

TEST(KsTest, MissingValuesDroppedAndEmptyRejected) {
  const std::vector<double> a{1, kMissing, 2};
  EXPECT_EQ(KsStatistic(a, std::vector<double>{1, 2}), 0.0);
  EXPECT_THROW(KsStatistic(std::vector<double>{}, a), EmptySampleError);
  EXPECT_THROW(KsStatistic(a, std::vector<double>{kMissing}), EmptySampleError);
}

TEST(KsTest, MatchesEcdfEnumeration) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(1 + rng.Index(15)), b(1 + rng.Index(15));
    // Small integer support forces ties.
    for (auto& x : a) x = static_cast<double>(rng.Index(6));
    for (auto& x : b) x = static_cast<double>(rng.Index(6));
    ASSERT_NEAR(KsStatistic(a, b), OracleKs(a, b), 1e-10) << "trial " << trial;
  }
}

TEST(DivergenceTest, HandExamples) {
  const std::vector<double> half{0.5, 0.5}, skew{0.25, 0.75};
  EXPECT_EQ(Jsd(half, half), 0.0);
  EXPECT_NEAR(Jsd(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 1.0, 1e-15);
  EXPECT_NEAR(Jsd(half, skew), 0.0487949406953985, 1e-12);

  EXPECT_NEAR(KlDivergence(half, half), 0.0, 1e-7);
  const double finite = KlDivergence(std::vector<double>{0.5, 0.5}, std::vector<double>{1, 0});
  EXPECT_TRUE(std::isfinite(finite));
  EXPECT_GT(finite, 1.0);
  EXPECT_NEAR(KlDivergence(std::vector<double>{0.9, 0.1}, half), 0.36806418959070114, 1e-12);

  EXPECT_EQ(Hellinger(half, half), 0.0);
  const std::vector<double> ramp = {0.1, 0.2, 0.3, 0.4};
  EXPECT_EQ(Hellinger(ramp, ramp), 0.0);
  EXPECT_NEAR(Hellinger(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 1.0, 1e-15);
  EXPECT_NEAR(Hellinger(half, skew), 0.18459191128251476, 1e-12);
}

TEST(DivergenceTest, MatchesOraclesOnRandomPairs) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = 2 + rng.Index(9);
    const auto p = RandomDistribution(rng, n, true);
    const auto q = RandomDistribution(rng, n, true);
    ASSERT_NEAR(Jsd(p, q), OracleJsd(p, q), 1e-10) << "trial " << trial;
    ASSERT_NEAR(Hellinger(p, q), OracleHellinger(p, q), 1e-10) << "trial " << trial;
    ASSERT_NEAR(KlDivergence(p, q), OracleSmoothedKl(p, q, 1e-8), 1e-6) << "trial " << trial;
  }
}

TEST(DivergenceTest, SymmetricAndBounded) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = 2 + rng.Index(9);
    const auto p = RandomDistribution(rng, n, true);
    const auto q = RandomDistribution(rng, n, true);
    EXPECT_EQ(Jsd(p, q), Jsd(q, p));
    EXPECT_EQ(Hellinger(p, q), Hellinger(q, p));
    EXPECT_GE(Jsd(p, q), 0.0);
    EXPECT_LE(Jsd(p, q), 1.0);
    EXPECT_GE(Hellinger(p, q), 0.0);
    EXPECT_LE(Hellinger(p, q), 1.0);
    EXPECT_GE(KlDivergence(p, q), 0.0);
  }
}

TEST(DivergenceTest, MismatchedBinsRejected) {
  const std::vector<double> a{1.0}, b{0.5, 0.5};
  EXPECT_THROW(Jsd(a, b), ShapeError);
  EXPECT_THROW(KlDivergence(a, b), ShapeError);
  EXPECT_THROW(Hellinger(a, b), ShapeError);
}

FeatureSpec Continuous() {
  FeatureSpec f;
  f.name = "x";
  f.kind = FeatureKind::kContinuous;
  return f;
}

TEST(HistogramTest, ContinuousBinsSpanRealRangeAndClampSynthetic) {
  const std::vector<double> real{0.0, 1.0, 2.0, 10.0};
  const std::vector<double> syn{-5.0, 0.4, 9.99, 50.0, kMissing};
  const HistogramPair h = Histogramize(real, syn, Continuous(), 10);
  ASSERT_EQ(h.p.size(), 10u);
  ASSERT_EQ(h.q.size(), 10u);
  EXPECT_DOUBLE_EQ(h.p[0], 0.25);
  EXPECT_DOUBLE_EQ(h.p[1], 0.25);
  EXPECT_DOUBLE_EQ(h.p[2], 0.25);
  EXPECT_DOUBLE_EQ(h.p[9], 0.25);
  EXPECT_DOUBLE_EQ(h.q[0], 0.5);
  EXPECT_DOUBLE_EQ(h.q[9], 0.5);
}

TEST(HistogramTest, CategoricalBinsFollowVocabulary) {
  FeatureSpec f;
  f.name = "c";
  f.vocabulary = {"a", "b", "c"};
  const HistogramPair h =
      Histogramize(std::vector<double>{0, 0, 2, 2}, std::vector<double>{1, 1, 1, 0}, f);
  EXPECT_EQ(h.p, (std::vector<double>{0.5, 0.0, 0.5}));
  EXPECT_EQ(h.q, (std::vector<double>{0.25, 0.75, 0.0}));
}

TEST(HistogramTest, DistributionsSumToOne) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(1 + rng.Index(40)), b(1 + rng.Index(40));
    for (auto& x : a) x = rng.Normal();
    for (auto& x : b) x = 3.0 * rng.Normal();
    const HistogramPair h = Histogramize(a, b, Continuous());
    double sp = 0, sq = 0;
    for (double x : h.p) sp += x;
    for (double x : h.q) sq += x;
    EXPECT_NEAR(sp, 1.0, 1e-9);
    EXPECT_NEAR(sq, 1.0, 1e-9);
  }
}

TEST(PercentileTest, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(Percentile({4, 1, 3, 2}, 50), 2.5);
  EXPECT_NEAR(Percentile({1, 2, 3, 4}, 5), 1.15, 1e-12);
  EXPECT_EQ(Percentile({7}, 5), 7.0);
  EXPECT_EQ(Percentile({1, 9}, 0), 1.0);
  EXPECT_EQ(Percentile({1, 9}, 100), 9.0);
  EXPECT_THROW(Percentile({}, 50), EmptySampleError);
}

}  // namespace
}  // namespace tabgen
