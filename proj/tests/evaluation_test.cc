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

#include "tabgen/evaluation.h"

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "tabgen/common.h"
#include "tabgen/fixtures.h"

namespace tabgen {
namespace {

Dataset TwoNumeric(const std::string& rows) {
  nlohmann::json hints = {{"features", {{{"name", "a"}, {"kind", "continuous"}},
                                        {{"name", "b"}, {"kind", "continuous"}}}},
                          {"label", "y"}};
  return ParseCsv("a,b,y\n" + rows, hints);
}

TEST(DcrTest, HandEuclideanAndCopies) {
  Dataset real = TwoNumeric("0,0,n\n10,10,p\n");
  Dataset syn = TwoNumeric("3,4,n\n0,0,n\n");
  real.standardized = syn.standardized = true;
  const auto d = NearestRealDistances(real, syn);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_DOUBLE_EQ(d[0], 5.0);
  EXPECT_EQ(d[1], 0.0);
}

TEST(DcrTest, CategoricalMismatchAndMissing) {
  Schema schema;
  FeatureSpec x;
  x.name = "x";
  x.kind = FeatureKind::kContinuous;
  FeatureSpec c;
  c.name = "c";
  c.vocabulary = {"u", "v"};
  schema.features = {x, c};
  EXPECT_DOUBLE_EQ(MixedDistance({0.0, 0.0}, {0.0, 1.0}, schema), 1.0);
  EXPECT_DOUBLE_EQ(MixedDistance({2.0, 1.0}, {0.0, 0.0}, schema), std::sqrt(5.0));
  EXPECT_DOUBLE_EQ(MixedDistance({kMissing, 1.0}, {kMissing, 1.0}, schema), 0.0);
  EXPECT_DOUBLE_EQ(MixedDistance({kMissing, 1.0}, {7.0, 1.0}, schema), 1.0);
}

TEST(DcrTest, SummaryOrderStatistics) {
  Dataset raw = ParseCsv(ToyCsv(120, 0.2, 3));
  auto [a, b] = Split(raw, 0.5, 4);
  const Dataset real = Standardize(a);
  const Dataset syn = ApplyStandardization(b, real.schema);
  const DcrSummary s = Dcr(real, syn);
  ASSERT_EQ(s.distances.size(), syn.rows.size());
  EXPECT_LE(s.min, s.p5);
  EXPECT_LE(s.p5, s.median);
  for (double d : s.distances) EXPECT_GE(d, s.min);
}

TEST(DcrTest, LeaveOneOutRadiusExcludesSelf) {
  Dataset real = TwoNumeric("0,0,n\n3,4,p\n0,1,n\n");
  real.standardized = true;
  // Pairwise distances: d(0,1) = 5, d(0,2) = 1, d(1,2) = sqrt(18).
  const double d01 = 5.0, d02 = 1.0, d12 = std::sqrt(9.0 + 9.0);
  std::vector<double> nn{std::min(d01, d02), std::min(d01, d12), std::min(d02, d12)};
  EXPECT_DOUBLE_EQ(LeaveOneOutRadius(real, 50.0), Percentile(nn, 50.0));
  EXPECT_GT(LeaveOneOutRadius(real, 0.0), 0.0);
}

TEST(CorrelationFidelityTest, IdentityShuffleAndFormula) {
  Dataset raw = ParseCsv(PlantedCsv(400, 2));
  const CriticalPairs pairs =
      ExtractCriticalPairs(ComputeAssociationMatrix(raw), 0.3, 10, raw.schema.label);
  ASSERT_FALSE(pairs.empty());
  EXPECT_EQ(*CorrelationFidelity(raw, raw, pairs), 1.0);

  Dataset shuffled = raw;
  Rng rng(1);
  std::vector<size_t> perm(raw.rows.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  rng.Shuffle(perm);
  for (size_t i = 0; i < perm.size(); ++i) shuffled.rows[i][1] = raw.rows[perm[i]][1];
  EXPECT_LT(*CorrelationFidelity(raw, shuffled, pairs), 1.0);

  CriticalPairs one;
  one.pairs = {{0, 1, 0.8}};
  const double cr = Pearson(raw.Column(0), raw.Column(1));
  const double cs = Pearson(shuffled.Column(0), shuffled.Column(1));
  EXPECT_NEAR(*CorrelationFidelity(raw, shuffled, one), 1.0 - std::fabs(cr - cs), 1e-12);

  EXPECT_FALSE(CorrelationFidelity(raw, shuffled, CriticalPairs{}).has_value());
}

TEST(DeltaGainTest, TableValues) {
  const std::map<std::string, double> heart{{"b1", 0.778}, {"b2", 0.655}, {"b3", 0.665},
                                            {"b4", 0.877}, {"b5", 0.548}, {"b6", 0.598},
                                            {"b7", 0.839}};
  EXPECT_NEAR(DeltaGain(1.000, heart), 0.123, 1e-12);
  EXPECT_NEAR(DeltaGain(0.865, {{"best", 0.969}, {"other", 0.5}}), -0.104, 1e-12);
  EXPECT_EQ(DeltaGain(0.7, {{"same", 0.7}}), 0.0);
  EXPECT_THROW(DeltaGain(0.7, {}), ConfigError);
}

TEST(MacroF1Test, HandConfusionMatrices) {
  EXPECT_DOUBLE_EQ(MacroF1({0, 1, 1, 0}, {0, 1, 1, 0}), 1.0);
  // Class 0: tp 1, fn 1 -> 2/3. Class 1: tp 2, fp 1 -> 4/5.
  EXPECT_NEAR(MacroF1({0, 0, 1, 1}, {0, 1, 1, 1}), (2.0 / 3.0 + 0.8) / 2.0, 1e-15);
  // Single-class predictions on a balanced binary test.
  const double degenerate = MacroF1({0, 0, 1, 1}, {0, 0, 0, 0});
  EXPECT_NEAR(degenerate, (2.0 / 3.0) / 2.0, 1e-15);
  EXPECT_LE(degenerate, 0.5);
}

TEST(ForestTest, DeterministicAndBetterThanMajority) {
  Dataset raw = ParseCsv(ToyCsv(300, 0.2, 7));
  auto [train_raw, test_raw] = Split(raw, 0.3, 1);
  const Dataset train = Standardize(train_raw);
  const Dataset test = ApplyStandardization(test_raw, train.schema);
  RandomForest a, b;
  a.Fit(train, {}, 9);
  b.Fit(train, {}, 9);
  const auto pa = a.PredictAll(test);
  EXPECT_EQ(pa, b.PredictAll(test));
  std::vector<int> truth;
  for (size_t i = 0; i < test.rows.size(); ++i) truth.push_back(test.LabelOf(i));
  const std::vector<int> majority(truth.size(), 0);
  EXPECT_GT(MacroF1(truth, pa), MacroF1(truth, majority) + 0.1);
}

TEST(TstrTest, FoldsAreStratifiedAndRealTrainMatchesBaseline) {
  Dataset raw = ParseCsv(ToyCsv(300, 0.2, 7));
  auto [train_raw, test_raw] = Split(raw, 0.3, 1);
  const Dataset train = Standardize(train_raw);
  const Dataset test = ApplyStandardization(test_raw, train.schema);

  const auto folds = StratifiedFolds(test, 5, 3);
  std::vector<std::vector<int>> per(5, std::vector<int>(2, 0));
  for (size_t i = 0; i < folds.size(); ++i) ++per[static_cast<size_t>(folds[i])][static_cast<size_t>(test.LabelOf(i))];
  for (int c = 0; c < 2; ++c) {
    int lo = 1 << 30, hi = 0;
    for (const auto& f : per) {
      lo = std::min(lo, f[static_cast<size_t>(c)]);
      hi = std::max(hi, f[static_cast<size_t>(c)]);
    }
    EXPECT_LE(hi - lo, 1);
  }

  const TstrResult oracle = Tstr(train, test, 5, 11);
  ASSERT_EQ(oracle.fold_f1.size(), 5u);
  for (double f : oracle.fold_f1) {
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
  }
  const TstrResult again = Tstr(train, test, 5, 11);
  EXPECT_EQ(oracle.fold_f1, again.fold_f1);
  EXPECT_TRUE(oracle.missing_classes.empty());
}

TEST(TstrTest, MissingSyntheticClassIsFlagged) {
  Dataset raw = ParseCsv(ToyCsv(200, 0.2, 7));
  const Dataset ds = Standardize(raw);
  Dataset majority_only = ds;
  std::erase_if(majority_only.rows, [&](const Row& r) { return r[ds.schema.label] != 0.0; });
  const TstrResult r = Tstr(majority_only, ds, 5, 1);
  ASSERT_EQ(r.missing_classes.size(), 1u);
  EXPECT_LE(r.mean_f1, 0.5);
}

TEST(FaithTest, CompositeIsWeightedSum) {
  EXPECT_NEAR(FaithComposite(0.8750, 0.9839, 0.2303, 0.9920, FaithWeights{}), 0.7703, 1e-4);
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    double w[4], s = 0;
    for (double& x : w) s += (x = rng.Uniform());
    FaithWeights fw{w[0] / s, w[1] / s, w[2] / s, w[3] / s};
    const double c[4] = {rng.Uniform(), rng.Uniform(), rng.Uniform(), rng.Uniform()};
    EXPECT_EQ(FaithComposite(c[0], c[1], c[2], c[3], fw),
              fw.fact * c[0] + fw.align * c[1] + fw.integ * c[2] + fw.track * c[3]);
  }
  EXPECT_THROW((FaithWeights{0.5, 0.5, 0.5, -0.5}).Validate(), ConfigError);
  EXPECT_THROW((FaithWeights{0.3, 0.3, 0.3, 0.3}).Validate(), ConfigError);
}

TEST(FaithTest, AlignNormalizerBoundsDistance) {
  // Opposite off-diagonals of +/-1 reach the bound exactly.
  for (size_t m : {2u, 3u, 6u}) {
    const double fro = std::sqrt(static_cast<double>(m * (m - 1)) * 4.0);
    EXPECT_DOUBLE_EQ(fro / AlignNormalizer(m), 1.0);
  }
}

TEST(FaithTest, CopyOfRealAndSingleViolation) {
  Dataset raw = ParseCsv(ToyCsv(10, 0.2, 5));
  const RuleSet rules = AutoRules(raw);
  const Dataset real_std = Standardize(raw);
  const std::vector<double> zeros(raw.rows.size(), 0.0);
  const FaithReport copy = Faith(raw, raw, zeros, rules, {}, 0.5);
  EXPECT_EQ(copy.fact, 1.0);
  EXPECT_EQ(copy.align, 1.0);
  EXPECT_EQ(copy.integ, 0.0);
  EXPECT_EQ(copy.track, 1.0);
  EXPECT_DOUBLE_EQ(copy.composite, 0.75);

  Dataset one_bad = raw;
  const int age = raw.schema.Find("age");
  ASSERT_GE(age, 0);
  double hi = 0;
  for (const auto& r : raw.rows) hi = std::max(hi, r[static_cast<size_t>(age)]);
  one_bad.rows[3][static_cast<size_t>(age)] = hi + 10.0;
  const FaithReport bad = Faith(raw, one_bad, zeros, rules, {}, 0.5);
  EXPECT_DOUBLE_EQ(bad.fact, 0.9);
  EXPECT_DOUBLE_EQ(bad.track, 0.9);
  EXPECT_EQ(bad.violations[static_cast<size_t>(age)], 1u);
  EXPECT_GE(bad.align, 0.0);
  EXPECT_LE(bad.align, 1.0);
}

TEST(AuditTest, CopyOfRealIsIdentity) {
  Dataset raw = ParseCsv(ToyCsv(150, 0.2, 7));
  const RuleSet rules = AutoRules(raw);
  const CriticalPairs pairs =
      ExtractCriticalPairs(ComputeAssociationMatrix(raw), 0.3, 10, raw.schema.label);
  const AuditReport rep = Audit(raw, raw, rules, pairs, {});
  for (const auto& f : rep.features) {
    if (f.ks) EXPECT_EQ(*f.ks, 0.0);
    EXPECT_LE(f.jsd, 1e-12);
    EXPECT_LE(f.kl, 1e-7);
    EXPECT_LE(f.hellinger, 1e-7);
  }
  if (rep.correlation_fidelity) EXPECT_EQ(*rep.correlation_fidelity, 1.0);
  EXPECT_EQ(rep.faith.integ, 0.0);
  EXPECT_EQ(rep.faith.fact, 1.0);
  EXPECT_EQ(rep.faith.track, 1.0);
  EXPECT_EQ(rep.dcr.median, 0.0);

  const nlohmann::json j = rep.ToJson(rules);
  EXPECT_EQ(j["schema_version"], kAuditSchemaVersion);
  EXPECT_EQ(j["features"].size(), raw.num_features());
  const std::string csv = rep.ToCsv();
  EXPECT_EQ(csv.rfind("feature,type,ks,jsd,kl,hellinger\n", 0), 0u);
  EXPECT_NE(csv.find("higher is better"), std::string::npos);
}

TEST(AuditTest, EmptyPairsReportNotApplicable) {
  Dataset raw = ParseCsv(ToyCsv(60, 0.2, 7));
  const AuditReport rep = Audit(raw, raw, AutoRules(raw), CriticalPairs{}, {});
  EXPECT_FALSE(rep.correlation_fidelity.has_value());
  EXPECT_EQ(rep.ToJson(AutoRules(raw))["correlation_fidelity"], "NOT-APPLICABLE");
}

TEST(AuditTest, TstrAndDeltaWhenHoldoutGiven) {
  Dataset raw = ParseCsv(ToyCsv(200, 0.2, 7));
  auto [train, test] = Split(raw, 0.3, 2);
  AuditOptions opt;
  opt.baselines = {{"base", 0.5}};
  const AuditReport rep = Audit(train, train, AutoRules(train), CriticalPairs{}, opt, &test);
  ASSERT_TRUE(rep.tstr.has_value());
  ASSERT_TRUE(rep.delta.has_value());
  EXPECT_DOUBLE_EQ(*rep.delta, rep.tstr->mean_f1 - 0.5);
}

}  // namespace
}  // namespace tabgen
