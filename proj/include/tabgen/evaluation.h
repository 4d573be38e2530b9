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

#ifndef TABGEN_EVALUATION_H_
#define TABGEN_EVALUATION_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabgen/constraints.h"
#include "tabgen/data.h"
#include "tabgen/forest.h"
#include "tabgen/metrics.h"

namespace tabgen {

inline constexpr int kAuditSchemaVersion = 1;

// Distance between two standardized rows: squared z-difference for
// continuous features, 0/1 mismatch for categorical and ordinal ones. A cell
// missing on exactly one side counts as a mismatch of 1.
double MixedDistance(const Row& a, const Row& b, const Schema& schema);

// Nearest-real distance for every synthetic row, by brute force over all
// pairs. Both datasets must be standardized with the same statistics.
std::vector<double> NearestRealDistances(const Dataset& real, const Dataset& synthetic);

// Percentile of leave-one-out nearest-neighbour distances among real rows.
double LeaveOneOutRadius(const Dataset& real, double percentile = 5.0);

struct DcrSummary {
  std::vector<double> distances;
  double min = 0.0;
  double p5 = 0.0;
  double median = 0.0;
};
DcrSummary Dcr(const Dataset& real, const Dataset& synthetic);

// 1 - mean |C_real(a,b) - C_syn(a,b)| over the pairs, clamped to [0, 1];
// nullopt when `pairs` is empty. Inputs share a schema.
std::optional<double> CorrelationFidelity(const Dataset& real, const Dataset& synthetic,
                                          const CriticalPairs& pairs);

// ours - max(baselines). Throws ConfigError when `baselines` is empty.
double DeltaGain(double ours, const std::map<std::string, double>& baselines);

struct TstrResult {
  std::vector<double> fold_f1;
  double mean_f1 = 0.0;
  // Classes present in the real test data but absent from the synthetic set.
  std::vector<std::string> missing_classes;
};
// Fits one forest per fold on `synthetic` (seed + fold) and scores it on the
// matching stratified fold of `real_test`.
TstrResult Tstr(const Dataset& synthetic, const Dataset& real_test, int folds, uint64_t seed,
                const ForestConfig& forest = {});

// Stratified fold assignment (fold index per row), seeded.
std::vector<int> StratifiedFolds(const Dataset& ds, int folds, uint64_t seed);

struct FaithWeights {
  double fact = 0.25;
  double align = 0.25;
  double integ = 0.25;
  double track = 0.25;
  // Throws ConfigError unless all weights are >= 0 and sum to 1 within 1e-9.
  void Validate() const;
  nlohmann::json ToJson() const;
  static FaithWeights FromJson(const nlohmann::json& j);
};

double FaithComposite(double fact, double align, double integ, double track,
                      const FaithWeights& w);

struct FaithReport {
  double fact = 0.0;
  double align = 0.0;
  double integ = 0.0;
  double track = 0.0;
  FaithWeights weights;
  double composite = 0.0;
  // violations[i] counts synthetic rows failing rule i.
  std::vector<size_t> violations;
  double epsilon_priv = 0.0;
  nlohmann::json ToJson(const RuleSet& rules) const;
};

// Frobenius normalizer for two M x M association matrices with unit diagonal.
double AlignNormalizer(size_t m);

// `real_raw` and `synthetic_raw` are in raw units; `real_std` and
// `synthetic_std` hold the same rows standardized with the real statistics.
// `nearest` holds the nearest-real distance of every synthetic row.
FaithReport Faith(const Dataset& real_raw, const Dataset& synthetic_raw,
                  const std::vector<double>& nearest, const RuleSet& rules,
                  const FaithWeights& weights, double epsilon_priv);

struct FeatureDivergence {
  std::string name;
  bool continuous = false;
  std::optional<double> ks;
  double jsd = 0.0;
  double kl = 0.0;
  double hellinger = 0.0;
};

struct AuditOptions {
  int bins = kDefaultBins;
  int folds = 5;
  uint64_t seed = 0;
  // Unset selects LeaveOneOutRadius(real).
  std::optional<double> epsilon_priv;
  FaithWeights weights;
  ForestConfig forest;
  std::map<std::string, double> baselines;
};

struct AuditReport {
  std::vector<FeatureDivergence> features;
  std::optional<double> mean_ks;
  double mean_jsd = 0.0;
  double mean_kl = 0.0;
  double mean_hellinger = 0.0;
  std::optional<double> mean_jsd_numeric;
  std::optional<double> mean_jsd_categorical;
  std::optional<double> correlation_fidelity;
  DcrSummary dcr;
  std::optional<TstrResult> tstr;
  std::optional<double> delta;
  FaithReport faith;
  bool feature_pairs_skip_missing = true;

  nlohmann::json ToJson(const RuleSet& rules) const;
  std::string ToCsv() const;
};

// Per-feature divergences of `synthetic` against `real` (shared schema).
std::vector<FeatureDivergence> MarginalDivergences(const Dataset& real, const Dataset& synthetic,
                                                   int bins = kDefaultBins);

// Full audit over raw-unit datasets sharing a schema; both must be non-empty
// (EmptySampleError). TSTR runs when
// `real_test` is given; delta when options.baselines is non-empty as well.
AuditReport Audit(const Dataset& real, const Dataset& synthetic, const RuleSet& rules,
                  const CriticalPairs& pairs, const AuditOptions& options,
                  const Dataset* real_test = nullptr);

}  // namespace tabgen

#endif  // TABGEN_EVALUATION_H_
