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

#ifndef TABGEN_METRICS_H_
#define TABGEN_METRICS_H_

#include <span>
#include <utility>
#include <vector>

#include "tabgen/data.h"

namespace tabgen {

inline constexpr double kKlSmoothing = 1e-8;
inline constexpr int kDefaultBins = 20;

// Sup-norm distance between empirical CDFs. Missing values are dropped.
// Throws EmptySampleError when either side is empty.
double KsStatistic(std::span<const double> real, std::span<const double> synthetic);

struct HistogramPair {
  std::vector<double> p;  // real
  std::vector<double> q;  // synthetic
};

// Categorical: one bin per vocabulary entry. Continuous: `bins` equal-width
// bins over the real range, synthetic values clamped into the edge bins.
// Missing values are dropped; an empty side yields an all-zero vector.
HistogramPair Histogramize(std::span<const double> real, std::span<const double> synthetic,
                           const FeatureSpec& feature, int bins = kDefaultBins);

// Jensen-Shannon divergence in bits.
double Jsd(std::span<const double> p, std::span<const double> q);
// KL(P || Q) after adding `smoothing` to every bin of both and renormalizing.
double KlDivergence(std::span<const double> p, std::span<const double> q,
                    double smoothing = kKlSmoothing);
double Hellinger(std::span<const double> p, std::span<const double> q);

// Linear-interpolation percentile (q in [0, 100]) of a non-empty sample.
double Percentile(std::vector<double> values, double q);

}  // namespace tabgen

#endif  // TABGEN_METRICS_H_
