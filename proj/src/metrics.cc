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

#include <algorithm>
#include <cmath>

namespace tabgen {
namespace {

std::vector<double> Present(std::span<const double> v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (double x : v) {
    if (!IsMissing(x)) out.push_back(x);
  }
  return out;
}

void Normalize(std::vector<double>& h) {
  double s = 0.0;
  for (double x : h) s += x;
  if (s > 0.0) {
    for (double& x : h) x /= s;
  }
}

double Log2Ratio(double a, double b) { return std::log2(a / b); }

void RequireSameBins(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ShapeError("distributions have different bin counts");
}

}  // namespace

double KsStatistic(std::span<const double> real, std::span<const double> synthetic) {
  std::vector<double> a = Present(real), b = Present(synthetic);
  if (a.empty() || b.empty()) throw EmptySampleError("KS statistic needs two non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

HistogramPair Histogramize(std::span<const double> real, std::span<const double> synthetic,
                           const FeatureSpec& feature, int bins) {
  HistogramPair h;
  const std::vector<double> a = Present(real), b = Present(synthetic);
  if (!feature.is_continuous()) {
    const size_t n = std::max<size_t>(feature.vocabulary.size(), 1);
    h.p.assign(n, 0.0);
    h.q.assign(n, 0.0);
    for (double x : a) h.p.at(static_cast<size_t>(x)) += 1.0;
    for (double x : b) h.q.at(static_cast<size_t>(x)) += 1.0;
  } else {
    const auto nb = static_cast<size_t>(std::max(bins, 1));
    h.p.assign(nb, 0.0);
    h.q.assign(nb, 0.0);
    double lo = 0.0, hi = 0.0;
    if (!a.empty()) {
      lo = *std::min_element(a.begin(), a.end());
      hi = *std::max_element(a.begin(), a.end());
    }
    const double width = hi > lo ? (hi - lo) / static_cast<double>(nb) : 1.0;
    auto bin = [&](double x) {
      if (!(hi > lo)) return size_t{0};
      const double k = std::floor((x - lo) / width);
      return static_cast<size_t>(std::clamp(k, 0.0, static_cast<double>(nb - 1)));
    };
    for (double x : a) h.p[bin(x)] += 1.0;
    for (double x : b) h.q[bin(x)] += 1.0;
  }
  Normalize(h.p);
  Normalize(h.q);
  return h;
}

double Jsd(std::span<const double> p, std::span<const double> q) {
  RequireSameBins(p, q);
  double d = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    const double tp = p[i] > 0.0 ? p[i] * Log2Ratio(p[i], m) : 0.0;
    const double tq = q[i] > 0.0 ? q[i] * Log2Ratio(q[i], m) : 0.0;
    // A single commutative sum per bin keeps Jsd(p, q) == Jsd(q, p) bitwise.
    d += 0.5 * (tp + tq);
  }
  return std::clamp(d, 0.0, 1.0);
}

double KlDivergence(std::span<const double> p, std::span<const double> q, double smoothing) {
  RequireSameBins(p, q);
  double sp = 0.0, sq = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    sp += p[i] + smoothing;
    sq += q[i] + smoothing;
  }
  double d = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    const double a = (p[i] + smoothing) / sp;
    const double b = (q[i] + smoothing) / sq;
    d += a * std::log(a / b);
  }
  return std::max(d, 0.0);
}

double Hellinger(std::span<const double> p, std::span<const double> q) {
  RequireSameBins(p, q);
  // Equal to sqrt(1 - sum sqrt(p q)), but an ulp of error in that sum would
  // surface as ~1e-8 after the square root.
  double s = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
    s += d * d;
  }
  return std::min(1.0, std::sqrt(0.5 * s));
}

double Percentile(std::vector<double> values, double q) {
  if (values.empty()) throw EmptySampleError("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace tabgen
