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

#include "tabgen/forest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "tabgen/common.h"

namespace tabgen {
namespace {

double Gini(const std::vector<double>& counts, double total) {
  if (total <= 0.0) return 0.0;
  double s = 0.0;
  for (double c : counts) s += (c / total) * (c / total);
  return 1.0 - s;
}

}  // namespace

void RandomForest::Fit(const Dataset& ds, const ForestConfig& config, uint64_t seed) {
  if (ds.rows.empty()) throw InsufficientDataError("cannot fit a forest on zero rows");
  classes_ = ds.schema.label_spec().vocabulary.size();
  max_depth_ = config.max_depth;
  columns_.clear();
  categorical_.clear();
  for (size_t j = 0; j < ds.num_features(); ++j) {
    if (j == ds.schema.label) continue;
    columns_.push_back(j);
    categorical_.push_back(!ds.schema[j].is_continuous());
  }
  const size_t m = columns_.size();
  per_split_ = config.features_per_split > 0
                   ? config.features_per_split
                   : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(m)))));
  per_split_ = std::min<int>(per_split_, static_cast<int>(std::max<size_t>(m, 1)));

  // Missing cells: continuous -> 0 (the standardized mean), categorical -> -1.
  std::vector<std::vector<double>> x(ds.rows.size(), std::vector<double>(m));
  std::vector<int> y(ds.rows.size());
  for (size_t i = 0; i < ds.rows.size(); ++i) {
    for (size_t c = 0; c < m; ++c) {
      const double v = ds.rows[i][columns_[c]];
      x[i][c] = IsMissing(v) ? (categorical_[c] ? -1.0 : 0.0) : v;
    }
    y[i] = ds.LabelOf(i);
  }

  Rng rng(seed);
  trees_.assign(static_cast<size_t>(config.trees), Tree{});
  for (auto& tree : trees_) {
    std::vector<size_t> idx(x.size());
    for (auto& i : idx) i = rng.Index(x.size());
    Grow(tree, x, y, idx, 0, rng);
  }
}

int RandomForest::Grow(Tree& tree, const std::vector<std::vector<double>>& x,
                       const std::vector<int>& y, std::vector<size_t>& idx, int depth,
                       Rng& rng) const {
  const int id = static_cast<int>(tree.size());
  tree.emplace_back();
  std::vector<double> counts(classes_, 0.0);
  for (size_t i : idx) counts[static_cast<size_t>(y[i])] += 1.0;
  const double n = static_cast<double>(idx.size());
  const double parent = Gini(counts, n);
  tree[static_cast<size_t>(id)].distribution = counts;
  if (depth >= max_depth_ || idx.size() < 2 || parent <= 0.0) return id;

  std::vector<size_t> features(columns_.size());
  std::iota(features.begin(), features.end(), 0);
  for (int k = 0; k < per_split_; ++k) {
    std::swap(features[static_cast<size_t>(k)],
              features[static_cast<size_t>(k) + rng.Index(features.size() - static_cast<size_t>(k))]);
  }
  double best_gain = 1e-12;
  int best_feature = -1;
  double best_threshold = 0.0;
  int best_category = 0;
  for (int k = 0; k < per_split_; ++k) {
    const size_t f = features[static_cast<size_t>(k)];
    if (categorical_[f]) {
      std::set<int> cats;
      for (size_t i : idx) cats.insert(static_cast<int>(x[i][f]));
      if (cats.size() < 2) continue;
      for (int c : cats) {
        std::vector<double> left(classes_, 0.0);
        double nl = 0.0;
        for (size_t i : idx) {
          if (static_cast<int>(x[i][f]) == c) {
            left[static_cast<size_t>(y[i])] += 1.0;
            nl += 1.0;
          }
        }
        std::vector<double> right(classes_);
        for (size_t q = 0; q < classes_; ++q) right[q] = counts[q] - left[q];
        const double gain = parent - (nl / n) * Gini(left, nl) - ((n - nl) / n) * Gini(right, n - nl);
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_category = c;
        }
      }
    } else {
      std::vector<size_t> order = idx;
      std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return x[a][f] < x[b][f]; });
      std::vector<double> left(classes_, 0.0);
      for (size_t p = 0; p + 1 < order.size(); ++p) {
        left[static_cast<size_t>(y[order[p]])] += 1.0;
        const double a = x[order[p]][f], b = x[order[p + 1]][f];
        if (a == b) continue;
        const double nl = static_cast<double>(p + 1);
        std::vector<double> right(classes_);
        for (size_t q = 0; q < classes_; ++q) right[q] = counts[q] - left[q];
        const double gain = parent - (nl / n) * Gini(left, nl) - ((n - nl) / n) * Gini(right, n - nl);
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (a + b);
        }
      }
    }
  }
  if (best_feature < 0) return id;

  const auto bf = static_cast<size_t>(best_feature);
  std::vector<size_t> left_idx, right_idx;
  for (size_t i : idx) {
    const bool go_left = categorical_[bf] ? static_cast<int>(x[i][bf]) == best_category
                                          : x[i][bf] <= best_threshold;
    (go_left ? left_idx : right_idx).push_back(i);
  }
  const int l = Grow(tree, x, y, left_idx, depth + 1, rng);
  const int r = Grow(tree, x, y, right_idx, depth + 1, rng);
  Node& node = tree[static_cast<size_t>(id)];
  node.feature = best_feature;
  node.categorical = categorical_[bf];
  node.threshold = best_threshold;
  node.category = best_category;
  node.left = l;
  node.right = r;
  return id;
}

const RandomForest::Node& RandomForest::Leaf(const Tree& tree, const std::vector<double>& x) const {
  size_t at = 0;
  while (tree[at].feature >= 0) {
    const Node& n = tree[at];
    const double v = x[static_cast<size_t>(n.feature)];
    const bool go_left = n.categorical ? static_cast<int>(v) == n.category : v <= n.threshold;
    at = static_cast<size_t>(go_left ? n.left : n.right);
  }
  return tree[at];
}

int RandomForest::Predict(const Row& row) const {
  std::vector<double> x(columns_.size());
  for (size_t c = 0; c < columns_.size(); ++c) {
    const double v = row[columns_[c]];
    x[c] = IsMissing(v) ? (categorical_[c] ? -1.0 : 0.0) : v;
  }
  // Soft vote over leaf class frequencies; ties go to the lower class index.
  std::vector<double> votes(classes_, 0.0);
  for (const auto& tree : trees_) {
    const Node& leaf = Leaf(tree, x);
    double total = 0.0;
    for (double c : leaf.distribution) total += c;
    for (size_t q = 0; q < classes_; ++q) votes[q] += leaf.distribution[q] / total;
  }
  return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

std::vector<int> RandomForest::PredictAll(const Dataset& ds) const {
  std::vector<int> out;
  out.reserve(ds.rows.size());
  for (const auto& r : ds.rows) out.push_back(Predict(r));
  return out;
}

double MacroF1(const std::vector<int>& truth, const std::vector<int>& predicted) {
  std::set<int> classes(truth.begin(), truth.end());
  classes.insert(predicted.begin(), predicted.end());
  if (classes.empty()) return 0.0;
  double sum = 0.0;
  for (int c : classes) {
    double tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < truth.size(); ++i) {
      const bool t = truth[i] == c, p = predicted[i] == c;
      tp += t && p;
      fp += !t && p;
      fn += t && !p;
    }
    sum += tp > 0 ? 2.0 * tp / (2.0 * tp + fp + fn) : 0.0;
  }
  return sum / static_cast<double>(classes.size());
}

}  // namespace tabgen
