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

#ifndef TABGEN_FOREST_H_
#define TABGEN_FOREST_H_

#include <cstdint>
#include <vector>

#include "tabgen/common.h"
#include "tabgen/data.h"

namespace tabgen {

struct ForestConfig {
  int trees = 50;
  int max_depth = 8;
  // Candidate features per split; 0 selects floor(sqrt(M)).
  int features_per_split = 0;
};

// Bagged Gini decision trees. Continuous features split on thresholds,
// categorical features on equality with one category.
class RandomForest {
 public:
  // Fits on all non-label columns of `ds` to predict its label.
  void Fit(const Dataset& ds, const ForestConfig& config, uint64_t seed);
  int Predict(const Row& row) const;
  std::vector<int> PredictAll(const Dataset& ds) const;

 private:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    bool categorical = false;
    double threshold = 0.0;  // continuous: x <= threshold goes left
    int category = 0;        // categorical: x == category goes left
    int left = -1;
    int right = -1;
    std::vector<double> distribution;
  };
  using Tree = std::vector<Node>;

  int Grow(Tree& tree, const std::vector<std::vector<double>>& x, const std::vector<int>& y,
           std::vector<size_t>& idx, int depth, Rng& rng) const;
  const Node& Leaf(const Tree& tree, const std::vector<double>& x) const;

  std::vector<Tree> trees_;
  std::vector<size_t> columns_;
  std::vector<bool> categorical_;
  size_t classes_ = 0;
  int max_depth_ = 8;
  int per_split_ = 1;
};

// Macro-averaged F1 over the classes present in `truth` or `predicted`.
double MacroF1(const std::vector<int>& truth, const std::vector<int>& predicted);

}  // namespace tabgen

#endif  // TABGEN_FOREST_H_
