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

#ifndef TABGEN_CONSTRAINTS_H_
#define TABGEN_CONSTRAINTS_H_

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "tabgen/data.h"

namespace tabgen {

// Product-moment correlation over pairwise-complete entries. Returns 0 and
// sets *degenerate when either side is constant.
double Pearson(std::span<const double> x, std::span<const double> y,
               bool* degenerate = nullptr);
// Uncorrected Cramér's V of two category-index columns.
double CramersV(std::span<const double> x, std::span<const double> y,
                bool* degenerate = nullptr);
// Correlation ratio eta of a numeric column given a category-index column.
double CorrelationRatio(std::span<const double> categories, std::span<const double> values,
                        bool* degenerate = nullptr);

enum class AssociationMethod { kPearson, kCramersV, kCorrelationRatio };
std::string_view AssociationMethodName(AssociationMethod m);

struct AssociationMatrix {
  size_t size = 0;
  std::vector<double> values;  // row-major size x size
  std::vector<AssociationMethod> methods;
  // Entries whose estimator failed and were stored as 0.
  std::vector<bool> flagged;

  double at(size_t a, size_t b) const { return values[a * size + b]; }
  AssociationMethod method(size_t a, size_t b) const { return methods[a * size + b]; }
  std::string ToCsv(const Schema& schema) const;
};

// Mixed-type association matrix. Ordinal features are treated as
// categorical. Per-entry estimator failures become flagged zeros.
AssociationMatrix ComputeAssociationMatrix(const Dataset& ds);

struct CriticalPair {
  size_t a = 0;
  size_t b = 0;
  double strength = 0.0;
};

struct CriticalPairs {
  std::vector<CriticalPair> pairs;
  double threshold = 0.3;
  size_t cap = 10;

  bool empty() const { return pairs.empty(); }
  nlohmann::json ToJson(const Schema& schema) const;
  static CriticalPairs FromJson(const nlohmann::json& j, const Schema& schema);
};

// Keeps unordered pairs (a < b, label excluded) with |C_ab| >= threshold and
// returns the `cap` strongest by |C_ab|, ties broken by (a, b).
CriticalPairs ExtractCriticalPairs(const AssociationMatrix& c, double threshold, size_t cap,
                                   std::optional<size_t> exclude_feature = std::nullopt);

enum class CompareOp { kEq, kNe, kLt, kLe, kGt, kGe };

struct Predicate {
  size_t feature = 0;
  CompareOp op = CompareOp::kEq;
  // Numeric operand for continuous features; category string otherwise.
  std::variant<double, std::string> value;
};

// min/max bound continuous features (raw units); `allowed` restricts
// categorical features to a set of category indices.
struct UnaryRule {
  size_t feature = 0;
  std::optional<double> min;
  std::optional<double> max;
  std::optional<std::vector<int>> allowed;
};

struct Implication {
  Predicate antecedent;
  Predicate consequent;
};

using Rule = std::variant<UnaryRule, Implication>;

// Per-row validity checks over raw-unit rows. Missing cells never violate a
// unary rule; a predicate on a missing cell is false.
class RuleSet {
 public:
  RuleSet() = default;
  explicit RuleSet(Schema schema) : schema_(std::move(schema)) {}

  void Add(Rule rule) { rules_.push_back(std::move(rule)); }
  size_t size() const { return rules_.size(); }
  const std::vector<Rule>& rules() const { return rules_; }
  bool has_user_rules() const { return num_user_rules_ > 0; }
  size_t num_user_rules() const { return num_user_rules_; }

  bool Check(size_t rule_index, const Row& raw_row) const;
  bool Satisfies(const Row& raw_row) const;
  std::string Describe(size_t rule_index) const;

  // Parses and appends a user rule file (JSON list). Throws RuleParseError.
  void AppendUserRules(const nlohmann::json& rules);

 private:
  bool Eval(const Predicate& p, const Row& row) const;

  Schema schema_;
  std::vector<Rule> rules_;
  size_t num_user_rules_ = 0;
};

// Range rules per continuous feature and support rules per categorical
// feature, observed on raw-unit `ds`, plus optional user rules.
RuleSet AutoRules(const Dataset& ds, const std::optional<nlohmann::json>& user_rules = std::nullopt);

}  // namespace tabgen

#endif  // TABGEN_CONSTRAINTS_H_
