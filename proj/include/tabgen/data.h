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

#ifndef TABGEN_DATA_H_
#define TABGEN_DATA_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tabgen/common.h"

namespace tabgen {

enum class FeatureKind { kContinuous, kCategorical, kOrdinal };

std::string_view FeatureKindName(FeatureKind kind);
FeatureKind ParseFeatureKind(std::string_view name);

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kCategorical;
  // Canonical value strings; for ordinal features this is the rank order.
  std::vector<std::string> vocabulary;
  // Standardization statistics (continuous only). Population std-dev.
  double mean = 0.0;
  double stddev = 1.0;
  int decimal_places = 2;
  // Set when the column was constant at standardization time.
  bool degenerate = false;

  bool is_continuous() const { return kind == FeatureKind::kContinuous; }
  // Index of `value` in the vocabulary, or -1.
  int CategoryIndex(std::string_view value) const;
};

struct Schema {
  std::vector<FeatureSpec> features;
  size_t label = 0;

  size_t size() const { return features.size(); }
  const FeatureSpec& operator[](size_t i) const { return features[i]; }
  FeatureSpec& operator[](size_t i) { return features[i]; }
  // -1 when absent.
  int Find(std::string_view name) const;
  const FeatureSpec& label_spec() const { return features[label]; }

  nlohmann::json ToJson() const;
  static Schema FromJson(const nlohmann::json& j);
};

// A row holds one double per feature: the numeric value for continuous
// features, the vocabulary index for categorical/ordinal features, and
// kMissing for absent cells.
using Row = std::vector<double>;

struct Dataset {
  Schema schema;
  std::vector<Row> rows;
  // True once continuous cells hold z-scores.
  bool standardized = false;

  size_t num_rows() const { return rows.size(); }
  size_t num_features() const { return schema.size(); }
  // Class index of row `i` (label column).
  int LabelOf(size_t i) const;
  // Values of column `j` as a vector (missing kept as NaN).
  std::vector<double> Column(size_t j) const;
  // Renders a cell as its canonical string (raw units for continuous).
  std::string CellString(size_t i, size_t j) const;
};

struct ClassCensus {
  // counts[c] is the number of rows whose label has vocabulary index c.
  std::vector<int64_t> counts;
  int64_t total = 0;
  size_t num_classes() const { return counts.size(); }
};

// Parses a CSV file (header row, comma separated, RFC 4180 quoting).
// `hints`, when given, fixes kinds and vocabularies of the listed features.
Dataset LoadCsv(const std::string& path,
                const std::optional<nlohmann::json>& hints = std::nullopt,
                std::optional<std::string> label_name = std::nullopt);
Dataset ParseCsv(std::string_view text,
                 const std::optional<nlohmann::json>& hints = std::nullopt,
                 std::optional<std::string> label_name = std::nullopt);

// Parses CSV text against a fixed schema (e.g. synthetic output or holdout
// data), rejecting unknown categories and unparseable numerics.
Dataset ParseCsvWithSchema(std::string_view text, const Schema& schema);
std::string ToCsv(const Dataset& ds);

// Z-scores every continuous feature with population statistics computed on
// `ds` itself and records them in the schema.
Dataset Standardize(const Dataset& ds);
// Applies the statistics already stored in `schema` to raw-unit rows.
Dataset ApplyStandardization(const Dataset& raw, const Schema& schema);
// Inverse of standardization; continuous values rounded to decimal_places.
Dataset Destandardize(const Dataset& ds);

ClassCensus Census(const Dataset& ds);

// Stratified, seeded partition into (train, holdout).
std::pair<Dataset, Dataset> Split(const Dataset& ds, double holdout_fraction,
                                  uint64_t seed);

double RoundTo(double v, int decimal_places);

}  // namespace tabgen

#endif  // TABGEN_DATA_H_
