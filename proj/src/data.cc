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

#include "tabgen/data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

namespace tabgen {
namespace {

using nlohmann::json;

std::string Trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::optional<double> ParseFiniteDecimal(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

// RFC 4180 reader. Returns rows of raw (untrimmed) fields.
std::vector<std::vector<std::string>> ReadCsvRecords(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  size_t i = 0;
  auto end_record = [&]() {
    if (field_started || !record.empty() || !field.empty()) {
      record.push_back(field);
      records.push_back(std::move(record));
    }
    record.clear();
    field.clear();
    field_started = false;
  };
  while (i < text.size()) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      record.push_back(field);
      field.clear();
      field_started = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_record();
    } else {
      field.push_back(c);
      field_started = true;
    }
    ++i;
  }
  if (in_quotes) throw IngestError("unterminated quoted field", -1);
  end_record();
  return records;
}

std::string QuoteCsv(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string FormatFixed(double v, int decimal_places) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimal_places, v);
  std::string s = buf;
  // Avoid "-0.00".
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) {
    s.erase(0, 1);
  }
  return s;
}

// Sorts numerically when every value parses as a number, else lexically.
void SortVocabulary(std::vector<std::string>& vocab) {
  const bool numeric = std::all_of(vocab.begin(), vocab.end(), [](const auto& v) {
    return ParseFiniteDecimal(v).has_value();
  });
  if (numeric) {
    std::stable_sort(vocab.begin(), vocab.end(), [](const auto& a, const auto& b) {
      return *ParseFiniteDecimal(a) < *ParseFiniteDecimal(b);
    });
  } else {
    std::sort(vocab.begin(), vocab.end());
  }
}

const json* FindHint(const std::optional<json>& hints, const std::string& name) {
  if (!hints || !hints->contains("features")) return nullptr;
  for (const auto& f : (*hints)["features"]) {
    if (f.value("name", "") == name) return &f;
  }
  return nullptr;
}

}  // namespace

std::string_view FeatureKindName(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kContinuous:
      return "continuous";
    case FeatureKind::kCategorical:
      return "categorical";
    case FeatureKind::kOrdinal:
      return "ordinal";
  }
  return "categorical";
}

FeatureKind ParseFeatureKind(std::string_view name) {
  if (name == "continuous") return FeatureKind::kContinuous;
  if (name == "categorical") return FeatureKind::kCategorical;
  if (name == "ordinal") return FeatureKind::kOrdinal;
  throw SchemaError("unknown feature kind '" + std::string(name) + "'");
}

int FeatureSpec::CategoryIndex(std::string_view value) const {
  for (size_t i = 0; i < vocabulary.size(); ++i) {
    if (vocabulary[i] == value) return static_cast<int>(i);
  }
  return -1;
}

int Schema::Find(std::string_view name) const {
  for (size_t i = 0; i < features.size(); ++i) {
    if (features[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

nlohmann::json Schema::ToJson() const {
  json feats = json::array();
  for (const auto& f : features) {
    json jf = {{"name", f.name}, {"kind", FeatureKindName(f.kind)}};
    if (f.is_continuous()) {
      jf["mean"] = f.mean;
      jf["stddev"] = f.stddev;
      jf["decimal_places"] = f.decimal_places;
      jf["degenerate"] = f.degenerate;
    } else if (f.kind == FeatureKind::kOrdinal) {
      jf["order"] = f.vocabulary;
    } else {
      jf["vocabulary"] = f.vocabulary;
    }
    feats.push_back(std::move(jf));
  }
  return {{"features", feats}, {"label", features.at(label).name}};
}

Schema Schema::FromJson(const nlohmann::json& j) {
  Schema s;
  for (const auto& jf : j.at("features")) {
    FeatureSpec f;
    f.name = jf.at("name").get<std::string>();
    f.kind = ParseFeatureKind(jf.at("kind").get<std::string>());
    if (jf.contains("vocabulary")) f.vocabulary = jf["vocabulary"].get<std::vector<std::string>>();
    if (jf.contains("order")) f.vocabulary = jf["order"].get<std::vector<std::string>>();
    f.mean = jf.value("mean", 0.0);
    f.stddev = jf.value("stddev", 1.0);
    f.decimal_places = jf.value("decimal_places", 2);
    f.degenerate = jf.value("degenerate", false);
    if (!f.is_continuous() && f.vocabulary.empty()) {
      throw SchemaError("feature '" + f.name + "' has an empty vocabulary");
    }
    s.features.push_back(std::move(f));
  }
  const int label = s.Find(j.at("label").get<std::string>());
  if (label < 0) throw SchemaError("label feature not found in schema");
  s.label = static_cast<size_t>(label);
  return s;
}

int Dataset::LabelOf(size_t i) const {
  return static_cast<int>(rows[i][schema.label]);
}

std::vector<double> Dataset::Column(size_t j) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[j]);
  return out;
}

std::string Dataset::CellString(size_t i, size_t j) const {
  const double v = rows[i][j];
  if (IsMissing(v)) return "";
  const FeatureSpec& f = schema[j];
  if (f.is_continuous()) {
    const double raw = standardized ? v * f.stddev + f.mean : v;
    return FormatFixed(raw, f.decimal_places);
  }
  return f.vocabulary.at(static_cast<size_t>(v));
}

Dataset ParseCsv(std::string_view text, const std::optional<json>& hints,
                 std::optional<std::string> label_name) {
  auto records = ReadCsvRecords(text);
  if (records.empty()) throw IngestError("empty CSV: no header row", 0);
  const std::vector<std::string>& header = records[0];
  const size_t m = header.size();
  for (size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != m) {
      throw IngestError("ragged row " + std::to_string(r) + ": expected " +
                            std::to_string(m) + " fields, found " +
                            std::to_string(records[r].size()),
                        static_cast<int64_t>(r));
    }
  }
  const size_t n = records.size() - 1;

  if (!label_name && hints && hints->contains("label")) {
    label_name = (*hints)["label"].get<std::string>();
  }
  Dataset ds;
  ds.schema.features.resize(m);
  for (size_t j = 0; j < m; ++j) ds.schema.features[j].name = Trim(header[j]);
  if (label_name) {
    const int l = ds.schema.Find(*label_name);
    if (l < 0) throw SchemaError("label column '" + *label_name + "' not in header");
    ds.schema.label = static_cast<size_t>(l);
  } else {
    ds.schema.label = m - 1;
  }

  ds.rows.assign(n, Row(m, kMissing));
  for (size_t j = 0; j < m; ++j) {
    FeatureSpec& f = ds.schema.features[j];
    std::vector<std::string> cells(n);
    for (size_t r = 0; r < n; ++r) cells[r] = Trim(records[r + 1][j]);

    const json* hint = FindHint(hints, f.name);
    std::optional<FeatureKind> kind;
    if (hint && hint->contains("kind")) kind = ParseFeatureKind((*hint)["kind"].get<std::string>());
    if (hint) f.decimal_places = hint->value("decimal_places", 2);
    const bool is_label = j == ds.schema.label;

    if (kind == FeatureKind::kOrdinal && !(hint && hint->contains("order"))) {
      Warn("ordinal feature '" + f.name + "' has no rank order; treating as categorical");
      kind = FeatureKind::kCategorical;
    }
    if (!kind) {
      std::set<double> distinct;
      bool all_numeric = true;
      for (const auto& c : cells) {
        if (c.empty()) continue;
        auto v = ParseFiniteDecimal(c);
        if (!v) {
          all_numeric = false;
          break;
        }
        distinct.insert(*v);
      }
      kind = (!is_label && all_numeric && distinct.size() > 10)
                 ? FeatureKind::kContinuous
                 : FeatureKind::kCategorical;
    }
    if (is_label && *kind == FeatureKind::kContinuous) {
      throw SchemaError("label column '" + f.name + "' cannot be continuous");
    }
    f.kind = *kind;

    if (f.is_continuous()) {
      for (size_t r = 0; r < n; ++r) {
        if (cells[r].empty()) continue;
        auto v = ParseFiniteDecimal(cells[r]);
        if (!v) {
          throw CellTypeError("unparseable numeric '" + cells[r] + "' in column '" +
                                  f.name + "' at row " + std::to_string(r + 1),
                              static_cast<int64_t>(r + 1), static_cast<int64_t>(j));
        }
        ds.rows[r][j] = *v;
      }
      continue;
    }

    if (hint && (hint->contains("vocabulary") || hint->contains("order"))) {
      f.vocabulary = hint->contains("order")
                         ? (*hint)["order"].get<std::vector<std::string>>()
                         : (*hint)["vocabulary"].get<std::vector<std::string>>();
    } else {
      std::set<std::string> uniq;
      for (const auto& c : cells) {
        if (!c.empty()) uniq.insert(c);
      }
      f.vocabulary.assign(uniq.begin(), uniq.end());
      SortVocabulary(f.vocabulary);
    }
    if (f.vocabulary.empty()) {
      throw SchemaError("categorical feature '" + f.name + "' has no observed values");
    }
    for (size_t r = 0; r < n; ++r) {
      if (cells[r].empty()) {
        if (is_label) {
          throw IngestError("missing label at row " + std::to_string(r + 1),
                            static_cast<int64_t>(r + 1));
        }
        continue;
      }
      const int idx = f.CategoryIndex(cells[r]);
      if (idx < 0) {
        throw CellTypeError("value '" + cells[r] + "' not in vocabulary of '" + f.name +
                                "' at row " + std::to_string(r + 1),
                            static_cast<int64_t>(r + 1), static_cast<int64_t>(j));
      }
      ds.rows[r][j] = idx;
    }
  }
  return ds;
}

Dataset LoadCsv(const std::string& path, const std::optional<json>& hints,
                std::optional<std::string> label_name) {
  return ParseCsv(ReadFile(path), hints, std::move(label_name));
}

Dataset ParseCsvWithSchema(std::string_view text, const Schema& schema) {
  auto records = ReadCsvRecords(text);
  if (records.empty()) throw IngestError("empty CSV: no header row", 0);
  const auto& header = records[0];
  std::vector<std::string> names;
  for (const auto& h : header) names.push_back(Trim(h));
  std::vector<std::string> expected;
  for (const auto& f : schema.features) expected.push_back(f.name);
  if (names != expected) {
    std::string diff;
    for (const auto& e : expected) {
      if (std::find(names.begin(), names.end(), e) == names.end()) diff += " -" + e;
    }
    for (const auto& nm : names) {
      if (std::find(expected.begin(), expected.end(), nm) == expected.end()) diff += " +" + nm;
    }
    if (diff.empty()) diff = " (column order differs)";
    throw SchemaError("schema mismatch:" + diff);
  }
  Dataset ds;
  ds.schema = schema;
  const size_t m = schema.size();
  for (size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != m) {
      throw IngestError("ragged row " + std::to_string(r), static_cast<int64_t>(r));
    }
    Row row(m, kMissing);
    for (size_t j = 0; j < m; ++j) {
      const std::string cell = Trim(records[r][j]);
      if (cell.empty()) {
        if (j == schema.label) {
          throw IngestError("missing label at row " + std::to_string(r),
                            static_cast<int64_t>(r));
        }
        continue;
      }
      const FeatureSpec& f = schema[j];
      if (f.is_continuous()) {
        auto v = ParseFiniteDecimal(cell);
        if (!v) {
          throw CellTypeError("unparseable numeric '" + cell + "' in column '" + f.name + "'",
                              static_cast<int64_t>(r), static_cast<int64_t>(j));
        }
        row[j] = *v;
      } else {
        const int idx = f.CategoryIndex(cell);
        if (idx < 0) {
          throw CellTypeError("value '" + cell + "' not in vocabulary of '" + f.name + "'",
                              static_cast<int64_t>(r), static_cast<int64_t>(j));
        }
        row[j] = idx;
      }
    }
    ds.rows.push_back(std::move(row));
  }
  return ds;
}

std::string ToCsv(const Dataset& ds) {
  std::string out;
  for (size_t j = 0; j < ds.num_features(); ++j) {
    if (j) out.push_back(',');
    out += QuoteCsv(ds.schema[j].name);
  }
  out.push_back('\n');
  for (size_t i = 0; i < ds.num_rows(); ++i) {
    for (size_t j = 0; j < ds.num_features(); ++j) {
      if (j) out.push_back(',');
      out += QuoteCsv(ds.CellString(i, j));
    }
    out.push_back('\n');
  }
  return out;
}

Dataset Standardize(const Dataset& ds) {
  if (ds.standardized) throw SchemaError("dataset is already standardized");
  Dataset out = ds;
  for (size_t j = 0; j < ds.num_features(); ++j) {
    FeatureSpec& f = out.schema[j];
    if (!f.is_continuous()) continue;
    double sum = 0.0;
    size_t count = 0;
    for (const auto& r : ds.rows) {
      if (!IsMissing(r[j])) {
        sum += r[j];
        ++count;
      }
    }
    const double mean = count ? sum / static_cast<double>(count) : 0.0;
    double ss = 0.0;
    for (const auto& r : ds.rows) {
      if (!IsMissing(r[j])) ss += (r[j] - mean) * (r[j] - mean);
    }
    double sd = count ? std::sqrt(ss / static_cast<double>(count)) : 0.0;
    f.degenerate = !(sd > 0.0);
    if (f.degenerate) {
      Warn("feature '" + f.name + "' is constant; using std-dev 1");
      sd = 1.0;
    }
    f.mean = mean;
    f.stddev = sd;
  }
  out = ApplyStandardization(ds, out.schema);
  return out;
}

Dataset ApplyStandardization(const Dataset& raw, const Schema& schema) {
  if (raw.standardized) throw SchemaError("dataset is already standardized");
  Dataset out = raw;
  out.schema = schema;
  out.standardized = true;
  for (size_t j = 0; j < schema.size(); ++j) {
    const FeatureSpec& f = schema[j];
    if (!f.is_continuous()) continue;
    for (auto& r : out.rows) {
      if (!IsMissing(r[j])) r[j] = (r[j] - f.mean) / f.stddev;
    }
  }
  return out;
}

Dataset Destandardize(const Dataset& ds) {
  if (!ds.standardized) return ds;
  Dataset out = ds;
  out.standardized = false;
  for (size_t j = 0; j < ds.num_features(); ++j) {
    const FeatureSpec& f = ds.schema[j];
    if (!f.is_continuous()) continue;
    for (auto& r : out.rows) {
      if (!IsMissing(r[j])) r[j] = RoundTo(r[j] * f.stddev + f.mean, f.decimal_places);
    }
  }
  return out;
}

ClassCensus Census(const Dataset& ds) {
  ClassCensus c;
  c.counts.assign(ds.schema.label_spec().vocabulary.size(), 0);
  for (size_t i = 0; i < ds.num_rows(); ++i) {
    const double v = ds.rows[i][ds.schema.label];
    if (IsMissing(v)) throw IngestError("missing label", static_cast<int64_t>(i + 1));
    ++c.counts.at(static_cast<size_t>(v));
  }
  c.total = static_cast<int64_t>(ds.num_rows());
  size_t distinct = 0;
  for (auto n : c.counts) distinct += n > 0;
  if (distinct < 2) {
    throw DegenerateLabelError("label column '" + ds.schema.label_spec().name +
                               "' has fewer than 2 distinct classes");
  }
  return c;
}

std::pair<Dataset, Dataset> Split(const Dataset& ds, double holdout_fraction,
                                  uint64_t seed) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw SplitError("holdout fraction must lie in (0, 1)");
  }
  const size_t n = ds.num_rows();
  if (n < 10) throw SplitError("need at least 10 rows to split");
  const size_t num_classes = ds.schema.label_spec().vocabulary.size();
  std::vector<std::vector<size_t>> by_class(num_classes);
  for (size_t i = 0; i < n; ++i) by_class[static_cast<size_t>(ds.LabelOf(i))].push_back(i);

  // Largest-remainder apportionment of the holdout total across classes.
  const auto total = static_cast<size_t>(std::llround(holdout_fraction * static_cast<double>(n)));
  std::vector<size_t> quota(num_classes);
  std::vector<std::pair<double, size_t>> remainders;
  size_t assigned = 0;
  for (size_t c = 0; c < num_classes; ++c) {
    const double exact = holdout_fraction * static_cast<double>(by_class[c].size());
    quota[c] = static_cast<size_t>(std::floor(exact));
    assigned += quota[c];
    remainders.emplace_back(exact - std::floor(exact), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (size_t k = 0; assigned < total && k < remainders.size(); ++k, ++assigned) {
    ++quota[remainders[k].second];
  }

  Rng rng(seed);
  std::vector<size_t> train_idx, hold_idx;
  for (size_t c = 0; c < num_classes; ++c) {
    auto idx = by_class[c];
    if (idx.empty()) continue;
    if (quota[c] < 1 || quota[c] >= idx.size()) {
      throw SplitError("class '" + ds.schema.label_spec().vocabulary[c] +
                       "' cannot be represented in both parts");
    }
    rng.Shuffle(idx);
    hold_idx.insert(hold_idx.end(), idx.begin(), idx.begin() + static_cast<long>(quota[c]));
    train_idx.insert(train_idx.end(), idx.begin() + static_cast<long>(quota[c]), idx.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(hold_idx.begin(), hold_idx.end());
  Dataset train{ds.schema, {}, ds.standardized};
  Dataset hold{ds.schema, {}, ds.standardized};
  for (size_t i : train_idx) train.rows.push_back(ds.rows[i]);
  for (size_t i : hold_idx) hold.rows.push_back(ds.rows[i]);
  return {std::move(train), std::move(hold)};
}

double RoundTo(double v, int decimal_places) {
  const double scale = std::pow(10.0, decimal_places);
  return std::round(v * scale) / scale;
}

}  // namespace tabgen
