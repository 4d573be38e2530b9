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

#include "tabgen/constraints.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace tabgen {
namespace {

using nlohmann::json;

constexpr double kConstantEps = 1e-12;

// Relative slack for raw-unit comparisons; absorbs standardization round trips.
double Slack(double bound) { return 1e-9 * std::max(1.0, std::fabs(bound)); }

void SetFlag(bool* flag, bool v) {
  if (flag) *flag = v;
}

std::string FormatNumber(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

CompareOp ParseOp(const std::string& op, int64_t index) {
  if (op == "eq") return CompareOp::kEq;
  if (op == "ne") return CompareOp::kNe;
  if (op == "lt") return CompareOp::kLt;
  if (op == "le") return CompareOp::kLe;
  if (op == "gt") return CompareOp::kGt;
  if (op == "ge") return CompareOp::kGe;
  throw RuleParseError("rule " + std::to_string(index) + ": unknown op '" + op + "'", index);
}

const char* OpSymbol(CompareOp op) {
  switch (op) {
    case CompareOp::kEq:
      return "=";
    case CompareOp::kNe:
      return "!=";
    case CompareOp::kLt:
      return "<";
    case CompareOp::kLe:
      return "<=";
    case CompareOp::kGt:
      return ">";
    case CompareOp::kGe:
      return ">=";
  }
  return "?";
}

template <typename T>
bool Compare(CompareOp op, const T& lhs, const T& rhs) {
  switch (op) {
    case CompareOp::kEq:
      return lhs == rhs;
    case CompareOp::kNe:
      return lhs != rhs;
    case CompareOp::kLt:
      return lhs < rhs;
    case CompareOp::kLe:
      return lhs <= rhs;
    case CompareOp::kGt:
      return lhs > rhs;
    case CompareOp::kGe:
      return lhs >= rhs;
  }
  return false;
}

size_t RuleFeature(const Schema& schema, const json& j, int64_t index) {
  if (!j.contains("feature") || !j["feature"].is_string()) {
    throw RuleParseError("rule " + std::to_string(index) + ": missing feature name", index);
  }
  const int f = schema.Find(j["feature"].get<std::string>());
  if (f < 0) {
    throw RuleParseError("rule " + std::to_string(index) + ": unknown feature '" +
                             j["feature"].get<std::string>() + "'",
                         index);
  }
  return static_cast<size_t>(f);
}

Predicate ParsePredicate(const Schema& schema, const json& j, int64_t index) {
  if (!j.is_object()) throw RuleParseError("rule " + std::to_string(index) + ": bad clause", index);
  Predicate p;
  p.feature = RuleFeature(schema, j, index);
  p.op = ParseOp(j.value("op", std::string("?")), index);
  if (!j.contains("value")) {
    throw RuleParseError("rule " + std::to_string(index) + ": missing value", index);
  }
  const FeatureSpec& f = schema[p.feature];
  const json& v = j["value"];
  if (f.is_continuous()) {
    if (!v.is_number()) {
      throw RuleParseError("rule " + std::to_string(index) + ": numeric value required", index);
    }
    p.value = v.get<double>();
  } else {
    std::string s = v.is_string() ? v.get<std::string>() : v.dump();
    const bool ordered_op = p.op != CompareOp::kEq && p.op != CompareOp::kNe;
    if (ordered_op && (f.kind != FeatureKind::kOrdinal || f.CategoryIndex(s) < 0)) {
      throw RuleParseError("rule " + std::to_string(index) +
                               ": ordering comparison needs an ordinal feature and known value",
                           index);
    }
    p.value = std::move(s);
  }
  return p;
}

}  // namespace

double Pearson(std::span<const double> x, std::span<const double> y, bool* degenerate) {
  if (x.size() != y.size()) throw InsufficientDataError("pearson: length mismatch");
  double sx = 0, sy = 0;
  size_t n = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    if (IsMissing(x[i]) || IsMissing(y[i])) continue;
    sx += x[i];
    sy += y[i];
    ++n;
  }
  if (n < 2) throw InsufficientDataError("pearson: fewer than 2 complete pairs");
  const double mx = sx / static_cast<double>(n), my = sy / static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    if (IsMissing(x[i]) || IsMissing(y[i])) continue;
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= kConstantEps * static_cast<double>(n) || syy <= kConstantEps * static_cast<double>(n)) {
    SetFlag(degenerate, true);
    return 0.0;
  }
  SetFlag(degenerate, false);
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double CramersV(std::span<const double> x, std::span<const double> y, bool* degenerate) {
  if (x.size() != y.size()) throw InsufficientDataError("cramers_v: length mismatch");
  std::map<long, size_t> rows, cols;
  std::map<std::pair<long, long>, double> cell;
  size_t n = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    if (IsMissing(x[i]) || IsMissing(y[i])) continue;
    const long a = std::lround(x[i]), b = std::lround(y[i]);
    ++rows[a];
    ++cols[b];
    cell[{a, b}] += 1.0;
    ++n;
  }
  if (rows.size() < 2 || cols.size() < 2) {
    throw InsufficientDataError("cramers_v: need at least 2 categories on each side");
  }
  double chi2 = 0.0;
  for (const auto& [a, na] : rows) {
    for (const auto& [b, nb] : cols) {
      const double expected = static_cast<double>(na) * static_cast<double>(nb) / static_cast<double>(n);
      auto it = cell.find({a, b});
      const double observed = it == cell.end() ? 0.0 : it->second;
      chi2 += (observed - expected) * (observed - expected) / expected;
    }
  }
  SetFlag(degenerate, false);
  const double k = static_cast<double>(std::min(rows.size(), cols.size()) - 1);
  return std::clamp(std::sqrt(chi2 / (static_cast<double>(n) * k)), 0.0, 1.0);
}

double CorrelationRatio(std::span<const double> categories, std::span<const double> values,
                        bool* degenerate) {
  if (categories.size() != values.size()) {
    throw InsufficientDataError("correlation_ratio: length mismatch");
  }
  std::map<long, std::pair<double, size_t>> groups;
  double sum = 0.0;
  size_t n = 0;
  for (size_t i = 0; i < values.size(); ++i) {
    if (IsMissing(categories[i]) || IsMissing(values[i])) continue;
    auto& g = groups[std::lround(categories[i])];
    g.first += values[i];
    ++g.second;
    sum += values[i];
    ++n;
  }
  if (groups.size() < 2) throw InsufficientDataError("correlation_ratio: need 2 categories");
  const double mean = sum / static_cast<double>(n);
  double total = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    if (IsMissing(categories[i]) || IsMissing(values[i])) continue;
    total += (values[i] - mean) * (values[i] - mean);
  }
  if (total <= kConstantEps * static_cast<double>(n)) {
    SetFlag(degenerate, true);
    return 0.0;
  }
  double between = 0.0;
  for (const auto& [c, g] : groups) {
    const double gm = g.first / static_cast<double>(g.second);
    between += static_cast<double>(g.second) * (gm - mean) * (gm - mean);
  }
  SetFlag(degenerate, false);
  return std::clamp(std::sqrt(between / total), 0.0, 1.0);
}

std::string_view AssociationMethodName(AssociationMethod m) {
  switch (m) {
    case AssociationMethod::kPearson:
      return "pearson";
    case AssociationMethod::kCramersV:
      return "cramers_v";
    case AssociationMethod::kCorrelationRatio:
      return "corr_ratio";
  }
  return "pearson";
}

AssociationMatrix ComputeAssociationMatrix(const Dataset& ds) {
  const size_t m = ds.num_features();
  AssociationMatrix c;
  c.size = m;
  c.values.assign(m * m, 0.0);
  c.methods.assign(m * m, AssociationMethod::kPearson);
  c.flagged.assign(m * m, false);
  std::vector<std::vector<double>> cols(m);
  for (size_t j = 0; j < m; ++j) cols[j] = ds.Column(j);

  for (size_t a = 0; a < m; ++a) {
    const bool a_num = ds.schema[a].is_continuous();
    c.values[a * m + a] = 1.0;
    c.methods[a * m + a] = a_num ? AssociationMethod::kPearson : AssociationMethod::kCramersV;
    for (size_t b = a + 1; b < m; ++b) {
      const bool b_num = ds.schema[b].is_continuous();
      AssociationMethod method;
      double v = 0.0;
      bool flagged = false;
      try {
        if (a_num && b_num) {
          method = AssociationMethod::kPearson;
          v = Pearson(cols[a], cols[b], &flagged);
        } else if (!a_num && !b_num) {
          method = AssociationMethod::kCramersV;
          v = CramersV(cols[a], cols[b], &flagged);
        } else {
          method = AssociationMethod::kCorrelationRatio;
          v = a_num ? CorrelationRatio(cols[b], cols[a], &flagged)
                    : CorrelationRatio(cols[a], cols[b], &flagged);
        }
      } catch (const InsufficientDataError&) {
        method = a_num && b_num   ? AssociationMethod::kPearson
                 : !a_num && !b_num ? AssociationMethod::kCramersV
                                    : AssociationMethod::kCorrelationRatio;
        v = 0.0;
        flagged = true;
      }
      for (auto [i, k] : {std::pair{a, b}, std::pair{b, a}}) {
        c.values[i * m + k] = v;
        c.methods[i * m + k] = method;
        c.flagged[i * m + k] = flagged;
      }
    }
  }
  return c;
}

std::string AssociationMatrix::ToCsv(const Schema& schema) const {
  std::string out = "feature";
  for (size_t b = 0; b < size; ++b) out += "," + schema[b].name;
  out += "\n";
  char buf[64];
  for (size_t a = 0; a < size; ++a) {
    out += schema[a].name;
    for (size_t b = 0; b < size; ++b) {
      std::snprintf(buf, sizeof(buf), ",%.17g", at(a, b));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

CriticalPairs ExtractCriticalPairs(const AssociationMatrix& c, double threshold, size_t cap,
                                   std::optional<size_t> exclude_feature) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("delta_thresh must lie in (0, 1)");
  if (cap < 1) throw ConfigError("k must be at least 1");
  CriticalPairs out;
  out.threshold = threshold;
  out.cap = cap;
  for (size_t a = 0; a < c.size; ++a) {
    for (size_t b = a + 1; b < c.size; ++b) {
      if (exclude_feature && (a == *exclude_feature || b == *exclude_feature)) continue;
      const double s = c.at(a, b);
      if (std::fabs(s) >= threshold) out.pairs.push_back({a, b, s});
    }
  }
  // (a, b) are generated in lexicographic order; a stable sort keeps it for ties.
  std::stable_sort(out.pairs.begin(), out.pairs.end(), [](const auto& x, const auto& y) {
    return std::fabs(x.strength) > std::fabs(y.strength);
  });
  if (out.pairs.size() > cap) out.pairs.resize(cap);
  if (out.pairs.empty()) {
    Warn("no feature pair reaches delta_thresh=" + FormatNumber(threshold) +
         "; the feature-level discriminator is disabled");
  }
  return out;
}

nlohmann::json CriticalPairs::ToJson(const Schema& schema) const {
  json pairs_json = json::array();
  for (const auto& p : pairs) {
    pairs_json.push_back({{"a", schema[p.a].name}, {"b", schema[p.b].name}, {"strength", p.strength}});
  }
  return {{"pairs", pairs_json}, {"delta_thresh", threshold}, {"k", cap}};
}

CriticalPairs CriticalPairs::FromJson(const nlohmann::json& j, const Schema& schema) {
  CriticalPairs out;
  out.threshold = j.at("delta_thresh").get<double>();
  out.cap = j.at("k").get<size_t>();
  for (const auto& p : j.at("pairs")) {
    const int a = schema.Find(p.at("a").get<std::string>());
    const int b = schema.Find(p.at("b").get<std::string>());
    if (a < 0 || b < 0) throw SchemaError("critical pair names an unknown feature");
    out.pairs.push_back({static_cast<size_t>(a), static_cast<size_t>(b), p.at("strength").get<double>()});
  }
  return out;
}

bool RuleSet::Eval(const Predicate& p, const Row& row) const {
  const double v = row[p.feature];
  if (IsMissing(v)) return false;
  const FeatureSpec& f = schema_[p.feature];
  if (f.is_continuous()) {
    const double rhs = std::get<double>(p.value);
    const double slack = Slack(rhs);
    switch (p.op) {
      case CompareOp::kEq:
        return std::fabs(v - rhs) <= slack;
      case CompareOp::kNe:
        return std::fabs(v - rhs) > slack;
      case CompareOp::kLt:
        return v < rhs - slack;
      case CompareOp::kLe:
        return v <= rhs + slack;
      case CompareOp::kGt:
        return v > rhs + slack;
      case CompareOp::kGe:
        return v >= rhs - slack;
    }
    return false;
  }
  const std::string& value = std::get<std::string>(p.value);
  const auto idx = static_cast<size_t>(v);
  if (p.op == CompareOp::kEq || p.op == CompareOp::kNe) {
    return Compare(p.op, f.vocabulary.at(idx), value);
  }
  return Compare(p.op, static_cast<int>(idx), f.CategoryIndex(value));
}

bool RuleSet::Check(size_t rule_index, const Row& row) const {
  const Rule& rule = rules_.at(rule_index);
  if (const auto* u = std::get_if<UnaryRule>(&rule)) {
    const double v = row[u->feature];
    if (IsMissing(v)) return true;
    if (u->min && v < *u->min - Slack(*u->min)) return false;
    if (u->max && v > *u->max + Slack(*u->max)) return false;
    if (u->allowed) {
      const int c = static_cast<int>(v);
      return std::find(u->allowed->begin(), u->allowed->end(), c) != u->allowed->end();
    }
    return true;
  }
  const auto& imp = std::get<Implication>(rule);
  return !Eval(imp.antecedent, row) || Eval(imp.consequent, row);
}

bool RuleSet::Satisfies(const Row& row) const {
  for (size_t i = 0; i < rules_.size(); ++i) {
    if (!Check(i, row)) return false;
  }
  return true;
}

std::string RuleSet::Describe(size_t rule_index) const {
  const Rule& rule = rules_.at(rule_index);
  auto describe_pred = [&](const Predicate& p) {
    std::string s = schema_[p.feature].name + OpSymbol(p.op);
    if (const auto* d = std::get_if<double>(&p.value)) return s + FormatNumber(*d);
    return s + std::get<std::string>(p.value);
  };
  if (const auto* u = std::get_if<UnaryRule>(&rule)) {
    const std::string& name = schema_[u->feature].name;
    if (u->allowed) {
      std::string s = name + " in {";
      for (size_t i = 0; i < u->allowed->size(); ++i) {
        if (i) s += ",";
        s += schema_[u->feature].vocabulary.at(static_cast<size_t>((*u->allowed)[i]));
      }
      return s + "}";
    }
    std::string s;
    if (u->min) s += FormatNumber(*u->min) + " <= ";
    s += name;
    if (u->max) s += " <= " + FormatNumber(*u->max);
    return s;
  }
  const auto& imp = std::get<Implication>(rule);
  return "if " + describe_pred(imp.antecedent) + " then " + describe_pred(imp.consequent);
}

void RuleSet::AppendUserRules(const nlohmann::json& rules) {
  if (!rules.is_array()) throw RuleParseError("rule file must be a JSON list", -1);
  for (size_t i = 0; i < rules.size(); ++i) {
    const auto index = static_cast<int64_t>(i);
    const json& r = rules[i];
    if (!r.is_object()) throw RuleParseError("rule " + std::to_string(i) + ": not an object", index);
    if (r.contains("if") || r.contains("then")) {
      if (!r.contains("if") || !r.contains("then")) {
        throw RuleParseError("rule " + std::to_string(i) + ": implication needs if and then", index);
      }
      Add(Implication{ParsePredicate(schema_, r["if"], index), ParsePredicate(schema_, r["then"], index)});
    } else {
      UnaryRule u;
      u.feature = RuleFeature(schema_, r, index);
      const FeatureSpec& f = schema_[u.feature];
      if (r.contains("min") || r.contains("max")) {
        if (!f.is_continuous()) {
          throw RuleParseError("rule " + std::to_string(i) + ": min/max need a continuous feature", index);
        }
        if (r.contains("min")) {
          if (!r["min"].is_number()) throw RuleParseError("rule " + std::to_string(i) + ": bad min", index);
          u.min = r["min"].get<double>();
        }
        if (r.contains("max")) {
          if (!r["max"].is_number()) throw RuleParseError("rule " + std::to_string(i) + ": bad max", index);
          u.max = r["max"].get<double>();
        }
      }
      if (r.contains("allowed")) {
        if (f.is_continuous() || !r["allowed"].is_array()) {
          throw RuleParseError("rule " + std::to_string(i) + ": allowed needs a categorical feature", index);
        }
        std::vector<int> allowed;
        for (const auto& v : r["allowed"]) {
          const int c = f.CategoryIndex(v.is_string() ? v.get<std::string>() : v.dump());
          if (c >= 0) allowed.push_back(c);
        }
        u.allowed = std::move(allowed);
      }
      if (!u.min && !u.max && !u.allowed) {
        throw RuleParseError("rule " + std::to_string(i) + ": empty unary rule", index);
      }
      Add(std::move(u));
    }
    ++num_user_rules_;
  }
}

RuleSet AutoRules(const Dataset& input, const std::optional<nlohmann::json>& user_rules) {
  const Dataset ds = Destandardize(input);
  RuleSet rules(ds.schema);
  for (size_t j = 0; j < ds.num_features(); ++j) {
    const FeatureSpec& f = ds.schema[j];
    UnaryRule u;
    u.feature = j;
    if (f.is_continuous()) {
      bool any = false;
      double lo = 0, hi = 0;
      for (const auto& r : ds.rows) {
        if (IsMissing(r[j])) continue;
        lo = any ? std::min(lo, r[j]) : r[j];
        hi = any ? std::max(hi, r[j]) : r[j];
        any = true;
      }
      if (!any) continue;
      u.min = lo;
      u.max = hi;
    } else {
      std::vector<bool> seen(f.vocabulary.size(), false);
      for (const auto& r : ds.rows) {
        if (!IsMissing(r[j])) seen[static_cast<size_t>(r[j])] = true;
      }
      std::vector<int> allowed;
      for (size_t c = 0; c < seen.size(); ++c) {
        if (seen[c]) allowed.push_back(static_cast<int>(c));
      }
      u.allowed = std::move(allowed);
    }
    rules.Add(std::move(u));
  }
  if (user_rules) rules.AppendUserRules(*user_rules);
  return rules;
}

}  // namespace tabgen
