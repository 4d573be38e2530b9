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

#include "tabgen/serializer.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace tabgen {
namespace {

using nlohmann::json;

const char* const kStructural[] = {"<IS>", "<SEP>", "<MISSING>", "<EOR>"};

std::string FormatValue(double v, int decimal_places) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimal_places, v);
  std::string s = buf;
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

}  // namespace

TokenVocabulary::TokenVocabulary() {
  for (const char* t : kStructural) Add(t);
}

TokenVocabulary::TokenVocabulary(std::vector<std::string> tokens) {
  for (size_t i = 0; i < 4; ++i) {
    if (i >= tokens.size() || tokens[i] != kStructural[i]) {
      throw VocabError("vocabulary does not start with the structural tokens");
    }
  }
  for (auto& t : tokens) {
    if (ids_.count(t)) throw VocabError("duplicate token '" + t + "'");
    Add(t);
  }
}

void TokenVocabulary::Add(const std::string& token) {
  if (ids_.count(token)) return;
  ids_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(token);
}

int TokenVocabulary::Id(std::string_view token) const {
  auto id = Find(token);
  if (!id) throw VocabError("token '" + std::string(token) + "' is not in the vocabulary");
  return *id;
}

std::optional<int> TokenVocabulary::Find(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

json TokenVocabulary::ToJson() const { return {{"tokens", tokens_}, {"version", 1}}; }

TokenVocabulary TokenVocabulary::FromJson(const json& j) {
  if (j.value("version", 0) != 1) throw VocabError("unsupported vocabulary version");
  return TokenVocabulary(j.at("tokens").get<std::vector<std::string>>());
}

TokenVocabulary BuildVocabulary(const Dataset& ds) {
  TokenVocabulary v;
  for (char d = '0'; d <= '9'; ++d) v.Add(std::string(1, d));
  v.Add("-");
  v.Add(".");
  for (const auto& f : ds.schema.features) v.Add(f.name);
  for (const auto& f : ds.schema.features) {
    if (f.is_continuous()) continue;
    for (const auto& c : f.vocabulary) v.Add(c);
  }
  return v;
}

Serializer::Serializer(Schema schema, TokenVocabulary vocab, std::vector<size_t> value_caps)
    : schema_(std::move(schema)), vocab_(std::move(vocab)), value_caps_(std::move(value_caps)) {
  const size_t m = schema_.size();
  if (value_caps_.size() != m) throw SchemaError("value caps do not match schema width");
  for (size_t j = 0; j < m; ++j) {
    if (j != schema_.label) order_.push_back(j);
  }
  order_.push_back(schema_.label);
  name_ids_.resize(m);
  category_ids_.resize(m);
  for (size_t j = 0; j < m; ++j) {
    name_ids_[j] = vocab_.Id(schema_[j].name);
    for (const auto& c : schema_[j].vocabulary) category_ids_[j].push_back(vocab_.Id(c));
  }
  for (int d = 0; d < 10; ++d) digit_ids_[d] = vocab_.Id(std::string(1, static_cast<char>('0' + d)));
  minus_id_ = vocab_.Id("-");
  point_id_ = vocab_.Id(".");
  max_length_ = 1;
  for (size_t j = 0; j < m; ++j) max_length_ += 2 + value_caps_[j] + 1;
}

Serializer Serializer::ForDataset(const Dataset& ds) {
  if (!ds.standardized) throw SchemaError("serializer requires a standardized dataset");
  std::vector<size_t> caps(ds.num_features(), 1);
  for (size_t j = 0; j < ds.num_features(); ++j) {
    const FeatureSpec& f = ds.schema[j];
    if (!f.is_continuous()) continue;
    for (const auto& r : ds.rows) {
      if (IsMissing(r[j])) continue;
      caps[j] = std::max(caps[j], FormatValue(r[j], f.decimal_places).size());
    }
  }
  return Serializer(ds.schema, BuildVocabulary(ds), std::move(caps));
}

std::vector<int> Serializer::RenderValue(size_t feature, double v) const {
  const FeatureSpec& f = schema_[feature];
  if (IsMissing(v)) return {kTokMissing};
  if (!f.is_continuous()) {
    const auto c = static_cast<size_t>(v);
    if (v < 0 || c >= category_ids_[feature].size() || static_cast<double>(c) != v) {
      throw VocabError("category index out of range for '" + f.name + "'");
    }
    return {category_ids_[feature][c]};
  }
  std::vector<int> out;
  for (char ch : FormatValue(v, f.decimal_places)) {
    if (ch == '-') {
      out.push_back(minus_id_);
    } else if (ch == '.') {
      out.push_back(point_id_);
    } else {
      out.push_back(digit_ids_[ch - '0']);
    }
  }
  return out;
}

SerializedRecord Serializer::Serialize(const Row& row) const {
  if (row.size() != schema_.size()) throw SchemaError("row width does not match schema");
  SerializedRecord sr;
  sr.value_spans.resize(schema_.size());
  for (size_t j : order_) {
    Clause clause{j, sr.tokens.size(), 0};
    sr.tokens.push_back(name_ids_[j]);
    sr.tokens.push_back(kTokIs);
    for (int id : RenderValue(j, row[j])) {
      if (id != kTokMissing) sr.value_spans[j].push_back(sr.tokens.size());
      sr.tokens.push_back(id);
    }
    sr.tokens.push_back(kTokSep);
    clause.end = sr.tokens.size();
    sr.clauses.push_back(clause);
  }
  sr.tokens.push_back(kTokEor);
  sr.label = static_cast<int>(row[schema_.label]);
  return sr;
}

ParseOutcome Serializer::Deserialize(std::span<const int> tokens) const {
  const size_t m = schema_.size();
  ParsedRecord parsed;
  parsed.row.assign(m, kMissing);
  SerializedRecord& sr = parsed.record;
  sr.tokens.assign(tokens.begin(), tokens.end());
  sr.value_spans.resize(m);
  auto bad = [](size_t index, std::string rule) -> ParseOutcome {
    return MalformedReport{index, std::move(rule)};
  };
  for (int t : tokens) {
    if (!vocab_.Contains(t)) return bad(0, "token outside vocabulary");
  }

  size_t pos = 0;
  const size_t n = tokens.size();
  for (size_t k = 0; k < order_.size(); ++k) {
    const size_t j = order_[k];
    const FeatureSpec& f = schema_[j];
    Clause clause{j, pos, 0};
    if (pos >= n) return bad(pos, "truncated");
    if (tokens[pos] != name_ids_[j]) {
      if (tokens[pos] == kTokEor) return bad(pos, "missing clause");
      for (size_t later = k + 1; later < order_.size(); ++later) {
        if (tokens[pos] == name_ids_[order_[later]]) return bad(pos, "missing clause");
      }
      return bad(pos, "expected feature name");
    }
    ++pos;
    if (pos >= n) return bad(pos, "truncated");
    if (tokens[pos] != kTokIs) return bad(pos, "expected IS");
    ++pos;
    if (pos >= n) return bad(pos, "truncated");

    if (tokens[pos] == kTokMissing) {
      ++pos;
    } else if (!f.is_continuous()) {
      const std::string& tok = vocab_.token(tokens[pos]);
      const int c = f.CategoryIndex(tok);
      if (c < 0) return bad(pos, "unknown category");
      parsed.row[j] = c;
      sr.value_spans[j].push_back(pos);
      ++pos;
    } else {
      std::string text;
      const size_t start = pos;
      bool seen_point = false;
      while (pos < n && tokens[pos] != kTokSep) {
        const int t = tokens[pos];
        if (t == minus_id_) {
          if (pos != start) return bad(pos, "misplaced sign");
          text.push_back('-');
        } else if (t == point_id_) {
          if (seen_point) return bad(pos, "at most one decimal point");
          if (f.decimal_places == 0) return bad(pos, "unexpected decimal point");
          seen_point = true;
          text.push_back('.');
        } else {
          int digit = -1;
          for (int d = 0; d < 10; ++d) {
            if (digit_ids_[d] == t) digit = d;
          }
          if (digit < 0) return bad(pos, "invalid numeric token");
          text.push_back(static_cast<char>('0' + digit));
        }
        sr.value_spans[j].push_back(pos);
        ++pos;
      }
      if (pos >= n) return bad(pos, "truncated");
      const size_t sign = (!text.empty() && text[0] == '-') ? 1 : 0;
      const size_t point = text.find('.');
      const size_t int_end = point == std::string::npos ? text.size() : point;
      if (int_end <= sign) return bad(pos, "missing integer digits");
      if (int_end - sign > 1 && text[sign] == '0') return bad(start + sign, "leading zero");
      if (f.decimal_places > 0) {
        if (point == std::string::npos) return bad(pos, "missing decimal point");
        if (text.size() - point - 1 != static_cast<size_t>(f.decimal_places)) {
          return bad(pos, "wrong number of decimal places");
        }
      }
      double v = 0.0;
      std::from_chars(text.data(), text.data() + text.size(), v);
      parsed.row[j] = v;
    }
    if (pos >= n) return bad(pos, "truncated");
    if (tokens[pos] != kTokSep) return bad(pos, "expected SEP");
    ++pos;
    clause.end = pos;
    sr.clauses.push_back(clause);
  }
  if (pos >= n) return bad(pos, "truncated");
  if (tokens[pos] != kTokEor) return bad(pos, "expected EOR");
  if (pos + 1 != n) return bad(pos + 1, "trailing tokens after EOR");
  sr.label = static_cast<int>(parsed.row[schema_.label]);
  return parsed;
}

std::optional<int> Serializer::FinalLabel(std::span<const int> tokens) const {
  const size_t n = tokens.size();
  if (n < 5 || tokens[n - 1] != kTokEor || tokens[n - 2] != kTokSep) return std::nullopt;
  if (tokens[n - 4] != kTokIs || tokens[n - 5] != name_ids_[schema_.label]) return std::nullopt;
  if (!vocab_.Contains(tokens[n - 3])) return std::nullopt;
  const int c = schema_.label_spec().CategoryIndex(vocab_.token(tokens[n - 3]));
  if (c < 0) return std::nullopt;
  return c;
}

size_t Serializer::max_clause_length() const {
  size_t m = 0;
  for (size_t cap : value_caps_) m = std::max(m, cap + 3);
  return m;
}

std::vector<std::span<const int>> Serializer::SegmentClauses(const SerializedRecord& sr) const {
  std::vector<std::span<const int>> out;
  std::span<const int> all(sr.tokens);
  for (const auto& c : sr.clauses) out.push_back(all.subspan(c.begin, c.end - c.begin));
  return out;
}

json Serializer::ToJson() const {
  return {{"schema", schema_.ToJson()}, {"vocabulary", vocab_.ToJson()}, {"value_caps", value_caps_}};
}

Serializer Serializer::FromJson(const json& j) {
  return Serializer(Schema::FromJson(j.at("schema")), TokenVocabulary::FromJson(j.at("vocabulary")),
                    j.at("value_caps").get<std::vector<size_t>>());
}

}  // namespace tabgen
