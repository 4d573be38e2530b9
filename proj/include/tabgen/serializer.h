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

#ifndef TABGEN_SERIALIZER_H_
#define TABGEN_SERIALIZER_H_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "json.hpp"
#include "tabgen/data.h"

namespace tabgen {

// Structural token ids are fixed at the front of every vocabulary.
inline constexpr int kTokIs = 0;
inline constexpr int kTokSep = 1;
inline constexpr int kTokMissing = 2;
inline constexpr int kTokEor = 3;

class TokenVocabulary {
 public:
  TokenVocabulary();
  explicit TokenVocabulary(std::vector<std::string> tokens);

  size_t size() const { return tokens_.size(); }
  const std::string& token(int id) const { return tokens_.at(static_cast<size_t>(id)); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  // Throws VocabError for unknown strings.
  int Id(std::string_view token) const;
  std::optional<int> Find(std::string_view token) const;
  bool Contains(int id) const { return id >= 0 && static_cast<size_t>(id) < tokens_.size(); }

  nlohmann::json ToJson() const;
  static TokenVocabulary FromJson(const nlohmann::json& j);

  friend bool operator==(const TokenVocabulary& a, const TokenVocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  // Adds `token` unless already present.
  void Add(const std::string& token);
  friend TokenVocabulary BuildVocabulary(const Dataset& ds);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// Structural tokens, digits, sign and point, feature names in schema order,
// then categorical values in schema order. Shared spellings share one id.
TokenVocabulary BuildVocabulary(const Dataset& ds);

struct Clause {
  size_t feature = 0;
  // Token range [begin, end) covering "name IS value SEP".
  size_t begin = 0;
  size_t end = 0;
};

struct SerializedRecord {
  std::vector<int> tokens;
  // Clauses in serialization order.
  std::vector<Clause> clauses;
  // value_spans[j]: token positions holding the value of feature j. Empty
  // for a MISSING value.
  std::vector<std::vector<size_t>> value_spans;
  int label = -1;
};

struct MalformedReport {
  size_t index = 0;
  std::string rule;
};

struct ParsedRecord {
  Row row;  // standardized units
  SerializedRecord record;
};

using ParseOutcome = std::variant<ParsedRecord, MalformedReport>;

// Linearizes rows into "name IS value SEP ... EOR" token sequences. Clause
// order follows the schema with the label feature moved to the end.
class Serializer {
 public:
  Serializer(Schema schema, TokenVocabulary vocab, std::vector<size_t> value_caps);
  // Vocabulary and length caps derived from a standardized dataset.
  static Serializer ForDataset(const Dataset& standardized);

  const Schema& schema() const { return schema_; }
  const TokenVocabulary& vocab() const { return vocab_; }
  const std::vector<size_t>& clause_order() const { return order_; }
  // Longest sequence the generator may emit, EOR included.
  size_t max_length() const { return max_length_; }
  // Longest "name IS value SEP" clause.
  size_t max_clause_length() const;

  // `row` must be standardized and conform to the schema.
  SerializedRecord Serialize(const Row& row) const;
  // Strict parse. Never throws on malformed input.
  ParseOutcome Deserialize(std::span<const int> tokens) const;
  // Parses only the trailing "label IS value SEP EOR" clause.
  std::optional<int> FinalLabel(std::span<const int> tokens) const;
  std::vector<std::span<const int>> SegmentClauses(const SerializedRecord& sr) const;

  nlohmann::json ToJson() const;
  static Serializer FromJson(const nlohmann::json& j);

 private:
  std::vector<int> RenderValue(size_t feature, double v) const;

  Schema schema_;
  TokenVocabulary vocab_;
  std::vector<size_t> value_caps_;
  std::vector<size_t> order_;
  std::vector<int> name_ids_;
  // category_ids_[j][c] = token id of category c of feature j.
  std::vector<std::vector<int>> category_ids_;
  size_t max_length_ = 0;
  int minus_id_ = -1;
  int point_id_ = -1;
  int digit_ids_[10] = {};
};

}  // namespace tabgen

#endif  // TABGEN_SERIALIZER_H_
