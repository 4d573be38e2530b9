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

#ifndef TABGEN_COMMON_H_
#define TABGEN_COMMON_H_

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tabgen {

// Base class for every error raised by the library. The CLI maps the
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Data errors (exit code 2).
class IngestError : public Error {
 public:
  IngestError(const std::string& what, int64_t row)
      : Error(what), row_(row) {}
  int64_t row() const { return row_; }

 private:
  int64_t row_;
};

class CellTypeError : public Error {
 public:
  CellTypeError(const std::string& what, int64_t row, int64_t column)
      : Error(what), row_(row), column_(column) {}
  int64_t row() const { return row_; }
  int64_t column() const { return column_; }

 private:
  int64_t row_;
  int64_t column_;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};
class DegenerateLabelError : public Error {
 public:
  using Error::Error;
};
class SplitError : public Error {
 public:
  using Error::Error;
};
class VocabError : public Error {
 public:
  using Error::Error;
};
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};
class EmptySampleError : public Error {
 public:
  using Error::Error;
};
class RuleParseError : public Error {
 public:
  RuleParseError(const std::string& what, int64_t rule_index)
      : Error(what), rule_index_(rule_index) {}
  int64_t rule_index() const { return rule_index_; }

 private:
  int64_t rule_index_;
};

// Numerical engine errors.
class ShapeError : public Error {
 public:
  using Error::Error;
};
class TapeError : public Error {
 public:
  using Error::Error;
};
class NonFiniteError : public Error {
 public:
  NonFiniteError(const std::string& what, std::string component)
      : Error(what), component_(std::move(component)) {}
  const std::string& component() const { return component_; }

 private:
  std::string component_;
};

// Usage / configuration errors (exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Missing cells are stored as quiet NaN in the numeric row representation.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
bool IsMissing(double v);

// Deterministic random source (xoshiro256** seeded through splitmix64).
// All transforms are hand-written so sequences do not depend on the
// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t NextU64();
  // Uniform in [0, 1) with 53 random bits.
  double Uniform();
  // Uniform integer in [0, n). n must be > 0.
  uint64_t Index(uint64_t n);
  double Normal();
  // Samples an index from a probability vector (sums to ~1).
  size_t Categorical(const double* probs, size_t n);
  template <typename T>
  void Shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = Index(i);
      std::swap(v[i - 1], v[j]);
    }
  }
  // Derives an independent child stream.
  Rng Fork(uint64_t stream);

 private:
  uint64_t state_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// 64-bit FNV-1a.
uint64_t Fnv1a64(std::string_view bytes);
std::string HexU64(uint64_t v);

void Warn(const std::string& message);
// Silences Warn() output (tests).
void SetWarningsEnabled(bool enabled);

// Writes `contents` to a temporary sibling and renames it over `path`.
void AtomicWriteFile(const std::string& path, std::string_view contents);
std::string ReadFile(const std::string& path);

}  // namespace tabgen

#endif  // TABGEN_COMMON_H_
