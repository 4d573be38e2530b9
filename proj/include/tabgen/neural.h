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

#ifndef TABGEN_NEURAL_H_
#define TABGEN_NEURAL_H_

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "tabgen/common.h"

namespace tabgen {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Param {
  std::string name;
  Mat value;
  Mat grad;
  // Adaptive-moment buffers.
  Mat m;
  Mat v;
  // Weight matrices subject to spectral normalization.
  bool spectral = false;
  Vec sn_u;
  Vec sn_v;
};

// Named parameter tensors with matching gradient and moment slots. Every
// mutation bumps version(), which invalidates outstanding tapes.
class ParamStore {
 public:
  size_t Add(const std::string& name, Eigen::Index rows, Eigen::Index cols, bool spectral = false);
  std::optional<size_t> Find(const std::string& name) const;
  size_t Index(const std::string& name) const;

  Param& operator[](size_t id) { return params_[id]; }
  const Param& operator[](size_t id) const { return params_[id]; }
  size_t size() const { return params_.size(); }
  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }

  void ZeroGrad();
  size_t NumScalars() const;
  // True when any gradient entry is non-zero.
  bool HasGradient() const;

  int64_t step() const { return step_; }
  void set_step(int64_t s) { step_ = s; }
  uint64_t version() const { return version_; }
  void Touch() { ++version_; }

  // Bitwise comparison of values.
  bool ValuesEqual(const ParamStore& other) const;

 private:
  std::vector<Param> params_;
  std::unordered_map<std::string, size_t> index_;
  int64_t step_ = 0;
  uint64_t version_ = 0;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
void InitFanIn(Param& p, Eigen::Index fan_in, Rng& rng);
void InitUniform(Param& p, double bound, Rng& rng);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

// Decoupled-weight-decay adaptive-moment update. Clears gradients and
// increments the step counter. Throws NonFiniteError naming the parameter.
void AdamStep(ParamStore& store, double learning_rate, const AdamConfig& config = {});

// Divides the matrix by its largest singular value, estimated with one
// power-iteration step from the persisted (u, v) pair. Zero matrices are
// left unchanged. Returns the estimate.
double SpectralNormalize(ParamStore& store, size_t id);
void SpectralNormalizeAll(ParamStore& store);

// Throws TapeError when a tape is replayed or its parameters have moved.
class Tape {
 public:
  Tape() = default;
  explicit Tape(const ParamStore& store) : store_(&store), version_(store.version()) {}
  void Consume();

 private:
  const ParamStore* store_ = nullptr;
  uint64_t version_ = 0;
  bool consumed_ = false;
};

struct Linear {
  size_t w = 0;
  size_t b = 0;
  Eigen::Index in = 0;
  Eigen::Index out = 0;

  static Linear Create(ParamStore& store, const std::string& name, Eigen::Index in,
                       Eigen::Index out, bool spectral, Rng* rng, bool zero_init = false);
  // x: in x T -> out x T.
  Mat Forward(const ParamStore& store, const Mat& x) const;
  // Accumulates parameter gradients, returns dL/dx.
  Mat Backward(ParamStore& store, const Mat& x, const Mat& dy) const;
};

// Feed-forward stack: rectifier on hidden layers, linear final layer.
struct Mlp {
  std::vector<Linear> layers;

  struct Cache {
    std::vector<Mat> inputs;
    std::vector<Mat> pre;
  };

  static Mlp Create(ParamStore& store, const std::string& name, Eigen::Index in,
                    const std::vector<int>& hidden, Eigen::Index out, bool spectral, Rng* rng,
                    bool zero_final);
  Mat Forward(const ParamStore& store, const Mat& x, Cache* cache) const;
  Mat Backward(ParamStore& store, const Cache& cache, const Mat& dy) const;
};

struct Embedding {
  size_t table = 0;  // dim x vocab
  Eigen::Index dim = 0;
  Eigen::Index vocab = 0;

  static Embedding Create(ParamStore& store, const std::string& name, Eigen::Index vocab,
                          Eigen::Index dim, Rng* rng);
  Mat Lookup(const ParamStore& store, std::span<const int> ids) const;
  void Backward(ParamStore& store, std::span<const int> ids, const Mat& dx) const;
};

// Gated recurrent unit with stacked gate matrices (reset, update, new).
struct Gru {
  size_t wx = 0;
  size_t wh = 0;
  size_t bx = 0;
  size_t bh = 0;
  Eigen::Index in = 0;
  Eigen::Index hidden = 0;

  struct Cache {
    Mat x;      // in x T
    Mat h;      // hidden x (T + 1), column 0 is the initial state
    Mat r, z, n, hn;
  };

  static Gru Create(ParamStore& store, const std::string& name, Eigen::Index in,
                    Eigen::Index hidden, bool spectral, Rng* rng);
  // Runs over the columns of x; returns hidden x T states.
  Mat Forward(const ParamStore& store, const Mat& x, const Vec& h0, Cache* cache) const;
  // dh: gradient w.r.t. each output state. Returns dL/dx.
  Mat Backward(ParamStore& store, const Cache& cache, const Mat& dh) const;
  Vec Step(const ParamStore& store, const Vec& x, const Vec& h) const;
};

inline double Logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

enum class Architecture { kMlp, kBiRnn, kCausalRnn, kEmbeddingMlp };

struct ScorerSpec {
  Architecture architecture = Architecture::kMlp;
  int vocab = 0;          // token-input architectures
  int input_dim = 0;      // kMlp
  int embed = 64;
  int hidden = 128;       // recurrent width
  std::vector<int> widths = {64, 64};  // feed-forward hidden widths
  int max_positions = 0;  // kEmbeddingMlp positional table size

  nlohmann::json ToJson() const;
  static ScorerSpec FromJson(const nlohmann::json& j);
};

// Feed-forward scorer over embedding vectors (columns of the input).
class MlpScorer {
 public:
  MlpScorer() = default;
  MlpScorer(const ScorerSpec& spec, ParamStore& store, const std::string& prefix, Rng* rng);

  struct Tape : tabgen::Tape {
    using tabgen::Tape::Tape;
    Mlp::Cache cache;
    Mat probs;
  };
  Mat Forward(const ParamStore& store, const Mat& x, Tape* tape) const;
  // upstream: dL/dprobs (1 x B). Returns dL/dx.
  Mat Backward(ParamStore& store, Tape& tape, const Mat& upstream) const;
  const ScorerSpec& spec() const { return spec_; }

 private:
  ScorerSpec spec_;
  Mlp mlp_;
};

// Clause encoder: mean of (token + position) embeddings, then feed-forward.
class ClauseScorer {
 public:
  ClauseScorer() = default;
  ClauseScorer(const ScorerSpec& spec, ParamStore& store, const std::string& prefix, Rng* rng);

  struct Tape : tabgen::Tape {
    using tabgen::Tape::Tape;
    std::vector<std::vector<int>> clauses;
    Mlp::Cache cache;
    Mat probs;
  };
  Mat Forward(const ParamStore& store, const std::vector<std::vector<int>>& clauses,
              Tape* tape) const;
  void Backward(ParamStore& store, Tape& tape, const Mat& upstream) const;
  const ScorerSpec& spec() const { return spec_; }

 private:
  Mat Pool(const ParamStore& store, const std::vector<std::vector<int>>& clauses) const;
  ScorerSpec spec_;
  Embedding tokens_;
  size_t positions_ = 0;  // embed x max_positions
  Mlp mlp_;
};

// Bidirectional recurrent encoder with a per-token logistic head.
class BiRnnScorer {
 public:
  BiRnnScorer() = default;
  BiRnnScorer(const ScorerSpec& spec, ParamStore& store, const std::string& prefix, Rng* rng);

  struct Tape : tabgen::Tape {
    using tabgen::Tape::Tape;
    std::vector<int> ids;
    Gru::Cache fwd, bwd;
    Mat features;  // 2H x T
    Mat probs;
  };
  Mat Forward(const ParamStore& store, std::span<const int> ids, Tape* tape) const;
  void Backward(ParamStore& store, Tape& tape, const Mat& upstream) const;
  const ScorerSpec& spec() const { return spec_; }

 private:
  ScorerSpec spec_;
  Embedding embed_;
  Gru forward_, backward_;
  Linear head_;
};

// Causal recurrent decoder: EOR embedding as the start input, softmax head.
class CausalRnn {
 public:
  CausalRnn() = default;
  CausalRnn(const ScorerSpec& spec, ParamStore& store, const std::string& prefix, Rng* rng);

  struct Tape : tabgen::Tape {
    using tabgen::Tape::Tape;
    std::vector<int> inputs;
    Gru::Cache gru;
    Mat states;  // H x steps
  };
  // Teacher-forced pass over `tokens`. With `extra_step`, one more state is
  // produced after consuming the final token (embedding extraction).
  // Returns logits (V x T); states (H x T or H x (T + 1)) via *states.
  Mat Forward(const ParamStore& store, std::span<const int> tokens, bool extra_step,
              Mat* states, Tape* tape) const;
  // dlogits: V x T. dstates (optional): gradient w.r.t. returned states.
  void Backward(ParamStore& store, Tape& tape, const Mat& dlogits,
                const Mat* dstates = nullptr) const;

  Vec InitialState() const { return Vec::Zero(spec_.hidden); }
  // Consumes `token`, advancing `state`.
  Vec Advance(const ParamStore& store, int token, const Vec& state) const;
  Vec Logits(const ParamStore& store, const Vec& state) const;
  const ScorerSpec& spec() const { return spec_; }
  int start_token() const { return start_token_; }

 private:
  ScorerSpec spec_;
  Embedding embed_;
  Gru gru_;
  Linear head_;
  int start_token_ = 3;
};

// Row-wise log-softmax over columns.
Mat LogSoftmaxColumns(const Mat& logits);

struct GradCheckEntry {
  std::string param;
  double worst_relative_error = 0.0;
  bool pass = true;
};

struct GradCheckReport {
  bool pass = true;
  double worst_relative_error = 0.0;
  std::string worst_param;
  std::vector<GradCheckEntry> entries;
};

// Compares analytic gradients against central differences with step h.
// `loss(true)` must run forward + backward (accumulating into the store's
// gradients); `loss(false)` only evaluates. At most `max_entries` randomly
// chosen coordinates per parameter are probed (0 = all). Relative error is
// |a - n| / max(|a|, |n|, 1e-6).
GradCheckReport GradCheck(ParamStore& store, const std::function<double(bool)>& loss,
                          double tolerance, double h = 1e-5, size_t max_entries = 0,
                          uint64_t seed = 0);

// Instantiates `spec` with every parameter randomized (zero-initialized heads
// included) and checks a random linear functional of its outputs.
GradCheckReport GradCheckScorer(const ScorerSpec& spec, uint64_t seed, double tolerance,
                                size_t max_entries = 0);

}  // namespace tabgen

#endif  // TABGEN_NEURAL_H_
