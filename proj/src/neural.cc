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

#include "tabgen/neural.h"

#include <algorithm>
#include <cmath>

namespace tabgen {
namespace {

Mat LogisticOf(const Mat& logits) {
  return logits.unaryExpr([](double v) { return Logistic(v); });
}

// dL/dlogit for a logistic output given dL/dp.
Mat ThroughLogistic(const Mat& probs, const Mat& upstream) {
  return upstream.cwiseProduct(probs.cwiseProduct((1.0 - probs.array()).matrix()));
}

void CheckShape(const Mat& x, Eigen::Index rows, const char* layer) {
  if (x.rows() != rows) {
    throw ShapeError(std::string("shape mismatch at ") + layer + ": expected " +
                     std::to_string(rows) + " rows, got " + std::to_string(x.rows()));
  }
}

Mat ReverseColumns(const Mat& m) { return m.rowwise().reverse(); }

}  // namespace

size_t ParamStore::Add(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                       bool spectral) {
  if (index_.count(name)) throw ShapeError("duplicate parameter '" + name + "'");
  Param p;
  p.name = name;
  p.value = Mat::Zero(rows, cols);
  p.grad = Mat::Zero(rows, cols);
  p.m = Mat::Zero(rows, cols);
  p.v = Mat::Zero(rows, cols);
  p.spectral = spectral;
  if (spectral) {
    Rng rng(Fnv1a64(name));
    p.sn_u = Vec(rows);
    for (Eigen::Index i = 0; i < rows; ++i) p.sn_u[i] = rng.Normal();
    p.sn_u.normalize();
    p.sn_v = Vec::Zero(cols);
  }
  index_.emplace(name, params_.size());
  params_.push_back(std::move(p));
  ++version_;
  return params_.size() - 1;
}

std::optional<size_t> ParamStore::Find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

size_t ParamStore::Index(const std::string& name) const {
  auto id = Find(name);
  if (!id) throw ShapeError("unknown parameter '" + name + "'");
  return *id;
}

void ParamStore::ZeroGrad() {
  for (auto& p : params_) p.grad.setZero();
}

size_t ParamStore::NumScalars() const {
  size_t n = 0;
  for (const auto& p : params_) n += static_cast<size_t>(p.value.size());
  return n;
}

bool ParamStore::HasGradient() const {
  for (const auto& p : params_) {
    if (!p.grad.isZero(0.0)) return true;
  }
  return false;
}

bool ParamStore::ValuesEqual(const ParamStore& other) const {
  if (params_.size() != other.params_.size()) return false;
  for (size_t i = 0; i < params_.size(); ++i) {
    const auto& a = params_[i].value;
    const auto& b = other.params_[i].value;
    if (params_[i].name != other.params_[i].name || a.rows() != b.rows() || a.cols() != b.cols()) {
      return false;
    }
    if (!std::equal(a.data(), a.data() + a.size(), b.data())) return false;
  }
  return true;
}

void InitFanIn(Param& p, Eigen::Index fan_in, Rng& rng) {
  InitUniform(p, 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(fan_in, 1))), rng);
}

void InitUniform(Param& p, double bound, Rng& rng) {
  for (Eigen::Index i = 0; i < p.value.size(); ++i) {
    p.value.data()[i] = (2.0 * rng.Uniform() - 1.0) * bound;
  }
}

void AdamStep(ParamStore& store, double learning_rate, const AdamConfig& config) {
  for (const auto& p : store.params()) {
    if (!p.grad.allFinite()) {
      throw NonFiniteError("non-finite gradient in parameter '" + p.name + "'", p.name);
    }
  }
  const double t = static_cast<double>(store.step() + 1);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (auto& p : store.params()) {
    p.m = config.beta1 * p.m + (1.0 - config.beta1) * p.grad;
    p.v = config.beta2 * p.v + (1.0 - config.beta2) * p.grad.cwiseProduct(p.grad);
    p.value *= 1.0 - learning_rate * config.weight_decay;
    p.value.array() -= learning_rate * (p.m.array() / c1) /
                       ((p.v.array() / c2).sqrt() + config.epsilon);
    if (!p.value.allFinite()) {
      throw NonFiniteError("non-finite value in parameter '" + p.name + "'", p.name);
    }
    p.grad.setZero();
  }
  store.set_step(store.step() + 1);
  store.Touch();
}

double SpectralNormalize(ParamStore& store, size_t id) {
  Param& p = store[id];
  if (p.sn_u.size() != p.value.rows()) {
    Rng rng(Fnv1a64(p.name));
    p.sn_u = Vec(p.value.rows());
    for (Eigen::Index i = 0; i < p.sn_u.size(); ++i) p.sn_u[i] = rng.Normal();
    p.sn_u.normalize();
  }
  Vec v = p.value.transpose() * p.sn_u;
  const double vn = v.norm();
  if (!(vn > 0.0)) return 0.0;
  v /= vn;
  Vec u = p.value * v;
  const double sigma = u.norm();
  if (!(sigma > 0.0)) return 0.0;
  u /= sigma;
  p.sn_u = u;
  p.sn_v = v;
  p.value /= sigma;
  store.Touch();
  return sigma;
}

void SpectralNormalizeAll(ParamStore& store) {
  for (size_t i = 0; i < store.size(); ++i) {
    if (store[i].spectral) SpectralNormalize(store, i);
  }
}

void Tape::Consume() {
  if (store_ == nullptr) throw TapeError("tape was never recorded");
  if (consumed_) throw TapeError("tape already consumed");
  if (store_->version() != version_) throw TapeError("stale tape: parameters changed since forward");
  consumed_ = true;
}

Linear Linear::Create(ParamStore& store, const std::string& name, Eigen::Index in,
                      Eigen::Index out, bool spectral, Rng* rng, bool zero_init) {
  Linear l;
  l.in = in;
  l.out = out;
  if (auto w = store.Find(name + ".w")) {
    l.w = *w;
    l.b = store.Index(name + ".b");
    return l;
  }
  l.w = store.Add(name + ".w", out, in, spectral);
  l.b = store.Add(name + ".b", out, 1);
  if (!zero_init && rng) InitFanIn(store[l.w], in, *rng);
  return l;
}

Mat Linear::Forward(const ParamStore& store, const Mat& x) const {
  CheckShape(x, in, store[w].name.c_str());
  Mat y = store[w].value * x;
  y.colwise() += store[b].value.col(0);
  return y;
}

Mat Linear::Backward(ParamStore& store, const Mat& x, const Mat& dy) const {
  store[w].grad.noalias() += dy * x.transpose();
  store[b].grad.col(0) += dy.rowwise().sum();
  return store[w].value.transpose() * dy;
}

Mlp Mlp::Create(ParamStore& store, const std::string& name, Eigen::Index in,
                const std::vector<int>& hidden, Eigen::Index out, bool spectral, Rng* rng,
                bool zero_final) {
  Mlp mlp;
  Eigen::Index prev = in;
  for (size_t i = 0; i < hidden.size(); ++i) {
    if (hidden[i] < 1) throw ShapeError("layer widths must be >= 1");
    mlp.layers.push_back(Linear::Create(store, name + ".l" + std::to_string(i), prev, hidden[i],
                                        spectral, rng));
    prev = hidden[i];
  }
  mlp.layers.push_back(Linear::Create(store, name + ".out", prev, out, spectral, rng, zero_final));
  return mlp;
}

Mat Mlp::Forward(const ParamStore& store, const Mat& x, Cache* cache) const {
  Mat h = x;
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  for (size_t i = 0; i < layers.size(); ++i) {
    if (cache) cache->inputs.push_back(h);
    Mat z = layers[i].Forward(store, h);
    if (i + 1 == layers.size()) return z;
    if (cache) cache->pre.push_back(z);
    h = z.cwiseMax(0.0);
  }
  return h;
}

Mat Mlp::Backward(ParamStore& store, const Cache& cache, const Mat& dy) const {
  Mat g = dy;
  for (size_t i = layers.size(); i-- > 0;) {
    if (i + 1 < layers.size()) {
      g = g.cwiseProduct((cache.pre[i].array() > 0.0).cast<double>().matrix());
    }
    g = layers[i].Backward(store, cache.inputs[i], g);
  }
  return g;
}

Embedding Embedding::Create(ParamStore& store, const std::string& name, Eigen::Index vocab,
                            Eigen::Index dim, Rng* rng) {
  Embedding e;
  e.dim = dim;
  e.vocab = vocab;
  if (auto t = store.Find(name)) {
    e.table = *t;
    return e;
  }
  e.table = store.Add(name, dim, vocab);
  if (rng) InitUniform(store[e.table], 1.0, *rng);
  return e;
}

Mat Embedding::Lookup(const ParamStore& store, std::span<const int> ids) const {
  Mat out(dim, static_cast<Eigen::Index>(ids.size()));
  const Mat& t = store[table].value;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= vocab) throw VocabError("token id out of range");
    out.col(static_cast<Eigen::Index>(i)) = t.col(ids[i]);
  }
  return out;
}

void Embedding::Backward(ParamStore& store, std::span<const int> ids, const Mat& dx) const {
  Mat& g = store[table].grad;
  for (size_t i = 0; i < ids.size(); ++i) g.col(ids[i]) += dx.col(static_cast<Eigen::Index>(i));
}

Gru Gru::Create(ParamStore& store, const std::string& name, Eigen::Index in,
                Eigen::Index hidden, bool spectral, Rng* rng) {
  Gru g;
  g.in = in;
  g.hidden = hidden;
  if (auto wx = store.Find(name + ".wx")) {
    g.wx = *wx;
    g.wh = store.Index(name + ".wh");
    g.bx = store.Index(name + ".bx");
    g.bh = store.Index(name + ".bh");
    return g;
  }
  g.wx = store.Add(name + ".wx", 3 * hidden, in, spectral);
  g.wh = store.Add(name + ".wh", 3 * hidden, hidden, spectral);
  g.bx = store.Add(name + ".bx", 3 * hidden, 1);
  g.bh = store.Add(name + ".bh", 3 * hidden, 1);
  if (rng) {
    for (size_t id : {g.wx, g.wh, g.bx, g.bh}) InitFanIn(store[id], hidden, *rng);
  }
  return g;
}

Mat Gru::Forward(const ParamStore& store, const Mat& x, const Vec& h0, Cache* cache) const {
  CheckShape(x, in, store[wx].name.c_str());
  const Eigen::Index steps = x.cols();
  const Eigen::Index hs = hidden;
  Mat gx = store[wx].value * x;
  gx.colwise() += store[bx].value.col(0);
  const Mat& whm = store[wh].value;
  const Vec bhv = store[bh].value.col(0);
  Mat states(hs, steps);
  if (cache) {
    cache->x = x;
    cache->h.resize(hs, steps + 1);
    cache->h.col(0) = h0;
    cache->r.resize(hs, steps);
    cache->z.resize(hs, steps);
    cache->n.resize(hs, steps);
    cache->hn.resize(hs, steps);
  }
  Vec h = h0;
  Vec gh(3 * hs);
  for (Eigen::Index t = 0; t < steps; ++t) {
    gh.noalias() = whm * h;
    gh += bhv;
    const Vec r = (gx.col(t).head(hs) + gh.head(hs)).unaryExpr([](double v) { return Logistic(v); });
    const Vec z = (gx.col(t).segment(hs, hs) + gh.segment(hs, hs)).unaryExpr([](double v) { return Logistic(v); });
    const Vec hn = gh.tail(hs);
    const Vec n = (gx.col(t).tail(hs) + r.cwiseProduct(hn)).array().tanh().matrix();
    h = (1.0 - z.array()).matrix().cwiseProduct(n) + z.cwiseProduct(h);
    states.col(t) = h;
    if (cache) {
      cache->h.col(t + 1) = h;
      cache->r.col(t) = r;
      cache->z.col(t) = z;
      cache->n.col(t) = n;
      cache->hn.col(t) = hn;
    }
  }
  return states;
}

Mat Gru::Backward(ParamStore& store, const Cache& cache, const Mat& dh) const {
  const Eigen::Index steps = cache.x.cols();
  const Eigen::Index hs = hidden;
  Mat dgx(3 * hs, steps), dgh(3 * hs, steps);
  const Mat& whm = store[wh].value;
  Vec carry = Vec::Zero(hs);
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    const Vec dht = dh.col(t) + carry;
    const auto r = cache.r.col(t).array();
    const auto z = cache.z.col(t).array();
    const auto n = cache.n.col(t).array();
    const auto hprev = cache.h.col(t).array();
    const Eigen::ArrayXd dn = dht.array() * (1.0 - z);
    const Eigen::ArrayXd dz = dht.array() * (hprev - n);
    const Eigen::ArrayXd dn_pre = dn * (1.0 - n * n);
    const Eigen::ArrayXd dr = dn_pre * cache.hn.col(t).array();
    dgx.col(t).head(hs) = (dr * r * (1.0 - r)).matrix();
    dgx.col(t).segment(hs, hs) = (dz * z * (1.0 - z)).matrix();
    dgx.col(t).tail(hs) = dn_pre.matrix();
    dgh.col(t).head(2 * hs) = dgx.col(t).head(2 * hs);
    dgh.col(t).tail(hs) = (dn_pre * r).matrix();
    carry.noalias() = whm.transpose() * dgh.col(t);
    carry.array() += dht.array() * z;
  }
  store[wx].grad.noalias() += dgx * cache.x.transpose();
  store[bx].grad.col(0) += dgx.rowwise().sum();
  store[wh].grad.noalias() += dgh * cache.h.leftCols(steps).transpose();
  store[bh].grad.col(0) += dgh.rowwise().sum();
  return store[wx].value.transpose() * dgx;
}

Vec Gru::Step(const ParamStore& store, const Vec& x, const Vec& h) const {
  return Forward(store, x, h, nullptr).col(0);
}

nlohmann::json ScorerSpec::ToJson() const {
  const char* names[] = {"mlp", "birnn", "causal_rnn", "embedding+mlp"};
  return {{"architecture", names[static_cast<int>(architecture)]},
          {"vocab", vocab},
          {"input_dim", input_dim},
          {"embed", embed},
          {"hidden", hidden},
          {"widths", widths},
          {"max_positions", max_positions}};
}

ScorerSpec ScorerSpec::FromJson(const nlohmann::json& j) {
  ScorerSpec s;
  const std::string a = j.at("architecture").get<std::string>();
  if (a == "mlp") {
    s.architecture = Architecture::kMlp;
  } else if (a == "birnn") {
    s.architecture = Architecture::kBiRnn;
  } else if (a == "causal_rnn") {
    s.architecture = Architecture::kCausalRnn;
  } else if (a == "embedding+mlp") {
    s.architecture = Architecture::kEmbeddingMlp;
  } else {
    throw ShapeError("unknown architecture '" + a + "'");
  }
  s.vocab = j.at("vocab").get<int>();
  s.input_dim = j.at("input_dim").get<int>();
  s.embed = j.at("embed").get<int>();
  s.hidden = j.at("hidden").get<int>();
  s.widths = j.at("widths").get<std::vector<int>>();
  s.max_positions = j.at("max_positions").get<int>();
  return s;
}

MlpScorer::MlpScorer(const ScorerSpec& spec, ParamStore& store, const std::string& prefix,
                     Rng* rng)
    : spec_(spec) {
  if (spec.input_dim < 1) throw ShapeError("mlp scorer needs input_dim >= 1");
  mlp_ = Mlp::Create(store, prefix + ".mlp", spec.input_dim, spec.widths, 1, true, rng, true);
}

Mat MlpScorer::Forward(const ParamStore& store, const Mat& x, Tape* tape) const {
  if (tape) *tape = Tape(store);
  Mat probs = LogisticOf(mlp_.Forward(store, x, tape ? &tape->cache : nullptr));
  if (tape) tape->probs = probs;
  return probs;
}

Mat MlpScorer::Backward(ParamStore& store, Tape& tape, const Mat& upstream) const {
  tape.Consume();
  return mlp_.Backward(store, tape.cache, ThroughLogistic(tape.probs, upstream));
}

ClauseScorer::ClauseScorer(const ScorerSpec& spec, ParamStore& store, const std::string& prefix,
                           Rng* rng)
    : spec_(spec) {
  if (spec.vocab < 1 || spec.max_positions < 1) throw ShapeError("clause scorer needs vocab and positions");
  tokens_ = Embedding::Create(store, prefix + ".embed", spec.vocab, spec.embed, rng);
  const std::string pos_name = prefix + ".positions";
  if (auto id = store.Find(pos_name)) {
    positions_ = *id;
  } else {
    positions_ = store.Add(pos_name, spec.embed, spec.max_positions);
    if (rng) InitUniform(store[positions_], 1.0, *rng);
  }
  mlp_ = Mlp::Create(store, prefix + ".mlp", spec.embed, spec.widths, 1, true, rng, true);
}

Mat ClauseScorer::Pool(const ParamStore& store, const std::vector<std::vector<int>>& clauses) const {
  Mat x = Mat::Zero(spec_.embed, static_cast<Eigen::Index>(clauses.size()));
  const Mat& pos = store[positions_].value;
  for (size_t c = 0; c < clauses.size(); ++c) {
    const auto& ids = clauses[c];
    if (ids.empty()) throw ShapeError("empty clause");
    const Mat e = tokens_.Lookup(store, ids);
    for (size_t i = 0; i < ids.size(); ++i) {
      const auto p = static_cast<Eigen::Index>(std::min<size_t>(i, static_cast<size_t>(spec_.max_positions - 1)));
      x.col(static_cast<Eigen::Index>(c)) += e.col(static_cast<Eigen::Index>(i)) + pos.col(p);
    }
    x.col(static_cast<Eigen::Index>(c)) /= static_cast<double>(ids.size());
  }
  return x;
}

Mat ClauseScorer::Forward(const ParamStore& store, const std::vector<std::vector<int>>& clauses,
                          Tape* tape) const {
  if (tape) {
    *tape = Tape(store);
    tape->clauses = clauses;
  }
  Mat probs = LogisticOf(mlp_.Forward(store, Pool(store, clauses), tape ? &tape->cache : nullptr));
  if (tape) tape->probs = probs;
  return probs;
}

void ClauseScorer::Backward(ParamStore& store, Tape& tape, const Mat& upstream) const {
  tape.Consume();
  const Mat dx = mlp_.Backward(store, tape.cache, ThroughLogistic(tape.probs, upstream));
  Mat& pos_grad = store[positions_].grad;
  for (size_t c = 0; c < tape.clauses.size(); ++c) {
    const auto& ids = tape.clauses[c];
    const Vec g = dx.col(static_cast<Eigen::Index>(c)) / static_cast<double>(ids.size());
    Mat rep = g.replicate(1, static_cast<Eigen::Index>(ids.size()));
    tokens_.Backward(store, ids, rep);
    for (size_t i = 0; i < ids.size(); ++i) {
      pos_grad.col(static_cast<Eigen::Index>(std::min<size_t>(i, static_cast<size_t>(spec_.max_positions - 1)))) += g;
    }
  }
}

BiRnnScorer::BiRnnScorer(const ScorerSpec& spec, ParamStore& store, const std::string& prefix,
                         Rng* rng)
    : spec_(spec) {
  if (spec.vocab < 1) throw ShapeError("birnn scorer needs a vocabulary");
  embed_ = Embedding::Create(store, prefix + ".embed", spec.vocab, spec.embed, rng);
  forward_ = Gru::Create(store, prefix + ".fwd", spec.embed, spec.hidden, true, rng);
  backward_ = Gru::Create(store, prefix + ".bwd", spec.embed, spec.hidden, true, rng);
  head_ = Linear::Create(store, prefix + ".head", 2 * spec.hidden, 1, true, rng, true);
}

Mat BiRnnScorer::Forward(const ParamStore& store, std::span<const int> ids, Tape* tape) const {
  if (ids.empty()) throw ShapeError("empty token sequence");
  const Mat x = embed_.Lookup(store, ids);
  const Vec h0 = Vec::Zero(spec_.hidden);
  Gru::Cache fc, bc;
  const Mat hf = forward_.Forward(store, x, h0, tape ? &fc : nullptr);
  const Mat hb = ReverseColumns(backward_.Forward(store, ReverseColumns(x), h0, tape ? &bc : nullptr));
  Mat features(2 * spec_.hidden, x.cols());
  features.topRows(spec_.hidden) = hf;
  features.bottomRows(spec_.hidden) = hb;
  Mat probs = LogisticOf(head_.Forward(store, features));
  if (tape) {
    *tape = Tape(store);
    tape->ids.assign(ids.begin(), ids.end());
    tape->fwd = std::move(fc);
    tape->bwd = std::move(bc);
    tape->features = std::move(features);
    tape->probs = probs;
  }
  return probs;
}

void BiRnnScorer::Backward(ParamStore& store, Tape& tape, const Mat& upstream) const {
  tape.Consume();
  const Mat dfeat = head_.Backward(store, tape.features, ThroughLogistic(tape.probs, upstream));
  Mat dx = forward_.Backward(store, tape.fwd, dfeat.topRows(spec_.hidden));
  dx += ReverseColumns(backward_.Backward(store, tape.bwd, ReverseColumns(dfeat.bottomRows(spec_.hidden))));
  embed_.Backward(store, tape.ids, dx);
}

CausalRnn::CausalRnn(const ScorerSpec& spec, ParamStore& store, const std::string& prefix,
                     Rng* rng)
    : spec_(spec) {
  if (spec.vocab < 4) throw ShapeError("causal decoder needs a vocabulary");
  embed_ = Embedding::Create(store, prefix + ".embed", spec.vocab, spec.embed, rng);
  gru_ = Gru::Create(store, prefix + ".gru", spec.embed, spec.hidden, false, rng);
  head_ = Linear::Create(store, prefix + ".head", spec.hidden, spec.vocab, false, rng, true);
}

Mat CausalRnn::Forward(const ParamStore& store, std::span<const int> tokens, bool extra_step,
                       Mat* states, Tape* tape) const {
  const size_t steps = tokens.size() + (extra_step ? 1 : 0);
  std::vector<int> inputs;
  inputs.reserve(steps);
  inputs.push_back(start_token_);
  for (size_t i = 0; i + 1 < steps; ++i) inputs.push_back(tokens[i]);
  const Mat x = embed_.Lookup(store, inputs);
  Gru::Cache cache;
  Mat s = gru_.Forward(store, x, InitialState(), tape ? &cache : nullptr);
  const auto t = static_cast<Eigen::Index>(tokens.size());
  Mat logits = head_.Forward(store, s.leftCols(t));
  if (tape) {
    *tape = Tape(store);
    tape->inputs = std::move(inputs);
    tape->gru = std::move(cache);
    tape->states = s;
  }
  if (states) *states = std::move(s);
  return logits;
}

void CausalRnn::Backward(ParamStore& store, Tape& tape, const Mat& dlogits,
                         const Mat* dstates) const {
  tape.Consume();
  const Eigen::Index t = dlogits.cols();
  Mat ds = Mat::Zero(spec_.hidden, tape.states.cols());
  ds.leftCols(t) = head_.Backward(store, tape.states.leftCols(t), dlogits);
  if (dstates) ds += *dstates;
  const Mat dx = gru_.Backward(store, tape.gru, ds);
  embed_.Backward(store, tape.inputs, dx);
}

Vec CausalRnn::Advance(const ParamStore& store, int token, const Vec& state) const {
  const int id = token;
  return gru_.Step(store, embed_.Lookup(store, std::span<const int>(&id, 1)).col(0), state);
}

Vec CausalRnn::Logits(const ParamStore& store, const Vec& state) const {
  return head_.Forward(store, state).col(0);
}

Mat LogSoftmaxColumns(const Mat& logits) {
  Mat out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double mx = logits.col(c).maxCoeff();
    const double lse = mx + std::log((logits.col(c).array() - mx).exp().sum());
    out.col(c) = logits.col(c).array() - lse;
  }
  return out;
}

GradCheckReport GradCheck(ParamStore& store, const std::function<double(bool)>& loss,
                          double tolerance, double h, size_t max_entries, uint64_t seed) {
  store.ZeroGrad();
  loss(true);
  std::vector<Mat> analytic;
  for (const auto& p : store.params()) analytic.push_back(p.grad);
  store.ZeroGrad();

  GradCheckReport report;
  Rng rng(seed);
  for (size_t pi = 0; pi < store.size(); ++pi) {
    Param& p = store[pi];
    const auto total = static_cast<size_t>(p.value.size());
    std::vector<size_t> coords(total);
    for (size_t i = 0; i < total; ++i) coords[i] = i;
    if (max_entries > 0 && total > max_entries) {
      rng.Shuffle(coords);
      coords.resize(max_entries);
    }
    GradCheckEntry entry{p.name, 0.0, true};
    for (size_t idx : coords) {
      double& x = p.value.data()[idx];
      const double saved = x;
      x = saved + h;
      store.Touch();
      const double lp = loss(false);
      x = saved - h;
      store.Touch();
      const double lm = loss(false);
      x = saved;
      store.Touch();
      const double numeric = (lp - lm) / (2.0 * h);
      const double a = analytic[pi].data()[idx];
      const double rel = std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), 1e-6});
      entry.worst_relative_error = std::max(entry.worst_relative_error, rel);
    }
    entry.pass = entry.worst_relative_error < tolerance;
    if (entry.worst_relative_error >= report.worst_relative_error) {
      report.worst_relative_error = entry.worst_relative_error;
      report.worst_param = entry.param;
    }
    report.pass = report.pass && entry.pass;
    report.entries.push_back(entry);
  }
  return report;
}

GradCheckReport GradCheckScorer(const ScorerSpec& spec, uint64_t seed, double tolerance,
                                size_t max_entries) {
  Rng rng(seed);
  ParamStore store;
  auto random_ids = [&](size_t n) {
    std::vector<int> ids(n);
    for (int& id : ids) id = static_cast<int>(rng.Index(static_cast<uint64_t>(spec.vocab)));
    return ids;
  };
  auto random_mat = [&](Eigen::Index r, Eigen::Index c) {
    Mat m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.Normal();
    return m;
  };
  std::function<double(bool)> loss;
  switch (spec.architecture) {
    case Architecture::kMlp: {
      MlpScorer scorer(spec, store, "mlp", &rng);
      const Mat x = random_mat(spec.input_dim, 4);
      const Mat c = random_mat(1, 4);
      loss = [&store, scorer, x, c](bool backward) {
        MlpScorer::Tape tape;
        const Mat p = scorer.Forward(store, x, backward ? &tape : nullptr);
        if (backward) scorer.Backward(store, tape, c);
        return p.cwiseProduct(c).sum();
      };
      break;
    }
    case Architecture::kEmbeddingMlp: {
      ClauseScorer scorer(spec, store, "clause", &rng);
      std::vector<std::vector<int>> clauses = {random_ids(2), random_ids(4), random_ids(3)};
      const Mat c = random_mat(1, 3);
      loss = [&store, scorer, clauses, c](bool backward) {
        ClauseScorer::Tape tape;
        const Mat p = scorer.Forward(store, clauses, backward ? &tape : nullptr);
        if (backward) scorer.Backward(store, tape, c);
        return p.cwiseProduct(c).sum();
      };
      break;
    }
    case Architecture::kBiRnn: {
      BiRnnScorer scorer(spec, store, "birnn", &rng);
      const std::vector<int> ids = random_ids(6);
      const Mat c = random_mat(1, 6);
      loss = [&store, scorer, ids, c](bool backward) {
        BiRnnScorer::Tape tape;
        const Mat p = scorer.Forward(store, ids, backward ? &tape : nullptr);
        if (backward) scorer.Backward(store, tape, c);
        return p.cwiseProduct(c).sum();
      };
      break;
    }
    case Architecture::kCausalRnn: {
      CausalRnn decoder(spec, store, "policy", &rng);
      const std::vector<int> ids = random_ids(6);
      const Mat c = random_mat(spec.vocab, 6);
      const Mat d = random_mat(spec.hidden, 7);
      loss = [&store, decoder, ids, c, d](bool backward) {
        CausalRnn::Tape tape;
        Mat states;
        const Mat logits = decoder.Forward(store, ids, true, &states, backward ? &tape : nullptr);
        if (backward) decoder.Backward(store, tape, c, &d);
        return logits.cwiseProduct(c).sum() + states.cwiseProduct(d).sum();
      };
      break;
    }
  }
  for (auto& p : store.params()) InitUniform(p, 0.5, rng);
  store.Touch();
  return GradCheck(store, loss, tolerance, 1e-5, max_entries, seed);
}

}  // namespace tabgen
