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

#include "tabgen/evaluation.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tabgen/common.h"

namespace tabgen {

using nlohmann::json;

namespace {

double Mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

void RequireSameSchema(const Dataset& a, const Dataset& b) {
  if (a.num_features() != b.num_features()) {
    throw SchemaError("audit inputs have different feature counts");
  }
  for (size_t j = 0; j < a.num_features(); ++j) {
    if (a.schema[j].name != b.schema[j].name || a.schema[j].kind != b.schema[j].kind) {
      throw SchemaError("audit inputs disagree on feature " + a.schema[j].name);
    }
  }
}

bool InSupport(double v, const FeatureSpec& f, double lo, double hi,
               const std::vector<bool>& seen) {
  if (IsMissing(v)) return true;
  if (f.is_continuous()) return v >= lo && v <= hi;
  const auto c = static_cast<size_t>(v);
  return c < seen.size() && seen[c];
}

// Census() rejects single-class data; synthetic output may legitimately be one.
std::vector<size_t> LabelCounts(const Dataset& ds) {
  std::vector<size_t> counts(ds.schema.label_spec().vocabulary.size(), 0);
  for (size_t i = 0; i < ds.rows.size(); ++i) ++counts.at(static_cast<size_t>(ds.LabelOf(i)));
  return counts;
}

json Optional(const std::optional<double>& v) { return v ? json(*v) : json("NOT-APPLICABLE"); }

}  // namespace

double MixedDistance(const Row& a, const Row& b, const Schema& schema) {
  double s = 0.0;
  for (size_t j = 0; j < schema.size(); ++j) {
    const bool ma = IsMissing(a[j]), mb = IsMissing(b[j]);
    if (ma && mb) continue;
    if (ma != mb) {
      s += 1.0;
    } else if (schema[j].is_continuous()) {
      const double d = a[j] - b[j];
      s += d * d;
    } else if (a[j] != b[j]) {
      s += 1.0;
    }
  }
  return std::sqrt(s);
}

std::vector<double> NearestRealDistances(const Dataset& real, const Dataset& synthetic) {
  if (real.rows.empty()) throw EmptySampleError("nearest-record distance needs real rows");
  std::vector<double> out;
  out.reserve(synthetic.rows.size());
  for (const auto& s : synthetic.rows) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : real.rows) best = std::min(best, MixedDistance(s, r, real.schema));
    out.push_back(best);
  }
  return out;
}

double LeaveOneOutRadius(const Dataset& real, double percentile) {
  if (real.rows.size() < 2) throw EmptySampleError("leave-one-out radius needs two real rows");
  std::vector<double> nn;
  nn.reserve(real.rows.size());
  for (size_t i = 0; i < real.rows.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < real.rows.size(); ++k) {
      if (k != i) best = std::min(best, MixedDistance(real.rows[i], real.rows[k], real.schema));
    }
    nn.push_back(best);
  }
  return Percentile(std::move(nn), percentile);
}

DcrSummary Dcr(const Dataset& real, const Dataset& synthetic) {
  DcrSummary s;
  s.distances = NearestRealDistances(real, synthetic);
  if (!s.distances.empty()) {
    s.min = *std::min_element(s.distances.begin(), s.distances.end());
    s.p5 = Percentile(s.distances, 5.0);
    s.median = Percentile(s.distances, 50.0);
  }
  return s;
}

std::optional<double> CorrelationFidelity(const Dataset& real, const Dataset& synthetic,
                                          const CriticalPairs& pairs) {
  if (pairs.empty()) return std::nullopt;
  RequireSameSchema(real, synthetic);
  const AssociationMatrix cr = ComputeAssociationMatrix(real);
  const AssociationMatrix cs = ComputeAssociationMatrix(synthetic);
  double dev = 0.0;
  for (const auto& p : pairs.pairs) dev += std::fabs(cr.at(p.a, p.b) - cs.at(p.a, p.b));
  dev /= static_cast<double>(pairs.pairs.size());
  return std::clamp(1.0 - dev, 0.0, 1.0);
}

double DeltaGain(double ours, const std::map<std::string, double>& baselines) {
  if (baselines.empty()) throw ConfigError("delta gain needs at least one baseline");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [name, f1] : baselines) best = std::max(best, f1);
  return ours - best;
}

std::vector<int> StratifiedFolds(const Dataset& ds, int folds, uint64_t seed) {
  if (folds < 1) throw ConfigError("fold count must be positive");
  const size_t classes = ds.schema.label_spec().vocabulary.size();
  std::vector<std::vector<size_t>> by_class(classes);
  for (size_t i = 0; i < ds.rows.size(); ++i) by_class[static_cast<size_t>(ds.LabelOf(i))].push_back(i);
  Rng rng(seed);
  std::vector<int> fold(ds.rows.size(), 0);
  // Class members are dealt round-robin after a shuffle; the running offset
  // keeps fold sizes within one of each other.
  size_t offset = 0;
  for (auto& members : by_class) {
    rng.Shuffle(members);
    for (size_t k = 0; k < members.size(); ++k) {
      fold[members[k]] = static_cast<int>((offset + k) % static_cast<size_t>(folds));
    }
    offset += members.size();
  }
  return fold;
}

TstrResult Tstr(const Dataset& synthetic, const Dataset& real_test, int folds, uint64_t seed,
                const ForestConfig& forest) {
  RequireSameSchema(synthetic, real_test);
  if (real_test.rows.empty()) throw EmptySampleError("TSTR needs real test rows");
  TstrResult result;
  const std::vector<size_t> syn = LabelCounts(synthetic);
  const std::vector<size_t> real = LabelCounts(real_test);
  for (size_t c = 0; c < real.size(); ++c) {
    if (real[c] > 0 && syn[c] == 0) {
      result.missing_classes.push_back(real_test.schema.label_spec().vocabulary[c]);
    }
  }
  const std::vector<int> fold = StratifiedFolds(real_test, folds, seed);
  for (int k = 0; k < folds; ++k) {
    Dataset part;
    part.schema = real_test.schema;
    part.standardized = real_test.standardized;
    for (size_t i = 0; i < real_test.rows.size(); ++i) {
      if (fold[i] == k) part.rows.push_back(real_test.rows[i]);
    }
    if (part.rows.empty()) continue;
    std::vector<int> truth(part.rows.size());
    for (size_t i = 0; i < part.rows.size(); ++i) truth[i] = part.LabelOf(i);
    std::vector<int> predicted;
    if (synthetic.rows.empty()) {
      predicted.assign(part.rows.size(), -1);
    } else {
      RandomForest rf;
      rf.Fit(synthetic, forest, seed + static_cast<uint64_t>(k));
      predicted = rf.PredictAll(part);
    }
    result.fold_f1.push_back(MacroF1(truth, predicted));
  }
  result.mean_f1 = Mean(result.fold_f1);
  return result;
}

void FaithWeights::Validate() const {
  if (fact < 0.0 || align < 0.0 || integ < 0.0 || track < 0.0) {
    throw ConfigError("FAITH weights must be non-negative");
  }
  if (std::fabs(fact + align + integ + track - 1.0) > 1e-9) {
    throw ConfigError("FAITH weights must sum to 1");
  }
}

json FaithWeights::ToJson() const {
  return {{"fact", fact}, {"align", align}, {"integ", integ}, {"track", track}};
}

FaithWeights FaithWeights::FromJson(const json& j) {
  FaithWeights w;
  for (const auto& [key, value] : j.items()) {
    if (key == "fact") {
      w.fact = value.get<double>();
    } else if (key == "align") {
      w.align = value.get<double>();
    } else if (key == "integ") {
      w.integ = value.get<double>();
    } else if (key == "track") {
      w.track = value.get<double>();
    } else {
      throw ConfigError("unknown FAITH weight: " + key);
    }
  }
  w.Validate();
  return w;
}

double FaithComposite(double fact, double align, double integ, double track,
                      const FaithWeights& w) {
  return w.fact * fact + w.align * align + w.integ * integ + w.track * track;
}

double AlignNormalizer(size_t m) {
  return 2.0 * std::sqrt(static_cast<double>(m) * static_cast<double>(m > 0 ? m - 1 : 0));
}

FaithReport Faith(const Dataset& real_raw, const Dataset& synthetic_raw,
                  const std::vector<double>& nearest, const RuleSet& rules,
                  const FaithWeights& weights, double epsilon_priv) {
  weights.Validate();
  RequireSameSchema(real_raw, synthetic_raw);
  if (nearest.size() != synthetic_raw.rows.size()) {
    throw ShapeError("one nearest-real distance per synthetic row is required");
  }
  FaithReport r;
  r.weights = weights;
  r.epsilon_priv = epsilon_priv;
  r.violations.assign(rules.size(), 0);
  const size_t n = synthetic_raw.rows.size();
  const size_t m = real_raw.num_features();

  size_t satisfied = 0;
  for (const auto& row : synthetic_raw.rows) {
    bool all = true;
    for (size_t i = 0; i < rules.size(); ++i) {
      if (!rules.Check(i, row)) {
        ++r.violations[i];
        all = false;
      }
    }
    satisfied += all;
  }

  const double d = AlignNormalizer(m);
  if (d > 0.0 && n > 0) {
    const AssociationMatrix cr = ComputeAssociationMatrix(real_raw);
    const AssociationMatrix cs = ComputeAssociationMatrix(synthetic_raw);
    double fro = 0.0;
    for (size_t k = 0; k < cr.values.size(); ++k) {
      const double diff = cr.values[k] - cs.values[k];
      fro += diff * diff;
    }
    r.align = std::clamp(1.0 - std::sqrt(fro) / d, 0.0, 1.0);
  } else {
    r.align = 1.0;
  }

  size_t novel = 0;
  for (double x : nearest) novel += x > epsilon_priv;

  std::vector<double> lo(m, 0.0), hi(m, 0.0);
  std::vector<std::vector<bool>> seen(m);
  for (size_t j = 0; j < m; ++j) {
    const FeatureSpec& f = real_raw.schema[j];
    if (f.is_continuous()) {
      lo[j] = std::numeric_limits<double>::infinity();
      hi[j] = -std::numeric_limits<double>::infinity();
    } else {
      seen[j].assign(f.vocabulary.size(), false);
    }
    for (const auto& row : real_raw.rows) {
      const double v = row[j];
      if (IsMissing(v)) continue;
      if (f.is_continuous()) {
        lo[j] = std::min(lo[j], v);
        hi[j] = std::max(hi[j], v);
      } else {
        seen[j][static_cast<size_t>(v)] = true;
      }
    }
  }
  size_t outside = 0;
  for (const auto& row : synthetic_raw.rows) {
    bool any = false;
    for (size_t j = 0; j < m && !any; ++j) any = !InSupport(row[j], real_raw.schema[j], lo[j], hi[j], seen[j]);
    outside += any;
  }

  const double dn = static_cast<double>(std::max<size_t>(n, 1));
  r.fact = n ? static_cast<double>(satisfied) / dn : 1.0;
  r.integ = n ? static_cast<double>(novel) / dn : 0.0;
  r.track = 1.0 - static_cast<double>(outside) / dn;
  r.composite = FaithComposite(r.fact, r.align, r.integ, r.track, weights);
  return r;
}

json FaithReport::ToJson(const RuleSet& rules) const {
  json tally = json::array();
  for (size_t i = 0; i < violations.size(); ++i) {
    tally.push_back({{"rule", rules.Describe(i)}, {"violations", violations[i]}});
  }
  return {{"S_Fact", fact},
          {"S_Align", align},
          {"S_Integ", integ},
          {"S_Track", track},
          {"weights", weights.ToJson()},
          {"S_FAITH", composite},
          {"epsilon_priv", epsilon_priv},
          {"constraint_violations", tally}};
}

std::vector<FeatureDivergence> MarginalDivergences(const Dataset& real, const Dataset& synthetic,
                                                   int bins) {
  RequireSameSchema(real, synthetic);
  std::vector<FeatureDivergence> out;
  for (size_t j = 0; j < real.num_features(); ++j) {
    const FeatureSpec& f = real.schema[j];
    const std::vector<double> a = real.Column(j), b = synthetic.Column(j);
    FeatureDivergence fd;
    fd.name = f.name;
    fd.continuous = f.is_continuous();
    if (fd.continuous) {
      try {
        fd.ks = KsStatistic(a, b);
      } catch (const EmptySampleError&) {
        fd.ks.reset();
      }
    }
    HistogramPair h = Histogramize(a, b, f, bins);
    fd.jsd = Jsd(h.p, h.q);
    fd.kl = KlDivergence(h.p, h.q);
    fd.hellinger = Hellinger(h.p, h.q);
    out.push_back(std::move(fd));
  }
  return out;
}

AuditReport Audit(const Dataset& real, const Dataset& synthetic, const RuleSet& rules,
                  const CriticalPairs& pairs, const AuditOptions& options,
                  const Dataset* real_test) {
  RequireSameSchema(real, synthetic);
  if (synthetic.rows.empty()) throw EmptySampleError("synthetic data has no rows to audit");
  if (real.rows.empty()) throw EmptySampleError("real data has no rows to audit against");
  AuditReport rep;
  rep.features = MarginalDivergences(real, synthetic, options.bins);
  std::vector<double> ks, jsd, kl, hel, jsd_num, jsd_cat;
  for (const auto& f : rep.features) {
    if (f.ks) ks.push_back(*f.ks);
    jsd.push_back(f.jsd);
    kl.push_back(f.kl);
    hel.push_back(f.hellinger);
    (f.continuous ? jsd_num : jsd_cat).push_back(f.jsd);
  }
  if (!ks.empty()) rep.mean_ks = Mean(ks);
  rep.mean_jsd = Mean(jsd);
  rep.mean_kl = Mean(kl);
  rep.mean_hellinger = Mean(hel);
  if (!jsd_num.empty()) rep.mean_jsd_numeric = Mean(jsd_num);
  if (!jsd_cat.empty()) rep.mean_jsd_categorical = Mean(jsd_cat);
  rep.correlation_fidelity = CorrelationFidelity(real, synthetic, pairs);

  const Dataset real_std = Standardize(real);
  const Dataset syn_std = ApplyStandardization(synthetic, real_std.schema);
  rep.dcr = Dcr(real_std, syn_std);
  const double eps = options.epsilon_priv ? *options.epsilon_priv : LeaveOneOutRadius(real_std);
  rep.faith = Faith(real, synthetic, rep.dcr.distances, rules, options.weights, eps);

  if (real_test) {
    const Dataset test_std = ApplyStandardization(*real_test, real_std.schema);
    rep.tstr = Tstr(syn_std, test_std, options.folds, options.seed, options.forest);
    if (!options.baselines.empty()) rep.delta = DeltaGain(rep.tstr->mean_f1, options.baselines);
  }
  return rep;
}

json AuditReport::ToJson(const RuleSet& rules) const {
  json feats = json::array();
  for (const auto& f : features) {
    feats.push_back({{"feature", f.name},
                     {"type", f.continuous ? "numeric" : "categorical"},
                     {"ks", f.ks ? json(*f.ks) : json(nullptr)},
                     {"jsd", f.jsd},
                     {"kl", f.kl},
                     {"hellinger", f.hellinger}});
  }
  json j = {{"schema_version", kAuditSchemaVersion},
            {"features", feats},
            {"mean", {{"ks", mean_ks ? json(*mean_ks) : json(nullptr)},
                      {"jsd", mean_jsd},
                      {"kl", mean_kl},
                      {"hellinger", mean_hellinger}}},
            {"jsd_by_type", {{"numeric", mean_jsd_numeric ? json(*mean_jsd_numeric) : json(nullptr)},
                             {"categorical",
                              mean_jsd_categorical ? json(*mean_jsd_categorical) : json(nullptr)}}},
            {"correlation_fidelity", Optional(correlation_fidelity)},
            {"dcr", {{"min", dcr.min}, {"p5", dcr.p5}, {"median", dcr.median}}},
            {"faith", faith.ToJson(rules)},
            {"notes",
             {"correlation_fidelity is 1 - mean absolute deviation over critical pairs (higher is "
              "better)",
              "feature-level pairs involving missing values are skipped",
              "JSD uses log base 2; KL uses additive smoothing 1e-8"}}};
  if (tstr) {
    j["tstr"] = {{"fold_f1", tstr->fold_f1},
                 {"mean_f1", tstr->mean_f1},
                 {"missing_classes", tstr->missing_classes}};
  }
  if (delta) j["delta"] = *delta;
  return j;
}

std::string AuditReport::ToCsv() const {
  std::ostringstream out;
  out.precision(17);
  out << "feature,type,ks,jsd,kl,hellinger\n";
  for (const auto& f : features) {
    out << f.name << ',' << (f.continuous ? "numeric" : "categorical") << ',';
    if (f.ks) out << *f.ks;
    out << ',' << f.jsd << ',' << f.kl << ',' << f.hellinger << '\n';
  }
  out << "# correlation fidelity is reported as 1 - mean deviation (higher is better)\n";
  return out.str();
}

}  // namespace tabgen
