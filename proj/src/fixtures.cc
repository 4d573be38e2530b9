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

#include "tabgen/fixtures.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <vector>

#include "tabgen/common.h"

namespace tabgen {
namespace {

std::string Fixed(double v, int places) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", places, v);
  return buf;
}

}  // namespace

std::string ToyCsv(size_t rows, double minority_share, uint64_t seed) {
  Rng rng(seed);
  struct Patient {
    double age, bmi, glucose;
    bool male, smoker;
    int activity;
    double risk;
  };
  std::vector<Patient> ps(rows);
  for (auto& p : ps) {
    p.male = rng.Uniform() < 0.5;
    p.age = std::round(std::clamp(55.0 + 12.0 * rng.Normal(), 25.0, 90.0));
    p.bmi = std::round(10.0 * (27.0 + 0.05 * (p.age - 55.0) + 4.0 * rng.Normal())) / 10.0;
    p.glucose = std::round(90.0 + 1.8 * (p.bmi - 27.0) + 0.4 * (p.age - 55.0) + 10.0 * rng.Normal());
    p.smoker = rng.Uniform() < (p.male ? 0.35 : 0.15);
    const double a = 0.6 - 0.02 * (p.age - 55.0) + rng.Normal();
    p.activity = a < 0.0 ? 0 : (a < 1.0 ? 1 : 2);
    p.risk = 0.06 * (p.glucose - 90.0) + 0.04 * (p.age - 55.0) + 0.8 * p.smoker -
             0.3 * p.activity + rng.Normal();
  }
  // The positive class is exactly the top-risk share of rows.
  std::vector<size_t> order(rows);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return ps[a].risk > ps[b].risk; });
  const auto positives = static_cast<size_t>(std::lround(minority_share * static_cast<double>(rows)));
  std::vector<bool> positive(rows, false);
  for (size_t i = 0; i < positives && i < rows; ++i) positive[order[i]] = true;

  static const char* kActivity[] = {"low", "medium", "high"};
  std::string csv = "age,sex,bmi,glucose,smoker,activity,outcome\n";
  for (size_t i = 0; i < rows; ++i) {
    const Patient& p = ps[i];
    csv += Fixed(p.age, 0) + "," + (p.male ? "Male" : "Female") + "," + Fixed(p.bmi, 1) + "," +
           Fixed(p.glucose, 0) + "," + (p.smoker ? "yes" : "no") + "," + kActivity[p.activity] +
           "," + (positive[i] ? "1" : "0") + "\n";
  }
  return csv;
}

std::string PlantedCsv(size_t rows, uint64_t seed) {
  Rng rng(seed);
  static const char* kLevels[] = {"a", "b", "c"};
  const double rho = kPlantedPearson;
  std::string csv = "f1,f2,n1,c1,c2,n2,y\n";
  for (size_t i = 0; i < rows; ++i) {
    const double z1 = rng.Normal();
    const double z2 = rng.Normal();
    const double f1 = 10.0 + 2.0 * z1;
    const double f2 = 50.0 + 5.0 * (rho * z1 + std::sqrt(1.0 - rho * rho) * z2);
    const double n1 = rng.Normal();
    const size_t c1 = rng.Index(3);
    const size_t c2 = rng.Uniform() < 0.7 ? c1 : rng.Index(3);
    const size_t n2 = rng.Index(3);
    csv += Fixed(f1, 3) + "," + Fixed(f2, 3) + "," + Fixed(n1, 3) + "," + kLevels[c1] + "," +
           kLevels[c2] + "," + kLevels[n2] + "," + (rng.Uniform() < 0.5 ? "p" : "q") + "\n";
  }
  return csv;
}

}  // namespace tabgen
