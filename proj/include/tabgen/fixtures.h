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

#ifndef TABGEN_FIXTURES_H_
#define TABGEN_FIXTURES_H_

#include <cstdint>
#include <string>

namespace tabgen {

// Clinical-style toy table: continuous age, bmi, glucose; categorical sex,
// smoker, activity; binary label `outcome` whose positive class holds
// round(minority_share * rows) rows.
std::string ToyCsv(size_t rows = 300, double minority_share = 0.2, uint64_t seed = 7);

inline constexpr double kPlantedPearson = 0.8;
// Cramer's V of a 3x3 table where c2 copies c1 with probability 0.7 and is
// otherwise uniform.
inline constexpr double kPlantedCramersV = 0.7;

// f1/f2 carry kPlantedPearson, c1/c2 carry kPlantedCramersV; n1, n2 and the
// label y are independent noise.
std::string PlantedCsv(size_t rows, uint64_t seed);

}  // namespace tabgen

#endif  // TABGEN_FIXTURES_H_
