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

#ifndef TABGEN_CHECKPOINT_H_
#define TABGEN_CHECKPOINT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "tabgen/discriminators.h"
#include "tabgen/neural.h"
#include "tabgen/policy.h"
#include "tabgen/serializer.h"

namespace tabgen {

inline constexpr int kCheckpointFormatVersion = 1;

// Everything needed to resume generation or training: the serializer
// (schema with standardization statistics and vocabulary), the policy with
// its value head and reference copy, and the discriminator ensemble once
// adversarial training has started.
struct Checkpoint {
  std::string stage;  // "pretrain" or "train"
  uint64_t config_hash = 0;
  uint64_t seed = 0;
  int epochs_completed = 0;
  Serializer serializer;
  PolicyState policy;
  std::optional<DiscriminatorEnsemble> ensemble;
};

// Parameter values, adaptive moments and spectral vectors, stored as
// little-endian float64 byte strings.
nlohmann::json ParamStoreToJson(const ParamStore& store);
// Overwrites `store` in place. Names and shapes must match exactly.
void ParamStoreFromJson(const nlohmann::json& j, ParamStore& store);

// CBOR container.
std::string EncodeCheckpoint(const Checkpoint& checkpoint);
Checkpoint DecodeCheckpoint(std::string_view bytes);

void SaveCheckpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint LoadCheckpoint(const std::string& path);

}  // namespace tabgen

#endif  // TABGEN_CHECKPOINT_H_
