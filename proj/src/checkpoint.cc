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

#include "tabgen/checkpoint.h"

#include <bit>
#include <cstring>

#include "tabgen/common.h"

namespace tabgen {

using nlohmann::json;

namespace {

using Bytes = json::binary_t;

Bytes ToBytes(const double* data, Eigen::Index n) {
  std::vector<std::uint8_t> out(static_cast<size_t>(n) * 8);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto bits = std::bit_cast<uint64_t>(data[i]);
    for (int b = 0; b < 8; ++b) out[static_cast<size_t>(i) * 8 + static_cast<size_t>(b)] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  return Bytes(std::move(out));
}

void FromBytes(const json& j, double* data, Eigen::Index n, const std::string& what) {
  if (!j.is_binary()) throw ConfigError("checkpoint field " + what + " is not a byte string");
  const auto& bytes = j.get_binary();
  if (bytes.size() != static_cast<size_t>(n) * 8) {
    throw ShapeError("checkpoint field " + what + " has " + std::to_string(bytes.size()) +
                     " bytes, expected " + std::to_string(n * 8));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<uint64_t>(bytes[static_cast<size_t>(i) * 8 + static_cast<size_t>(b)]) << (8 * b);
    }
    data[i] = std::bit_cast<double>(bits);
  }
}

}  // namespace

json ParamStoreToJson(const ParamStore& store) {
  json params = json::array();
  for (const Param& p : store.params()) {
    json e = {{"name", p.name},
              {"rows", p.value.rows()},
              {"cols", p.value.cols()},
              {"spectral", p.spectral},
              {"value", ToBytes(p.value.data(), p.value.size())},
              {"m", ToBytes(p.m.data(), p.m.size())},
              {"v", ToBytes(p.v.data(), p.v.size())}};
    if (p.spectral) {
      e["sn_u"] = ToBytes(p.sn_u.data(), p.sn_u.size());
      e["sn_v"] = ToBytes(p.sn_v.data(), p.sn_v.size());
      e["sn_len"] = {p.sn_u.size(), p.sn_v.size()};
    }
    params.push_back(std::move(e));
  }
  return {{"step", store.step()}, {"params", params}};
}

void ParamStoreFromJson(const json& j, ParamStore& store) {
  const json& params = j.at("params");
  if (params.size() != store.size()) {
    throw ShapeError("checkpoint holds " + std::to_string(params.size()) + " parameters, model has " +
                     std::to_string(store.size()));
  }
  for (size_t i = 0; i < store.size(); ++i) {
    Param& p = store[i];
    const json& e = params[i];
    if (e.at("name").get<std::string>() != p.name) {
      throw ShapeError("checkpoint parameter " + std::to_string(i) + " is " +
                       e.at("name").get<std::string>() + ", model expects " + p.name);
    }
    if (e.at("rows").get<Eigen::Index>() != p.value.rows() ||
        e.at("cols").get<Eigen::Index>() != p.value.cols()) {
      throw ShapeError("checkpoint shape mismatch for " + p.name);
    }
    FromBytes(e.at("value"), p.value.data(), p.value.size(), p.name + ".value");
    FromBytes(e.at("m"), p.m.data(), p.m.size(), p.name + ".m");
    FromBytes(e.at("v"), p.v.data(), p.v.size(), p.name + ".v");
    if (p.spectral) {
      const auto len = e.at("sn_len");
      p.sn_u.resize(len.at(0).get<Eigen::Index>());
      p.sn_v.resize(len.at(1).get<Eigen::Index>());
      FromBytes(e.at("sn_u"), p.sn_u.data(), p.sn_u.size(), p.name + ".sn_u");
      FromBytes(e.at("sn_v"), p.sn_v.data(), p.sn_v.size(), p.name + ".sn_v");
    }
    p.grad.setZero();
  }
  store.set_step(j.at("step").get<int64_t>());
  store.Touch();
}

std::string EncodeCheckpoint(const Checkpoint& c) {
  json j = {{"format_version", kCheckpointFormatVersion},
            {"stage", c.stage},
            {"config_hash", HexU64(c.config_hash)},
            {"seed", c.seed},
            {"epochs_completed", c.epochs_completed},
            {"serializer", c.serializer.ToJson()},
            {"policy",
             {{"config", c.policy.config().ToJson()},
              {"spec", c.policy.spec().ToJson()},
              {"theta", ParamStoreToJson(c.policy.theta())},
              {"phi", ParamStoreToJson(c.policy.phi())},
              {"reference", ParamStoreToJson(c.policy.reference())}}}};
  if (c.ensemble) {
    json levels = json::array();
    for (size_t k = 0; k < kNumLevels; ++k) levels.push_back(ParamStoreToJson(c.ensemble->store(k)));
    j["ensemble"] = {{"config", c.ensemble->config().ToJson()}, {"levels", levels}};
  } else {
    j["ensemble"] = nullptr;
  }
  const std::vector<std::uint8_t> cbor = json::to_cbor(j);
  return std::string(cbor.begin(), cbor.end());
}

Checkpoint DecodeCheckpoint(std::string_view bytes) {
  json j;
  try {
    j = json::from_cbor(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint is not valid CBOR: ") + e.what());
  }
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw ConfigError("unsupported checkpoint format version " + std::to_string(version));
    }
    Serializer serializer = Serializer::FromJson(j.at("serializer"));
    const json& pj = j.at("policy");
    const PolicyConfig pc = PolicyConfig::FromJson(pj.at("config"));
    const int vocab = static_cast<int>(serializer.vocab().size());
    PolicyState policy(vocab, pc, 0);
    if (policy.spec().ToJson() != pj.at("spec")) {
      throw ShapeError("checkpoint policy spec does not match its vocabulary and config");
    }
    ParamStoreFromJson(pj.at("theta"), policy.theta());
    ParamStoreFromJson(pj.at("phi"), policy.phi());
    ParamStore reference = policy.theta();
    ParamStoreFromJson(pj.at("reference"), reference);
    policy.set_reference(std::move(reference));

    std::optional<DiscriminatorEnsemble> ensemble;
    if (!j.at("ensemble").is_null()) {
      const json& ej = j["ensemble"];
      ensemble.emplace(vocab, pc.hidden, static_cast<int>(serializer.max_clause_length()),
                       DiscriminatorConfig::FromJson(ej.at("config")), 0);
      for (size_t k = 0; k < kNumLevels; ++k) ParamStoreFromJson(ej.at("levels").at(k), ensemble->store(k));
    }
    return Checkpoint{j.at("stage").get<std::string>(),
                      std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16),
                      j.at("seed").get<uint64_t>(),
                      j.at("epochs_completed").get<int>(),
                      std::move(serializer),
                      std::move(policy),
                      std::move(ensemble)};
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
}

void SaveCheckpoint(const std::string& path, const Checkpoint& checkpoint) {
  AtomicWriteFile(path, EncodeCheckpoint(checkpoint));
}

Checkpoint LoadCheckpoint(const std::string& path) { return DecodeCheckpoint(ReadFile(path)); }

}  // namespace tabgen
