// backbone/checkpoint.cc

// Copyright 2026  The sdadapt Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sdadapt/backbone/checkpoint.h"

#include <cstring>
#include <fstream>
#include <iterator>

#include "sdadapt/base/digest.h"
#include "sdadapt/base/error.h"

namespace sdadapt {

namespace {

constexpr char kMagic[8] = {'S', 'D', 'A', 'D', 'C', 'K', 'P', 'T'};

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void PutU64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t GetLE(const std::string& in, std::size_t pos, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  return v;
}

nlohmann::json AppendArray(std::string& payload, const std::string& name, const DiffArray& a) {
  const std::size_t offset = payload.size();
  auto d = a.data();
  payload.append(reinterpret_cast<const char*>(d.data()), d.size() * sizeof(double));
  return {{"name", name}, {"shape", a.shape()}, {"offset", offset}};
}

std::vector<double> ReadArray(const std::string& payload, const nlohmann::json& meta, Shape& shape) {
  shape = meta.at("shape").get<Shape>();
  const std::size_t offset = meta.at("offset").get<std::size_t>();
  const std::size_t n = ShapeSize(shape);
  if (offset + n * sizeof(double) > payload.size()) {
    throw CorruptFileError("checkpoint: array " + meta.at("name").get<std::string>() +
                           " extends past the payload");
  }
  std::vector<double> v(n);
  std::memcpy(v.data(), payload.data() + offset, n * sizeof(double));
  return v;
}

}  // namespace

void SaveCheckpoint(const std::string& path, const BackboneModel& model, const AdapterBank& bank,
                    const nlohmann::json& extra) {
  std::string payload;
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : model.parameters()) params.push_back(AppendArray(payload, p.name, p.value));
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [key, entry] : bank.entries()) {
    nlohmann::json e = {{"key", key.ToString()},
                        {"arch", ToString(entry.arch())},
                        {"position", entry.point.TableIndex()},
                        {"dropout_p", entry.dropout_p}};
    nlohmann::json arrays = nlohmann::json::array();
    for (const auto& [name, a] : entry.Parameters()) arrays.push_back(AppendArray(payload, name, a));
    e["params"] = arrays;
    entries.push_back(e);
  }
  Digest checksum;
  checksum.Update(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(payload.data()),
                                                payload.size()));
  nlohmann::json header = {{"config", model.config()},
                           {"params", params},
                           {"bank", entries},
                           {"extra", extra},
                           {"payload_bytes", payload.size()},
                           {"payload_fnv1a", checksum.Hex()}};
  const std::string header_text = header.dump();

  std::string blob(kMagic, sizeof(kMagic));
  PutU32(blob, kCheckpointVersion);
  PutU64(blob, header_text.size());
  blob += header_text;
  blob += payload;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  constexpr std::size_t kPreamble = sizeof(kMagic) + 4 + 8;
  if (blob.size() < kPreamble || std::memcmp(blob.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CorruptFileError("checkpoint: bad magic or truncated preamble in " + path);
  }
  const auto version = static_cast<std::uint32_t>(GetLE(blob, 8, 4));
  if (version != kCheckpointVersion) {
    throw IoError("checkpoint: format version " + std::to_string(version) + " in " + path +
                  ", expected " + std::to_string(kCheckpointVersion));
  }
  const std::uint64_t header_len = GetLE(blob, 12, 8);
  if (header_len > blob.size() - kPreamble) throw CorruptFileError("checkpoint: truncated header in " + path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(blob.substr(kPreamble, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptFileError(std::string("checkpoint: unreadable header: ") + e.what());
  }
  const std::string payload = blob.substr(kPreamble + header_len);
  const std::size_t expected = header.at("payload_bytes").get<std::size_t>();
  if (payload.size() != expected) {
    throw CorruptFileError("checkpoint: payload is " + std::to_string(payload.size()) +
                           " bytes, header declares " + std::to_string(expected) + " (truncated?)");
  }
  Digest checksum;
  checksum.Update(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(payload.data()),
                                                payload.size()));
  if (checksum.Hex() != header.at("payload_fnv1a").get<std::string>()) {
    throw CorruptFileError("checkpoint: payload checksum mismatch in " + path);
  }

  Checkpoint ck{BackboneModel(header.at("config").get<BackboneConfig>()), {}, header.value("extra", nlohmann::json::object())};
  for (const auto& meta : header.at("params")) {
    Shape shape;
    auto values = ReadArray(payload, meta, shape);
    ck.model.SetParameter(meta.at("name").get<std::string>(), shape, std::move(values));
  }
  for (const auto& e : header.at("bank")) {
    AdapterEntry entry;
    entry.point = InsertionPoint::FromTableIndex(e.at("position").get<int>());
    entry.dropout_p = e.at("dropout_p").get<double>();
    std::map<std::string, DiffArray> arrays;
    for (const auto& meta : e.at("params")) {
      Shape shape;
      auto values = ReadArray(payload, meta, shape);
      arrays[meta.at("name").get<std::string>()] = DiffArray::FromData(shape, std::move(values));
    }
    const AdapterArch arch = ParseAdapterArch(e.at("arch").get<std::string>());
    auto need = [&](const char* name) {
      auto it = arrays.find(name);
      if (it == arrays.end()) throw CorruptFileError(std::string("checkpoint: adapter lacks ") + name);
      return it->second;
    };
    switch (arch) {
      case AdapterArch::kLhuc: entry.params = LhucParams{need("r")}; break;
      case AdapterArch::kHub: entry.params = HubParams{need("r")}; break;
      default: entry.params = RabParams{need("p_down"), need("p_up"), need("ln_gamma"), need("ln_beta")};
    }
    ck.bank.Insert(ConditionKey::Parse(e.at("key").get<std::string>()), std::move(entry));
  }
  return ck;
}

}  // namespace sdadapt
