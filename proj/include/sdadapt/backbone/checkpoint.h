// backbone/checkpoint.h

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

#ifndef SDADAPT_BACKBONE_CHECKPOINT_H_
#define SDADAPT_BACKBONE_CHECKPOINT_H_

#include <cstdint>
#include <string>

#include "json.hpp"
#include "sdadapt/adapters/adapters.h"
#include "sdadapt/backbone/model.h"

namespace sdadapt {

/// Checkpoint container layout (all integers little-endian):
///
///   8 bytes   magic "SDADCKPT"
///   u32       format version (kCheckpointVersion)
///   u64       header length H
///   H bytes   JSON header: config, parameter names/shapes/offsets, adapter
///             bank entries, free-form "extra" object, payload size and
///             FNV-1a checksum
///   ...       float64 payload
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  BackboneModel model;
  AdapterBank bank;
  nlohmann::json extra = nlohmann::json::object();
};

void SaveCheckpoint(const std::string& path, const BackboneModel& model, const AdapterBank& bank,
                    const nlohmann::json& extra = nlohmann::json::object());

/// Throws IoError on unreadable files or version mismatch, CorruptFileError
/// on bad magic, truncation or checksum failure.
Checkpoint LoadCheckpoint(const std::string& path);

}  // namespace sdadapt

#endif  // SDADAPT_BACKBONE_CHECKPOINT_H_
