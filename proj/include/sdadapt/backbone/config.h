// backbone/config.h

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

#ifndef SDADAPT_BACKBONE_CONFIG_H_
#define SDADAPT_BACKBONE_CONFIG_H_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace sdadapt {

struct ConvLayerSpec {
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  bool operator==(const ConvLayerSpec&) const = default;
};

/// Shape of the miniature acoustic model: strided CNN encoder over the raw
/// waveform, n_blocks pre-norm transformer blocks, linear CTC head.
struct BackboneConfig {
  std::vector<ConvLayerSpec> conv_layers = {{32, 64, 16}, {32, 8, 8}, {32, 2, 2}};
  std::size_t d_model = 32;
  std::size_t n_blocks = 2;
  std::size_t n_heads = 4;
  std::size_t d_ff = 64;
  std::size_t vocab_size = 41;  // includes the blank at index 0
  double dropout_p = 0.1;
  double ln_eps = 1e-5;
  std::uint64_t init_seed = 1;

  void Validate() const;
  // Channels produced by the CNN encoder.
  std::size_t EncoderWidth() const;
  // Frames produced for a waveform of `samples` samples (0 if too short).
  std::size_t OutputFrames(std::size_t samples) const;
  std::size_t MinSamples() const;

  bool operator==(const BackboneConfig&) const = default;
};

void to_json(nlohmann::json& j, const BackboneConfig& c);
void from_json(const nlohmann::json& j, BackboneConfig& c);

enum class InsertionKind { kAfterCnnEncoder, kInTransformerBlock };

/// Where an adapter acts. Positions are also written in the compact table
/// notation used by the CLI: 0 is after the CNN encoder, n >= 1 is the
/// output of the n-th transformer block (block_index n − 1).
struct InsertionPoint {
  InsertionKind kind = InsertionKind::kAfterCnnEncoder;
  std::optional<std::size_t> block_index;

  static InsertionPoint AfterCnnEncoder() { return {}; }
  static InsertionPoint InBlock(std::size_t index) {
    return {InsertionKind::kInTransformerBlock, index};
  }
  static InsertionPoint FromTableIndex(int position);
  int TableIndex() const;
  std::string ToString() const;

  // Throws ConfigError when the point does not exist in `config`.
  void Validate(const BackboneConfig& config) const;

  auto operator<=>(const InsertionPoint&) const = default;
};

/// Hidden width m of the activations at an insertion point.
std::size_t WidthAt(const BackboneConfig& config, const InsertionPoint& point);

}  // namespace sdadapt

#endif  // SDADAPT_BACKBONE_CONFIG_H_
