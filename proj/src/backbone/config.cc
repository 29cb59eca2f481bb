// backbone/config.cc

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

#include "sdadapt/backbone/config.h"

#include "sdadapt/base/error.h"
#include "sdadapt/diffcore/ops.h"

namespace sdadapt {

void BackboneConfig::Validate() const {
  if (conv_layers.empty()) throw ConfigError("backbone: at least one conv layer is required");
  for (const auto& l : conv_layers) {
    if (l.out_channels == 0 || l.kernel == 0 || l.stride == 0) {
      throw ConfigError("backbone: conv layer fields must be positive");
    }
  }
  if (d_model == 0 || n_blocks == 0 || n_heads == 0 || d_ff == 0) {
    throw ConfigError("backbone: d_model, n_blocks, n_heads and d_ff must be positive");
  }
  if (d_model % n_heads != 0) throw ConfigError("backbone: n_heads must divide d_model");
  if (vocab_size < 2) throw ConfigError("backbone: vocab_size must be >= 2");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("backbone: dropout_p outside [0,1)");
  if (!(ln_eps > 0.0)) throw ConfigError("backbone: ln_eps must be positive");
}

std::size_t BackboneConfig::EncoderWidth() const { return conv_layers.back().out_channels; }

std::size_t BackboneConfig::OutputFrames(std::size_t samples) const {
  std::size_t len = samples;
  for (const auto& l : conv_layers) {
    len = Conv1dOutputLength(len, l.kernel, l.stride);
    if (len == 0) return 0;
  }
  return len;
}

std::size_t BackboneConfig::MinSamples() const {
  // Invert the length formula for a single output frame.
  std::size_t len = 1;
  for (auto it = conv_layers.rbegin(); it != conv_layers.rend(); ++it) {
    len = (len - 1) * it->stride + it->kernel;
  }
  return len;
}

void to_json(nlohmann::json& j, const BackboneConfig& c) {
  nlohmann::json convs = nlohmann::json::array();
  for (const auto& l : c.conv_layers) {
    convs.push_back({{"out_channels", l.out_channels}, {"kernel", l.kernel}, {"stride", l.stride}});
  }
  j = {{"conv_layers", convs},   {"d_model", c.d_model},   {"n_blocks", c.n_blocks},
       {"n_heads", c.n_heads},   {"d_ff", c.d_ff},         {"vocab_size", c.vocab_size},
       {"dropout_p", c.dropout_p}, {"ln_eps", c.ln_eps}, {"init_seed", c.init_seed}};
}

void from_json(const nlohmann::json& j, BackboneConfig& c) {
  BackboneConfig d;
  if (j.contains("conv_layers")) {
    d.conv_layers.clear();
    for (const auto& l : j.at("conv_layers")) {
      d.conv_layers.push_back({l.at("out_channels").get<std::size_t>(),
                               l.at("kernel").get<std::size_t>(),
                               l.at("stride").get<std::size_t>()});
    }
  }
  d.d_model = j.value("d_model", d.d_model);
  d.n_blocks = j.value("n_blocks", d.n_blocks);
  d.n_heads = j.value("n_heads", d.n_heads);
  d.d_ff = j.value("d_ff", d.d_ff);
  d.vocab_size = j.value("vocab_size", d.vocab_size);
  d.dropout_p = j.value("dropout_p", d.dropout_p);
  d.ln_eps = j.value("ln_eps", d.ln_eps);
  d.init_seed = j.value("init_seed", d.init_seed);
  c = std::move(d);
}

InsertionPoint InsertionPoint::FromTableIndex(int position) {
  if (position < 0) throw ConfigError("insertion position must be >= 0");
  if (position == 0) return AfterCnnEncoder();
  return InBlock(static_cast<std::size_t>(position - 1));
}

int InsertionPoint::TableIndex() const {
  return kind == InsertionKind::kAfterCnnEncoder ? 0 : static_cast<int>(*block_index) + 1;
}

std::string InsertionPoint::ToString() const {
  return kind == InsertionKind::kAfterCnnEncoder ? "after_cnn"
                                                 : "block." + std::to_string(*block_index);
}

void InsertionPoint::Validate(const BackboneConfig& config) const {
  const bool has_index = block_index.has_value();
  if ((kind == InsertionKind::kInTransformerBlock) != has_index) {
    throw ConfigError("insertion point: block_index present iff kind is InTransformerBlock");
  }
  if (has_index && *block_index >= config.n_blocks) {
    throw ConfigError("insertion point: block " + std::to_string(*block_index) +
                      " does not exist in a " + std::to_string(config.n_blocks) +
                      "-block model");
  }
}

std::size_t WidthAt(const BackboneConfig& config, const InsertionPoint& point) {
  point.Validate(config);
  return point.kind == InsertionKind::kAfterCnnEncoder ? config.EncoderWidth() : config.d_model;
}

}  // namespace sdadapt
