// backbone/model.h

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

#ifndef SDADAPT_BACKBONE_MODEL_H_
#define SDADAPT_BACKBONE_MODEL_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdadapt/adapters/adapters.h"
#include "sdadapt/backbone/config.h"
#include "sdadapt/base/random.h"
#include "sdadapt/diffcore/array.h"

namespace sdadapt {

struct NamedParameter {
  std::string name;
  DiffArray value;
};

/// Miniature self-supervised-style acoustic model with a flat, ordered
/// parameter registry. Names are hierarchical ("conv.0.kernel",
/// "block.1.ffn.w1", "ctc_head.weight"); registration order is fixed by the
/// config, so iteration order is deterministic.
class BackboneModel {
 public:
  explicit BackboneModel(BackboneConfig config);

  const BackboneConfig& config() const { return config_; }
  const std::vector<NamedParameter>& parameters() const { return params_; }
  const DiffArray& param(std::string_view name) const;
  bool HasParam(std::string_view name) const;
  std::size_t ParameterCount() const;

  /// Content digest over names, shapes and parameter bytes.
  std::uint64_t Digest() const;
  /// Deep copy with independent storage.
  BackboneModel Clone() const;

  /// Overwrites parameter values (used by checkpoint loading). Throws on
  /// unknown names or shape mismatch.
  void SetParameter(std::string_view name, const Shape& shape, std::vector<double> values);

 private:
  DiffArray& Register(std::string name, DiffArray value);

  BackboneConfig config_;
  std::vector<NamedParameter> params_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

enum class ParamFilter { kBackboneOnly, kAll };

/// Backbone parameters, followed (for kAll) by the bank's adapter
/// parameters. Two calls with the same inputs return the same ordering.
std::vector<NamedParameter> NamedParameters(const BackboneModel& model, const AdapterBank* bank,
                                            ParamFilter filter);

/// Frame-level CTC log-probabilities [T×vocab] for one waveform. Adapters in
/// `stack` run in stack order at their insertion points: AfterCnnEncoder on
/// the CNN encoder output, InTransformerBlock(i) on the output of block i
/// after its second residual add. `rng` drives dropout and may be null when
/// training is false.
DiffArray Encode(const BackboneModel& model, std::span<const double> waveform,
                 const AdapterStack& stack, bool training, Rng* rng);

/// The two halves of Encode. EncodeCnn standardizes the waveform and runs
/// the convolutional encoder; it has no dropout, so with a frozen backbone
/// its output can be computed once and reused across training steps.
DiffArray EncodeCnn(const BackboneModel& model, std::span<const double> waveform);
DiffArray EncodeFromCnn(const BackboneModel& model, const DiffArray& cnn_out, const AdapterStack& stack,
                        bool training, Rng* rng);

/// Sinusoidal absolute position table [frames×width].
std::vector<double> SinusoidalPositions(std::size_t frames, std::size_t width);

}  // namespace sdadapt

#endif  // SDADAPT_BACKBONE_MODEL_H_
