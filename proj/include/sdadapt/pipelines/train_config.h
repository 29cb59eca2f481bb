// pipelines/train_config.h

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

#ifndef SDADAPT_PIPELINES_TRAIN_CONFIG_H_
#define SDADAPT_PIPELINES_TRAIN_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace sdadapt {

enum class OptimizerKind { kSgd, kAdam };
std::string ToString(OptimizerKind k);
OptimizerKind ParseOptimizerKind(const std::string& text);

/// One optimisation phase. `freeze` holds glob patterns over parameter names
/// ("block.*", "adapter.defi:*"); matching parameters are not updated.
struct PhaseConfig {
  std::size_t epochs = 1;
  double step_size = 1e-3;
  std::vector<std::string> freeze;
  bool operator==(const PhaseConfig&) const = default;
};

struct TrainConfig {
  PhaseConfig baseline{12, 2e-3, {}};
  PhaseConfig aft_stage1{3, 1e-3, {}};
  PhaseConfig aft_stage2{3, 1e-3, {}};
  PhaseConfig tta_stage1{3, 3e-4, {}};
  PhaseConfig tta_stage2{3, 3e-4, {}};
  std::size_t batch_size = 8;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip_norm = 5.0;
  std::uint64_t rng_seed = 1;
  // Reuse AFT speaker adapters for test speakers that were seen in
  // training; unseen speakers always start from identity.
  bool warm_start_seen_speakers = true;
  // Fraction of the training utterances held out for per-epoch token error
  // logging during baseline fine-tuning (0 disables).
  double heldout_fraction = 0.0;

  void Validate() const;
  bool operator==(const TrainConfig&) const = default;
};

void to_json(nlohmann::json& j, const PhaseConfig& c);
void from_json(const nlohmann::json& j, PhaseConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Shell-style glob match supporting '*' and '?'.
bool GlobMatch(std::string_view pattern, std::string_view text);

}  // namespace sdadapt

#endif  // SDADAPT_PIPELINES_TRAIN_CONFIG_H_
