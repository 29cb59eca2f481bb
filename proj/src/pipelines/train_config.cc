// pipelines/train_config.cc

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

#include "sdadapt/pipelines/train_config.h"

#include "sdadapt/base/error.h"

namespace sdadapt {

std::string ToString(OptimizerKind k) { return k == OptimizerKind::kSgd ? "sgd" : "adam"; }

OptimizerKind ParseOptimizerKind(const std::string& text) {
  if (text == "sgd") return OptimizerKind::kSgd;
  if (text == "adam") return OptimizerKind::kAdam;
  throw ParseError("optimizer must be sgd or adam (got '" + text + "')");
}

void TrainConfig::Validate() const {
  for (const auto* p : {&baseline, &aft_stage1, &aft_stage2, &tta_stage1, &tta_stage2}) {
    if (!(p->step_size > 0.0)) throw ConfigError("train: step_size must be positive");
  }
  if (baseline.epochs == 0) throw ConfigError("train: baseline needs at least one epoch");
  if (batch_size == 0) throw ConfigError("train: batch_size must be positive");
  if (!(grad_clip_norm > 0.0)) throw ConfigError("train: grad_clip_norm must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && adam_eps > 0.0)) {
    throw ConfigError("train: invalid moment-estimation constants");
  }
  if (!(heldout_fraction >= 0.0 && heldout_fraction < 0.5)) {
    throw ConfigError("train: heldout_fraction must lie in [0, 0.5)");
  }
}

void to_json(nlohmann::json& j, const PhaseConfig& c) {
  j = {{"epochs", c.epochs}, {"step_size", c.step_size}, {"freeze", c.freeze}};
}

void from_json(const nlohmann::json& j, PhaseConfig& c) {
  c.epochs = j.value("epochs", c.epochs);
  c.step_size = j.value("step_size", c.step_size);
  c.freeze = j.value("freeze", c.freeze);
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"baseline", c.baseline},
       {"aft_stage1", c.aft_stage1},
       {"aft_stage2", c.aft_stage2},
       {"tta_stage1", c.tta_stage1},
       {"tta_stage2", c.tta_stage2},
       {"batch_size", c.batch_size},
       {"optimizer", ToString(c.optimizer)},
       {"beta1", c.beta1},
       {"beta2", c.beta2},
       {"adam_eps", c.adam_eps},
       {"grad_clip_norm", c.grad_clip_norm},
       {"rng_seed", c.rng_seed},
       {"warm_start_seen_speakers", c.warm_start_seen_speakers},
       {"heldout_fraction", c.heldout_fraction}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  TrainConfig d;
  for (auto [name, phase] : {std::pair{"baseline", &d.baseline}, std::pair{"aft_stage1", &d.aft_stage1},
                             std::pair{"aft_stage2", &d.aft_stage2}, std::pair{"tta_stage1", &d.tta_stage1},
                             std::pair{"tta_stage2", &d.tta_stage2}}) {
    if (j.contains(name)) from_json(j.at(name), *phase);
  }
  d.batch_size = j.value("batch_size", d.batch_size);
  if (j.contains("optimizer")) d.optimizer = ParseOptimizerKind(j.at("optimizer").get<std::string>());
  d.beta1 = j.value("beta1", d.beta1);
  d.beta2 = j.value("beta2", d.beta2);
  d.adam_eps = j.value("adam_eps", d.adam_eps);
  d.grad_clip_norm = j.value("grad_clip_norm", d.grad_clip_norm);
  d.rng_seed = j.value("rng_seed", d.rng_seed);
  d.warm_start_seen_speakers = j.value("warm_start_seen_speakers", d.warm_start_seen_speakers);
  d.heldout_fraction = j.value("heldout_fraction", d.heldout_fraction);
  c = std::move(d);
}

bool GlobMatch(std::string_view pattern, std::string_view text) {
  std::size_t p = 0, t = 0, star = std::string_view::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == text[t])) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

}  // namespace sdadapt
