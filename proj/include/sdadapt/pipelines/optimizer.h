// pipelines/optimizer.h

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

#ifndef SDADAPT_PIPELINES_OPTIMIZER_H_
#define SDADAPT_PIPELINES_OPTIMIZER_H_

#include <map>
#include <string>
#include <vector>

#include "sdadapt/backbone/model.h"
#include "sdadapt/pipelines/train_config.h"

namespace sdadapt {

/// SGD or Adam with global gradient-norm clipping. Moments are keyed by
/// parameter name, so the same optimiser can follow a parameter whose
/// handle is replaced between phases.
class Optimizer {
 public:
  Optimizer(const TrainConfig& config, double step_size);

  /// Updates every parameter that received a gradient, after scaling the
  /// gradients by `grad_scale` and clipping their joint norm. Gradients are
  /// released afterwards. Returns the pre-clip norm.
  double Step(std::vector<NamedParameter>& params, double grad_scale);

 private:
  struct Moments {
    std::vector<double> m, v;
    std::size_t t = 0;
  };
  OptimizerKind kind_;
  double step_size_, beta1_, beta2_, eps_, clip_;
  std::map<std::string, Moments> state_;
};

}  // namespace sdadapt

#endif  // SDADAPT_PIPELINES_OPTIMIZER_H_
