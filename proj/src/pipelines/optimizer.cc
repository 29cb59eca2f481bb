// pipelines/optimizer.cc

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

#include "sdadapt/pipelines/optimizer.h"

#include <cmath>

#include "sdadapt/base/error.h"

namespace sdadapt {

Optimizer::Optimizer(const TrainConfig& config, double step_size)
    : kind_(config.optimizer),
      step_size_(step_size),
      beta1_(config.beta1),
      beta2_(config.beta2),
      eps_(config.adam_eps),
      clip_(config.grad_clip_norm) {
  if (!(step_size > 0.0)) throw ParameterError("optimizer: step size must be positive");
}

double Optimizer::Step(std::vector<NamedParameter>& params, double grad_scale) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.value.has_grad()) continue;
    for (double g : p.value.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq) * std::abs(grad_scale);
  if (!std::isfinite(norm)) throw NumericError("optimizer: non-finite gradient norm");
  const double scale = grad_scale * (norm > clip_ ? clip_ / norm : 1.0);

  for (auto& p : params) {
    if (!p.value.has_grad()) continue;
    auto w = p.value.mutable_data();
    auto g = p.value.grad();
    if (kind_ == OptimizerKind::kSgd) {
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= step_size_ * scale * g[i];
    } else {
      Moments& st = state_[p.name];
      if (st.m.size() != w.size()) {
        st.m.assign(w.size(), 0.0);
        st.v.assign(w.size(), 0.0);
        st.t = 0;
      }
      ++st.t;
      const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(st.t));
      const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(st.t));
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double gi = scale * g[i];
        st.m[i] = beta1_ * st.m[i] + (1.0 - beta1_) * gi;
        st.v[i] = beta2_ * st.v[i] + (1.0 - beta2_) * gi * gi;
        w[i] -= step_size_ * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + eps_);
      }
    }
    p.value.clear_grad();
  }
  return norm;
}

}  // namespace sdadapt
