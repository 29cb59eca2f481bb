// diffcore/gradcheck.cc

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

#include "sdadapt/diffcore/gradcheck.h"

#include <algorithm>
#include <cmath>

#include "sdadapt/base/error.h"

namespace sdadapt {

GradCheckReport GradCheck(const std::function<DiffArray()>& fn, std::vector<DiffArray> params,
                          const GradCheckOptions& options) {
  if (!(options.eps > 0.0)) throw ParameterError("grad_check: eps must be positive");
  std::vector<bool> flags;
  for (auto& p : params) {
    if (!p.is_leaf()) throw UsageError("grad_check: parameters must be leaves");
    flags.push_back(p.requires_grad());
    p.set_requires_grad(true);
    p.zero_grad();
  }
  DiffArray loss = fn();
  loss.Backward();
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (auto& p : params) {
    if (p.has_grad()) {
      analytic.emplace_back(p.grad().begin(), p.grad().end());
    } else {
      analytic.emplace_back(p.size(), 0.0);
    }
  }

  // Finite differences need values only; skip graph recording.
  for (auto& p : params) p.set_requires_grad(false);

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto values = params[pi].mutable_data();
    const std::size_t n = values.size();
    std::size_t step = 1;
    if (options.max_entries_per_param > 0 && n > options.max_entries_per_param) {
      step = (n + options.max_entries_per_param - 1) / options.max_entries_per_param;
    }
    for (std::size_t i = 0; i < n; i += step) {
      const double orig = values[i];
      values[i] = orig + options.eps;
      const double up = fn().item();
      values[i] = orig - options.eps;
      const double down = fn().item();
      values[i] = orig;
      const double numeric = (up - down) / (2.0 * options.eps);
      const double a = analytic[pi][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
      const double err = std::abs(a - numeric) / denom;
      ++report.entries_checked;
      if (err > report.max_rel_err || report.entries_checked == 1) {
        report.max_rel_err = err;
        report.worst_param = pi;
        report.worst_entry = i;
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }
  for (std::size_t pi = 0; pi < params.size(); ++pi) params[pi].set_requires_grad(flags[pi]);
  return report;
}

}  // namespace sdadapt
