// diffcore/gradcheck.h

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

#ifndef SDADAPT_DIFFCORE_GRADCHECK_H_
#define SDADAPT_DIFFCORE_GRADCHECK_H_

#include <functional>
#include <string>
#include <vector>

#include "sdadapt/diffcore/array.h"

namespace sdadapt {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t worst_param = 0;   // index into the checked parameter list
  std::size_t worst_entry = 0;
  double analytic = 0.0;         // values at the worst entry
  double numeric = 0.0;
  std::size_t entries_checked = 0;
};

struct GradCheckOptions {
  double eps = 1e-5;
  // Relative error is |a − n| / max(|a|, |n|, floor). The floor keeps
  // entries whose true gradient is ~0 from amplifying round-off.
  double floor = 1e-6;
  // Check at most this many entries per parameter (evenly strided); 0 = all.
  std::size_t max_entries_per_param = 0;
};

/// Compares the analytic gradient of a scalar function against central
/// differences. `fn` must rebuild the graph from the current parameter
/// values on every call. Parameter values are restored on return.
GradCheckReport GradCheck(const std::function<DiffArray()>& fn, std::vector<DiffArray> params,
                          const GradCheckOptions& options = {});

}  // namespace sdadapt

#endif  // SDADAPT_DIFFCORE_GRADCHECK_H_
