// tests/unit/test_util.h

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

#ifndef SDADAPT_TESTS_UNIT_TEST_UTIL_H_
#define SDADAPT_TESTS_UNIT_TEST_UTIL_H_

#include <cmath>
#include <vector>

#include "sdadapt/backbone/config.h"
#include "sdadapt/base/random.h"

namespace sdadapt::testing {

// Small model used across unit tests: 2 blocks, d_model 16.
inline BackboneConfig TinyConfig() {
  BackboneConfig c;
  c.conv_layers = {{8, 16, 8}, {8, 4, 2}};
  c.d_model = 16;
  c.n_blocks = 2;
  c.n_heads = 2;
  c.d_ff = 24;
  c.vocab_size = 5;
  c.dropout_p = 0.1;
  c.init_seed = 3;
  return c;
}

inline std::vector<double> RandomWave(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 * std::sin(0.05 * static_cast<double>(i)) + 0.1 * rng.Normal();
  }
  return w;
}

}  // namespace sdadapt::testing

#endif  // SDADAPT_TESTS_UNIT_TEST_UTIL_H_
