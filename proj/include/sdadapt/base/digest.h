// base/digest.h

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

#ifndef SDADAPT_BASE_DIGEST_H_
#define SDADAPT_BASE_DIGEST_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace sdadapt {

/// Incremental 64-bit FNV-1a hash. Used for parameter content digests and
/// checkpoint payload checksums; not cryptographic.
class Digest {
 public:
  void Update(std::span<const std::uint8_t> bytes);
  void Update(std::string_view text);
  void Update(std::span<const double> values);
  void Update(std::uint64_t value);

  std::uint64_t value() const { return state_; }
  std::string Hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string ToHex(std::uint64_t value);

}  // namespace sdadapt

#endif  // SDADAPT_BASE_DIGEST_H_
