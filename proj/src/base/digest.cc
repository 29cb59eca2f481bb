// base/digest.cc

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

#include "sdadapt/base/digest.h"

#include <bit>
#include <cstdio>
#include <cstring>

#include "sdadapt/base/random.h"

namespace sdadapt {

namespace {
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
}  // namespace

void Digest::Update(std::span<const std::uint8_t> bytes) {
  for (std::uint8_t b : bytes) {
    state_ ^= b;
    state_ *= kFnvPrime;
  }
}

void Digest::Update(std::string_view text) {
  Update(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void Digest::Update(std::span<const double> values) {
  // Hash the little-endian byte image so digests agree with checkpoints.
  static_assert(std::endian::native == std::endian::little,
                "big-endian hosts are not supported");
  Update(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(values.data()),
      values.size() * sizeof(double)));
}

void Digest::Update(std::uint64_t value) {
  std::uint8_t bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<std::uint8_t>(value >> (8 * i));
  Update(std::span<const std::uint8_t>(bytes, 8));
}

std::string Digest::Hex() const { return ToHex(state_); }

std::string ToHex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::uint64_t DeriveSeed(std::uint64_t master, std::string_view label) {
  Digest d;
  d.Update(master);
  d.Update(label);
  // splitmix64 finalizer to spread the FNV state.
  std::uint64_t z = d.value() + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace sdadapt
