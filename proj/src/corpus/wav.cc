// corpus/wav.cc

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

#include "sdadapt/corpus/wav.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "sdadapt/base/error.h"

namespace sdadapt {

namespace {

void Put(std::string& out, std::uint32_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t Get(const std::string& in, std::size_t pos, int bytes) {
  std::uint32_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  return v;
}

std::int16_t ToPcm(double x) {
  const double s = std::nearbyint(x * 32768.0);
  return static_cast<std::int16_t>(std::clamp(s, -32768.0, 32767.0));
}

}  // namespace

double QuantizePcm16(double x) { return static_cast<double>(ToPcm(x)) / 32768.0; }

void WriteWav(const std::string& path, const std::vector<double>& samples, int sample_rate) {
  if (sample_rate <= 0) throw UsageError("wav: sample rate must be positive");
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  std::string out = "RIFF";
  Put(out, 36 + data_bytes, 4);
  out += "WAVEfmt ";
  Put(out, 16, 4);
  Put(out, 1, 2);  // PCM
  Put(out, 1, 2);  // mono
  Put(out, static_cast<std::uint32_t>(sample_rate), 4);
  Put(out, static_cast<std::uint32_t>(sample_rate) * 2, 4);
  Put(out, 2, 2);
  Put(out, 16, 2);
  out += "data";
  Put(out, data_bytes, 4);
  for (double x : samples) Put(out, static_cast<std::uint16_t>(ToPcm(x)), 2);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("failed writing " + path);
}

WavData ReadWav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  const std::string in((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (in.size() < 12 || in.compare(0, 4, "RIFF") != 0 || in.compare(8, 4, "WAVE") != 0) {
    throw ParseError(path + ": not a RIFF/WAVE file");
  }
  WavData wav;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= in.size()) {
    const std::string id = in.substr(pos, 4);
    const std::uint32_t size = Get(in, pos + 4, 4);
    const std::size_t body = pos + 8;
    if (body + size > in.size()) throw ParseError(path + ": chunk '" + id + "' is truncated");
    if (id == "fmt ") {
      if (size < 16) throw ParseError(path + ": short fmt chunk");
      const auto format = Get(in, body, 2);
      const auto channels = Get(in, body + 2, 2);
      const auto bits = Get(in, body + 14, 2);
      if (format != 1 || channels != 1 || bits != 16) {
        throw ParseError(path + ": only 16-bit mono PCM is supported");
      }
      wav.sample_rate = static_cast<int>(Get(in, body + 4, 4));
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw ParseError(path + ": data chunk precedes fmt chunk");
      wav.samples.resize(size / 2);
      for (std::size_t i = 0; i < wav.samples.size(); ++i) {
        const auto raw = static_cast<std::int16_t>(static_cast<std::uint16_t>(Get(in, body + 2 * i, 2)));
        wav.samples[i] = static_cast<double>(raw) / 32768.0;
      }
      return wav;
    }
    pos = body + size + (size & 1);
  }
  throw ParseError(path + ": no data chunk");
}

}  // namespace sdadapt
