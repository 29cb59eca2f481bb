// corpus/wav.h

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

#ifndef SDADAPT_CORPUS_WAV_H_
#define SDADAPT_CORPUS_WAV_H_

#include <string>
#include <vector>

namespace sdadapt {

struct WavData {
  int sample_rate = 0;
  // Samples scaled to [-1, 1) (int16 / 32768).
  std::vector<double> samples;
};

/// Writes 16-bit mono PCM. Samples are rounded to the nearest int16 step and
/// clipped; values already on the int16 grid round-trip exactly.
void WriteWav(const std::string& path, const std::vector<double>& samples, int sample_rate);

/// Reads a 16-bit mono PCM file. Throws IoError when the file cannot be
/// opened and ParseError on any other format.
WavData ReadWav(const std::string& path);

/// Rounds a sample to the value WriteWav + ReadWav would return.
double QuantizePcm16(double x);

}  // namespace sdadapt

#endif  // SDADAPT_CORPUS_WAV_H_
