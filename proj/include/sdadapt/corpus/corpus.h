// corpus/corpus.h

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

#ifndef SDADAPT_CORPUS_CORPUS_H_
#define SDADAPT_CORPUS_CORPUS_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdadapt/ctc/ctc.h"

namespace sdadapt {

/// Speaker-level severity, ordered from least to most severe so the enum
/// value doubles as an index into per-severity tables.
enum class Severity { kH = 0, kM = 1, kL = 2, kVL = 3 };
inline constexpr std::array<Severity, 4> kAllSeverities = {Severity::kH, Severity::kM, Severity::kL,
                                                          Severity::kVL};

std::string ToString(Severity s);
/// Accepts exactly "H", "M", "L", "VL"; anything else is a ParseError.
Severity ParseSeverity(const std::string& text);
inline std::size_t Index(Severity s) { return static_cast<std::size_t>(s); }

enum class SplitMode { kBlockOverlap, kSpeakerDisjoint };
std::string ToString(SplitMode m);
SplitMode ParseSplitMode(const std::string& text);

/// Word tokens are 1-based CTC labels; token t is spelt "w" + zero-padded t−1.
std::string WordName(int token);
int ParseWord(const std::string& word);
std::string JoinWords(const TokenSequence& tokens);
TokenSequence SplitWords(const std::string& text);

/// Degradations applied to every utterance of a speaker with a given
/// severity, in this order: time warping, spectral blur, white noise,
/// template jitter.
struct SeveritySchedule {
  double time_warp = 0.0;   // max relative change of each token's duration
  int blur_width = 1;       // moving-average length in samples (1 = none)
  double snr_db = 30.0;     // signal-to-noise ratio of the added white noise
  double jitter = 0.0;      // relative std of per-token formant jitter
  bool operator==(const SeveritySchedule&) const = default;
};

struct CorpusConfig {
  std::size_t n_train_speakers = 20;
  std::size_t n_test_speakers = 8;
  // Fractions of speakers per severity, indexed H, M, L, VL.
  std::array<double, 4> severity_distribution = {0.25, 0.25, 0.25, 0.25};
  std::size_t vocab_size = 40;
  std::size_t utterances_per_speaker = 60;
  std::size_t test_utterances_per_speaker = 30;
  SplitMode split_mode = SplitMode::kBlockOverlap;
  // Fraction of the test vocabulary that never occurs in training.
  double unseen_word_fraction = 0.4;
  // Share of the full vocabulary used by the test block.
  double test_vocab_fraction = 0.5;
  // Share of test utterances drawn from unseen words (block_overlap only).
  double unseen_utterance_fraction = 0.25;
  std::size_t min_words = 1;
  std::size_t max_words = 6;
  int sample_rate = 16000;
  double max_seconds = 1.0;
  std::array<SeveritySchedule, 4> schedules = {{
      {0.0, 1, 30.0, 0.02},
      {0.1, 3, 20.0, 0.05},
      {0.2, 5, 12.0, 0.08},
      {0.3, 8, 6.0, 0.12},
  }};
  std::uint64_t rng_seed = 1;

  // Throws ConfigError on infeasible settings.
  void Validate() const;
  bool operator==(const CorpusConfig&) const = default;
};

void to_json(nlohmann::json& j, const CorpusConfig& c);
void from_json(const nlohmann::json& j, CorpusConfig& c);

struct SpeakerProfile {
  std::string speaker_id;
  double base_freq = 120.0;              // f0 in Hz
  std::vector<double> formant_offsets;   // Hz, one per formant band
  std::vector<double> channel_gains_db;  // one per formant band
  double speaking_rate = 1.0;
  Severity severity = Severity::kH;
  std::string split;                     // "train", "test" or "both_blocks"
};

struct ManifestEntry {
  std::string utt_id;
  std::string speaker_id;
  Severity severity = Severity::kH;
  std::string split;  // "train" or "test"
  TokenSequence words;
  bool seen = true;
  std::string audio_path;
  int sample_rate = 16000;
  bool operator==(const ManifestEntry&) const = default;
};

struct Utterance {
  ManifestEntry meta;
  std::vector<double> waveform;
  // Power of the white noise mixed in (not persisted).
  double noise_power = 0.0;
};

struct Corpus {
  std::vector<SpeakerProfile> speakers;
  std::vector<Utterance> train;
  std::vector<Utterance> test;
  // Word tokens that occur in training / only in the test block.
  std::vector<int> train_words;
  std::vector<int> unseen_words;
};

/// Formant band centres shared by all speakers.
std::vector<double> FormantBands();
/// The two band indices that identify word token t.
std::pair<int, int> TokenTemplate(int token);

/// Deterministic synthetic corpus. Waveforms are already on the 16-bit PCM
/// grid, so writing and re-reading them is lossless.
Corpus GenerateCorpus(const CorpusConfig& config);

/// Writes <dir>/audio/<utt_id>.wav plus <dir>/train.jsonl and
/// <dir>/test.jsonl; audio_path fields are relative to `dir`.
void WriteCorpus(const Corpus& corpus, const std::string& dir);

void WriteManifest(const std::vector<ManifestEntry>& entries, const std::string& path);
/// Throws ParseError naming the 1-based line on malformed input.
std::vector<ManifestEntry> ReadManifest(const std::string& path);
/// Loads the audio of each entry; relative paths resolve against the
/// manifest's directory. Missing audio raises ResolutionError.
std::vector<Utterance> LoadUtterances(const std::vector<ManifestEntry>& entries,
                                      const std::string& manifest_path);

}  // namespace sdadapt

#endif  // SDADAPT_CORPUS_CORPUS_H_
