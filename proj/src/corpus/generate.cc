// corpus/generate.cc

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

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "sdadapt/base/error.h"
#include "sdadapt/base/random.h"
#include "sdadapt/corpus/corpus.h"
#include "sdadapt/corpus/wav.h"

namespace sdadapt {

namespace {

constexpr int kNumBands = 10;
constexpr double kLowBand = 300.0;
constexpr double kHighBand = 4500.0;
constexpr double kTokenSeconds = 0.09;
constexpr double kGapSeconds = 0.04;
constexpr double kEdgeSeconds = 0.05;
constexpr double kVoicingDepth = 0.5;
constexpr double kRampSeconds = 0.015;
constexpr double kSignalRms = 0.1;

std::vector<std::pair<int, int>> AllPairs() {
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < kNumBands; ++a) {
    for (int b = a + 1; b < kNumBands; ++b) pairs.emplace_back(a, b);
  }
  return pairs;
}

std::size_t MaxVocab() { return AllPairs().size(); }

std::vector<std::size_t> SplitCounts(std::size_t n, const std::array<double, 4>& fractions) {
  std::vector<std::size_t> counts(4, 0);
  double total = 0.0;
  for (double f : fractions) total += f;
  std::size_t assigned = 0;
  for (int s = 0; s < 4; ++s) {
    counts[s] = static_cast<std::size_t>(std::floor(fractions[s] / total * static_cast<double>(n)));
    assigned += counts[s];
  }
  // Hand out the remainder to the largest fractional parts, H first on ties.
  while (assigned < n) {
    int best = 0;
    double best_rem = -1.0;
    for (int s = 0; s < 4; ++s) {
      const double rem = fractions[s] / total * static_cast<double>(n) - static_cast<double>(counts[s]);
      if (rem > best_rem + 1e-12) {
        best = s;
        best_rem = rem;
      }
    }
    ++counts[best];
    ++assigned;
  }
  return counts;
}

std::string SpeakerName(char prefix, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%c%02zu", prefix, i + 1);
  return buf;
}

SpeakerProfile MakeSpeaker(const std::string& id, Severity severity, const std::string& split,
                           std::uint64_t master) {
  Rng rng(DeriveSeed(master, "speaker:" + id));
  SpeakerProfile p;
  p.speaker_id = id;
  p.severity = severity;
  p.split = split;
  p.base_freq = rng.Uniform(100.0, 200.0);
  const double vtl = rng.Uniform(0.94, 1.06);
  const auto bands = FormantBands();
  for (double f : bands) {
    p.formant_offsets.push_back((vtl - 1.0) * f);
    p.channel_gains_db.push_back(rng.Normal(0.0, 2.0));
  }
  p.speaking_rate = rng.Uniform(0.8, 1.25);
  return p;
}

// Channel gain at frequency f, linearly interpolated in log-frequency
// between band centres and held constant outside them.
double ChannelGain(const SpeakerProfile& spk, const std::vector<double>& bands, double f) {
  double db;
  if (f <= bands.front()) {
    db = spk.channel_gains_db.front();
  } else if (f >= bands.back()) {
    db = spk.channel_gains_db.back();
  } else {
    std::size_t i = 0;
    while (bands[i + 1] < f) ++i;
    const double t = std::log(f / bands[i]) / std::log(bands[i + 1] / bands[i]);
    db = (1.0 - t) * spk.channel_gains_db[i] + t * spk.channel_gains_db[i + 1];
  }
  return std::pow(10.0, db / 20.0);
}

void RenderToken(int token, const SpeakerProfile& spk, const SeveritySchedule& sched, double f0,
                 int sample_rate, std::size_t start, std::size_t length, Rng& rng,
                 std::vector<double>& out) {
  const auto bands = FormantBands();
  const auto [a, b] = TokenTemplate(token);
  std::array<double, 2> formants = {bands[a] + spk.formant_offsets[a], bands[b] + spk.formant_offsets[b]};
  for (double& f : formants) f *= 1.0 + sched.jitter * rng.Normal();

  // Each formant is a carrier at its centre frequency, amplitude-modulated
  // at the speaker's voicing rate.
  const std::size_t ramp = static_cast<std::size_t>(kRampSeconds * sample_rate);
  const std::complex<double> voicing = std::polar(1.0, 2.0 * std::numbers::pi * f0 / sample_rate);
  for (double fc : formants) {
    const double amp = ChannelGain(spk, bands, fc);
    const std::complex<double> step = std::polar(1.0, 2.0 * std::numbers::pi * fc / sample_rate);
    std::complex<double> osc = std::polar(1.0, rng.Uniform(0.0, 2.0 * std::numbers::pi));
    std::complex<double> mod(1.0, 0.0);
    for (std::size_t n = 0; n < length && start + n < out.size(); ++n) {
      double env = 1.0;
      if (n < ramp) env = 0.5 - 0.5 * std::cos(std::numbers::pi * n / ramp);
      if (length - n <= ramp) env = std::min(env, 0.5 - 0.5 * std::cos(std::numbers::pi * (length - n) / ramp));
      out[start + n] += amp * env * (1.0 + kVoicingDepth * mod.real()) * osc.imag();
      osc *= step;
      mod *= voicing;
    }
  }
}

Utterance Synthesize(const std::string& utt_id, const SpeakerProfile& spk, const std::string& split,
                     TokenSequence words, bool seen, const CorpusConfig& cfg) {
  Rng rng(DeriveSeed(cfg.rng_seed, "utt:" + utt_id));
  const SeveritySchedule& sched = cfg.schedules[Index(spk.severity)];
  const int sr = cfg.sample_rate;

  // Time warp: every token and gap is stretched by an independent factor.
  std::vector<double> token_s, gap_s;
  double total = 2.0 * kEdgeSeconds;
  for (std::size_t i = 0; i < words.size(); ++i) {
    token_s.push_back(kTokenSeconds / spk.speaking_rate * (1.0 + sched.time_warp * rng.Uniform(-1.0, 1.0)));
    gap_s.push_back(i + 1 < words.size()
                        ? kGapSeconds / spk.speaking_rate * (1.0 + sched.time_warp * rng.Uniform(-1.0, 1.0))
                        : 0.0);
    total += token_s.back() + gap_s.back();
  }
  if (total > cfg.max_seconds) {
    const double squeeze = (cfg.max_seconds - 2.0 * kEdgeSeconds) / (total - 2.0 * kEdgeSeconds);
    for (auto& t : token_s) t *= squeeze;
    for (auto& g : gap_s) g *= squeeze;
    total = cfg.max_seconds;
  }
  std::vector<double> wave(static_cast<std::size_t>(std::floor(total * sr)), 0.0);
  const double f0 = spk.base_freq * (1.0 + 0.03 * rng.Normal());
  double t = kEdgeSeconds;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto start = static_cast<std::size_t>(t * sr);
    const auto length = static_cast<std::size_t>(token_s[i] * sr);
    RenderToken(words[i], spk, sched, f0, sr, start, length, rng, wave);
    t += token_s[i] + gap_s[i];
  }

  // Spectral blur: centred moving average.
  if (sched.blur_width > 1) {
    std::vector<double> blurred(wave.size(), 0.0);
    const int w = sched.blur_width;
    const int half = w / 2;
    for (std::size_t n = 0; n < wave.size(); ++n) {
      double s = 0.0;
      for (int k = 0; k < w; ++k) {
        const long idx = static_cast<long>(n) + k - half;
        if (idx >= 0 && idx < static_cast<long>(wave.size())) s += wave[idx];
      }
      blurred[n] = s / w;
    }
    wave.swap(blurred);
  }

  double power = 0.0;
  for (double x : wave) power += x * x;
  power /= static_cast<double>(wave.size());
  const double gain = power > 0.0 ? kSignalRms / std::sqrt(power) : 0.0;
  double noise_power = kSignalRms * kSignalRms * std::pow(10.0, -sched.snr_db / 10.0);
  const double noise_sd = std::sqrt(noise_power);
  double peak = 0.0;
  for (double& x : wave) {
    x = x * gain + noise_sd * rng.Normal();
    peak = std::max(peak, std::abs(x));
  }
  if (peak > 0.99) {
    const double s = 0.99 / peak;
    for (double& x : wave) x *= s;
    noise_power *= s * s;
  }
  for (double& x : wave) x = QuantizePcm16(x);

  Utterance u;
  u.meta.utt_id = utt_id;
  u.meta.speaker_id = spk.speaker_id;
  u.meta.severity = spk.severity;
  u.meta.split = split;
  u.meta.words = std::move(words);
  u.meta.seen = seen;
  u.meta.audio_path = "audio/" + utt_id + ".wav";
  u.meta.sample_rate = sr;
  u.waveform = std::move(wave);
  u.noise_power = noise_power;
  return u;
}

TokenSequence DrawWords(const std::vector<int>& pool, const CorpusConfig& cfg, Rng& rng) {
  const std::size_t n = cfg.min_words + rng.Index(cfg.max_words - cfg.min_words + 1);
  TokenSequence words;
  for (std::size_t i = 0; i < n; ++i) words.push_back(pool[rng.Index(pool.size())]);
  return words;
}

}  // namespace

std::vector<double> FormantBands() {
  std::vector<double> bands(kNumBands);
  for (int i = 0; i < kNumBands; ++i) {
    bands[i] = kLowBand * std::pow(kHighBand / kLowBand, static_cast<double>(i) / (kNumBands - 1));
  }
  return bands;
}

std::pair<int, int> TokenTemplate(int token) {
  static const auto pairs = AllPairs();
  if (token < 1 || static_cast<std::size_t>(token) > pairs.size()) {
    throw UsageError("token " + std::to_string(token) + " has no acoustic template");
  }
  return pairs[token - 1];
}

void CorpusConfig::Validate() const {
  if (vocab_size < 8) throw ConfigError("corpus: vocab_size must be >= 8");
  if (vocab_size > MaxVocab()) {
    throw ConfigError("corpus: vocab_size may not exceed " + std::to_string(MaxVocab()) +
                      " (one formant pair per word)");
  }
  if (n_train_speakers == 0 || n_test_speakers == 0) throw ConfigError("corpus: speaker counts must be positive");
  if (utterances_per_speaker == 0 || test_utterances_per_speaker == 0) {
    throw ConfigError("corpus: utterance counts must be positive");
  }
  for (double f : severity_distribution) {
    if (!(f >= 0.0)) throw ConfigError("corpus: severity_distribution entries must be >= 0");
  }
  for (std::size_t c : SplitCounts(n_train_speakers, severity_distribution)) {
    if (c == 0) throw ConfigError("corpus: every severity needs at least one training speaker");
  }
  if (!(unseen_word_fraction >= 0.0 && unseen_word_fraction < 1.0)) {
    throw ConfigError("corpus: unseen_word_fraction must lie in [0, 1)");
  }
  if (!(test_vocab_fraction > 0.0 && test_vocab_fraction <= 1.0)) {
    throw ConfigError("corpus: test_vocab_fraction must lie in (0, 1]");
  }
  if (!(unseen_utterance_fraction >= 0.0 && unseen_utterance_fraction < 1.0)) {
    throw ConfigError("corpus: unseen_utterance_fraction must lie in [0, 1)");
  }
  if (min_words == 0 || max_words < min_words) throw ConfigError("corpus: need 1 <= min_words <= max_words");
  if (sample_rate < 8000) throw ConfigError("corpus: sample_rate must be >= 8000");
  if (!(max_seconds >= 2.0 * kEdgeSeconds + kTokenSeconds)) throw ConfigError("corpus: max_seconds too short");
  if (split_mode == SplitMode::kBlockOverlap && n_test_speakers > n_train_speakers) {
    throw ConfigError("corpus: block_overlap draws test speakers from the training speakers");
  }
  for (std::size_t s = 1; s < 4; ++s) {
    const auto& lo = schedules[s - 1];
    const auto& hi = schedules[s];
    if (hi.time_warp < lo.time_warp || hi.blur_width < lo.blur_width || hi.snr_db > lo.snr_db ||
        hi.jitter < lo.jitter) {
      throw ConfigError("corpus: severity schedules must degrade monotonically from H to VL");
    }
  }
  for (const auto& s : schedules) {
    if (s.blur_width < 1 || s.time_warp < 0.0 || s.time_warp >= 1.0 || s.jitter < 0.0) {
      throw ConfigError("corpus: invalid severity schedule");
    }
  }
  const std::size_t test_vocab = static_cast<std::size_t>(std::lround(test_vocab_fraction * vocab_size));
  const std::size_t unseen = static_cast<std::size_t>(std::lround(unseen_word_fraction * test_vocab));
  if (split_mode == SplitMode::kBlockOverlap) {
    if (unseen >= test_vocab) throw ConfigError("corpus: no seen words left in the test vocabulary");
    if (unseen == 0 && unseen_utterance_fraction > 0.0) {
      throw ConfigError("corpus: unseen utterances requested but the unseen word list is empty");
    }
  }
}

Corpus GenerateCorpus(const CorpusConfig& cfg) {
  cfg.Validate();
  Corpus corpus;

  // Vocabulary split: unseen words, common words (train and test) and
  // training-only words.
  std::vector<int> words(cfg.vocab_size);
  for (std::size_t i = 0; i < words.size(); ++i) words[i] = static_cast<int>(i) + 1;
  Rng lex_rng(DeriveSeed(cfg.rng_seed, "lexicon"));
  std::shuffle(words.begin(), words.end(), lex_rng.engine());
  const bool overlap = cfg.split_mode == SplitMode::kBlockOverlap;
  const std::size_t test_vocab = static_cast<std::size_t>(std::lround(cfg.test_vocab_fraction * cfg.vocab_size));
  const std::size_t n_unseen =
      overlap ? static_cast<std::size_t>(std::lround(cfg.unseen_word_fraction * test_vocab)) : 0;
  corpus.unseen_words.assign(words.begin(), words.begin() + n_unseen);
  corpus.train_words.assign(words.begin() + n_unseen, words.end());
  const std::vector<int> common(words.begin() + n_unseen, words.begin() + test_vocab);
  std::sort(corpus.unseen_words.begin(), corpus.unseen_words.end());
  std::sort(corpus.train_words.begin(), corpus.train_words.end());

  // Speakers, grouped by severity from H to VL.
  const auto train_counts = SplitCounts(cfg.n_train_speakers, cfg.severity_distribution);
  const auto test_counts = SplitCounts(cfg.n_test_speakers, cfg.severity_distribution);
  std::vector<SpeakerProfile> train_spk, test_spk;
  std::size_t next = 0;
  for (int s = 0; s < 4; ++s) {
    for (std::size_t i = 0; i < train_counts[s]; ++i, ++next) {
      const bool also_test = overlap && i < test_counts[s];
      train_spk.push_back(MakeSpeaker(SpeakerName('S', next), static_cast<Severity>(s),
                                      also_test ? "both_blocks" : "train", cfg.rng_seed));
      if (also_test) test_spk.push_back(train_spk.back());
    }
  }
  if (overlap) {
    for (int s = 0; s < 4; ++s) {
      if (test_counts[s] > train_counts[s]) {
        throw ConfigError("corpus: more test than training speakers for severity " +
                          ToString(static_cast<Severity>(s)));
      }
    }
  } else {
    next = 0;
    for (int s = 0; s < 4; ++s) {
      for (std::size_t i = 0; i < test_counts[s]; ++i, ++next) {
        test_spk.push_back(MakeSpeaker(SpeakerName('T', next), static_cast<Severity>(s), "test", cfg.rng_seed));
      }
    }
  }

  auto utt_name = [](const SpeakerProfile& spk, const char* tag, std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%03zu", i);
    return spk.speaker_id + "_" + tag + "_" + buf;
  };
  for (const auto& spk : train_spk) {
    Rng rng(DeriveSeed(cfg.rng_seed, "script:train:" + spk.speaker_id));
    for (std::size_t i = 0; i < cfg.utterances_per_speaker; ++i) {
      corpus.train.push_back(Synthesize(utt_name(spk, "tr", i), spk, "train",
                                        DrawWords(corpus.train_words, cfg, rng), true, cfg));
    }
  }
  const auto n_unseen_utts =
      overlap ? static_cast<std::size_t>(std::lround(cfg.unseen_utterance_fraction * cfg.test_utterances_per_speaker))
              : 0;
  for (const auto& spk : test_spk) {
    Rng rng(DeriveSeed(cfg.rng_seed, "script:test:" + spk.speaker_id));
    for (std::size_t i = 0; i < cfg.test_utterances_per_speaker; ++i) {
      // Unseen-word utterances are spread evenly through each speaker's list.
      const bool unseen = n_unseen_utts > 0 && (i * n_unseen_utts) % cfg.test_utterances_per_speaker < n_unseen_utts;
      const auto& pool = unseen ? corpus.unseen_words : (overlap ? common : corpus.train_words);
      corpus.test.push_back(
          Synthesize(utt_name(spk, "te", i), spk, "test", DrawWords(pool, cfg, rng), !unseen, cfg));
    }
  }
  corpus.speakers = train_spk;
  if (!overlap) corpus.speakers.insert(corpus.speakers.end(), test_spk.begin(), test_spk.end());
  return corpus;
}

}  // namespace sdadapt
