// tests/unit/classifier_test.cc

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

#include <cmath>

#include "doctest.h"
#include "sdadapt/base/error.h"
#include "sdadapt/classifier/classifier.h"

using namespace sdadapt;

namespace {

std::map<std::string, std::vector<const Utterance*>> BySpeaker(const std::vector<Utterance>& utts) {
  std::map<std::string, std::vector<const Utterance*>> out;
  for (const auto& u : utts) out[u.meta.speaker_id].push_back(&u);
  return out;
}

// Temporal flatness of the upper half of the filterbank: the negated mean
// frame-to-frame standard deviation of its log energies.
double BlurStatistic(const SpeakerEmbedding& e) {
  double sd = 0.0;
  for (std::size_t b = kFbankBands / 2; b < kFbankBands; ++b) sd += e.features[kFbankBands + b];
  return -sd / static_cast<double>(kFbankBands / 2);
}

}  // namespace

TEST_CASE("filterbank shape and errors") {
  std::vector<double> wave(16000);
  for (std::size_t n = 0; n < wave.size(); ++n) wave[n] = 0.3 * std::sin(2.0 * 3.14159265358979 * 1000.0 * n / 16000.0);
  auto fb = ComputeFilterbank(wave, 16000);
  CHECK(fb.frames == (16000 - 400) / 160 + 1);
  CHECK(fb.log_bands.size() == fb.frames * kFbankBands);
  // A 1 kHz tone puts most energy in one band.
  std::size_t peak = 0;
  for (std::size_t b = 1; b < kFbankBands; ++b) {
    if (fb.log_bands[b] > fb.log_bands[peak]) peak = b;
  }
  const double mel_peak = 2595.0 * std::log10(1.0 + 1000.0 / 700.0);
  const double mel_top = 2595.0 * std::log10(1.0 + 8000.0 / 700.0);
  CHECK(std::abs(static_cast<double>(peak + 1) - mel_peak / mel_top * (kFbankBands + 1)) <= 1.0);

  CHECK(UtteranceFeatures(wave, 16000).size() == kEmbeddingDim);
  CHECK(kEmbeddingDim == 42);
  std::vector<double> short_wave(399, 0.1);
  CHECK_THROWS_AS(ComputeFilterbank(short_wave, 16000), InputError);
}

TEST_CASE("severity classifier on the default corpus") {
  CorpusConfig cfg;
  Corpus c = GenerateCorpus(cfg);

  auto groups = BySpeaker(c.train);
  const auto& first = groups.begin()->second;
  CHECK(ExtractEmbedding(first).features == ExtractEmbedding(first).features);
  CHECK(ExtractEmbedding(first).speaker_id == groups.begin()->first);
  CHECK_THROWS_AS(ExtractEmbedding({}), UsageError);

  double blur_h = 0.0, blur_vl = 0.0;
  int n_h = 0, n_vl = 0;
  for (const auto& [spk, list] : groups) {
    const Severity s = list.front()->meta.severity;
    if (s == Severity::kH) {
      blur_h += BlurStatistic(ExtractEmbedding(list));
      ++n_h;
    } else if (s == Severity::kVL) {
      blur_vl += BlurStatistic(ExtractEmbedding(list));
      ++n_vl;
    }
  }
  CHECK(blur_vl / n_vl > blur_h / n_h);

  auto clf = TrainSeverityClassifier(c.train);
  std::size_t correct = 0;
  for (const auto& u : c.train) correct += clf.Predict(UtteranceFeatures(u.waveform, u.meta.sample_rate)) == u.meta.severity;
  CHECK(static_cast<double>(correct) / static_cast<double>(c.train.size()) >= 0.95);

  const auto& probe = c.test.front();
  const auto f = UtteranceFeatures(probe.waveform, probe.meta.sample_rate);
  CHECK(clf.Predict(f) == clf.Predict(f));
  nlohmann::json j = clf;
  CHECK(j.get<SeverityClassifier>().Probabilities(f) == clf.Probabilities(f));

  cfg.split_mode = SplitMode::kSpeakerDisjoint;
  Corpus d = GenerateCorpus(cfg);
  auto clf_d = TrainSeverityClassifier(d.train);
  auto predicted = PredictSeverities(clf_d, d.test);
  std::size_t right = 0;
  for (const auto& [spk, list] : BySpeaker(d.test)) right += predicted.at(spk) == list.front()->meta.severity;
  CHECK(predicted.size() == cfg.n_test_speakers);
  CHECK(static_cast<double>(right) / static_cast<double>(predicted.size()) >= 0.75);
}

TEST_CASE("classifier errors and tie-breaking") {
  std::vector<std::vector<double>> x = {{0.0, 1.0}, {1.0, 0.0}};
  CHECK_THROWS_AS(SeverityClassifier::Train(x, {Severity::kL, Severity::kL}), TrainingError);
  CHECK_THROWS_AS(SeverityClassifier::Train(x, {Severity::kL}), UsageError);

  nlohmann::json flat = {{"mean", {0.0, 0.0}},
                         {"scale", {1.0, 1.0}},
                         {"weights", std::vector<double>(8, 0.0)},
                         {"bias", {0.0, 0.0, 0.0, 0.0}}};
  auto tied = flat.get<SeverityClassifier>();
  CHECK(tied.Predict({3.0, -2.0}) == Severity::kH);
  flat["bias"] = {0.0, 1.0, 1.0, 0.0};
  CHECK(flat.get<SeverityClassifier>().Predict({3.0, -2.0}) == Severity::kM);
  flat["bias"] = {0.0, 0.0};
  CHECK_THROWS_AS(flat.get<SeverityClassifier>(), ParseError);
}
