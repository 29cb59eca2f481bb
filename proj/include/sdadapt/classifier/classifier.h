// classifier/classifier.h

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

#ifndef SDADAPT_CLASSIFIER_CLASSIFIER_H_
#define SDADAPT_CLASSIFIER_CLASSIFIER_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdadapt/corpus/corpus.h"

namespace sdadapt {

/// Filterbank front end of the severity classifier.
inline constexpr double kFbankWindowSeconds = 0.025;
inline constexpr double kFbankHopSeconds = 0.010;
inline constexpr std::size_t kFbankBands = 20;
/// Per-band mean and standard deviation of log energies, plus mean and
/// standard deviation of frame log energy.
inline constexpr std::size_t kEmbeddingDim = 2 * kFbankBands + 2;

struct SpeakerEmbedding {
  std::string speaker_id;
  std::vector<double> features;  // kEmbeddingDim values
};

/// Frames of log filterbank energies (frames x kFbankBands, row-major) and
/// the matching frame log energies. Throws InputError when the waveform is
/// shorter than one window.
struct Filterbank {
  std::size_t frames = 0;
  std::vector<double> log_bands;
  std::vector<double> log_energy;
};
Filterbank ComputeFilterbank(std::span<const double> waveform, int sample_rate);

/// Statistics of one waveform.
std::vector<double> UtteranceFeatures(std::span<const double> waveform, int sample_rate);

/// Mean of the per-utterance statistics of one speaker. Throws UsageError on
/// an empty list and when utterances belong to different speakers.
SpeakerEmbedding ExtractEmbedding(const std::vector<const Utterance*>& utts);

struct ClassifierConfig {
  std::size_t epochs = 2000;
  double step_size = 0.5;
  double l2 = 1e-4;
  std::uint64_t rng_seed = 1;
};

/// Multinomial logistic regression over standardized embeddings. Classes are
/// the four severities in the order H, M, L, VL.
class SeverityClassifier {
 public:
  /// Full-batch gradient descent for cfg.epochs steps. Throws TrainingError
  /// when fewer than two classes are present.
  static SeverityClassifier Train(const std::vector<std::vector<double>>& features,
                                  const std::vector<Severity>& labels, const ClassifierConfig& cfg = {});

  std::vector<double> Probabilities(const std::vector<double>& features) const;
  /// Argmax class; ties go to the less severe class.
  Severity Predict(const std::vector<double>& features) const;
  /// Majority vote over the utterance-level predictions of one speaker;
  /// ties go to the less severe class.
  Severity PredictSpeaker(const std::vector<const Utterance*>& utts) const;

  friend void to_json(nlohmann::json& j, const SeverityClassifier& c);
  friend void from_json(const nlohmann::json& j, SeverityClassifier& c);

 private:
  std::vector<double> Standardize(const std::vector<double>& features) const;

  std::vector<double> mean_, scale_;
  std::vector<double> weights_;  // 4 x dim, row-major
  std::vector<double> bias_;
};

/// Trains on every utterance of `train` (labels from the speaker severity).
SeverityClassifier TrainSeverityClassifier(const std::vector<Utterance>& train, const ClassifierConfig& cfg = {});

/// Speaker-level predictions for every speaker appearing in `utts`.
std::map<std::string, Severity> PredictSeverities(const SeverityClassifier& classifier,
                                                  const std::vector<Utterance>& utts);

}  // namespace sdadapt

#endif  // SDADAPT_CLASSIFIER_CLASSIFIER_H_
