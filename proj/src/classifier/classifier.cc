// classifier/classifier.cc

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

#include "sdadapt/classifier/classifier.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sdadapt/base/error.h"
#include "sdadapt/base/random.h"

namespace sdadapt {

namespace {

constexpr std::size_t kClasses = kAllSeverities.size();
constexpr double kLogFloor = 1e-10;

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::size_t NextPow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Triangular weights (bands x bins) spaced evenly on the mel scale.
std::vector<double> MelWeights(std::size_t bins, std::size_t fft_size, int sample_rate) {
  std::vector<double> edges(kFbankBands + 2);
  const double top = HzToMel(sample_rate / 2.0);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = MelToHz(top * static_cast<double>(i) / static_cast<double>(kFbankBands + 1));
  }
  std::vector<double> w(kFbankBands * bins, 0.0);
  for (std::size_t b = 0; b < kFbankBands; ++b) {
    const double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(fft_size);
      double v = 0.0;
      if (f > lo && f <= mid) v = (f - lo) / (mid - lo);
      if (f > mid && f < hi) v = (hi - f) / (hi - mid);
      w[b * bins + k] = v;
    }
  }
  return w;
}

void MeanStd(const std::vector<double>& v, std::size_t offset, std::size_t stride, std::size_t n, double& mean,
             double& sd) {
  mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += v[offset + i * stride];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = v[offset + i * stride] - mean;
    var += d * d;
  }
  sd = std::sqrt(var / static_cast<double>(n));
}

std::vector<double> Softmax(std::vector<double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double& x : z) {
    x = std::exp(x - m);
    s += x;
  }
  for (double& x : z) x /= s;
  return z;
}

// First index holding the maximum, i.e. the least severe class on ties.
std::size_t ArgMax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace

Filterbank ComputeFilterbank(std::span<const double> waveform, int sample_rate) {
  const auto window = static_cast<std::size_t>(std::lround(kFbankWindowSeconds * sample_rate));
  const auto hop = static_cast<std::size_t>(std::lround(kFbankHopSeconds * sample_rate));
  if (waveform.size() < window) {
    throw InputError("filterbank: waveform of " + std::to_string(waveform.size()) +
                     " samples is shorter than one " + std::to_string(window) + "-sample window");
  }
  const std::size_t fft_size = NextPow2(window);
  const std::size_t bins = fft_size / 2 + 1;
  const auto weights = MelWeights(bins, fft_size, sample_rate);
  std::vector<double> hamming(window);
  for (std::size_t n = 0; n < window; ++n) {
    hamming[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / static_cast<double>(window - 1));
  }

  double* in = fftw_alloc_real(fft_size);
  fftw_complex* out = fftw_alloc_complex(bins);
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(fft_size), in, out, FFTW_ESTIMATE);

  Filterbank fb;
  fb.frames = (waveform.size() - window) / hop + 1;
  fb.log_bands.resize(fb.frames * kFbankBands);
  fb.log_energy.resize(fb.frames);
  std::vector<double> power(bins);
  for (std::size_t t = 0; t < fb.frames; ++t) {
    const double* x = waveform.data() + t * hop;
    double energy = 0.0;
    for (std::size_t n = 0; n < fft_size; ++n) {
      in[n] = n < window ? x[n] * hamming[n] : 0.0;
      energy += in[n] * in[n];
    }
    fftw_execute(plan);
    for (std::size_t k = 0; k < bins; ++k) power[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    for (std::size_t b = 0; b < kFbankBands; ++b) {
      double e = 0.0;
      for (std::size_t k = 0; k < bins; ++k) e += weights[b * bins + k] * power[k];
      fb.log_bands[t * kFbankBands + b] = std::log(e + kLogFloor);
    }
    fb.log_energy[t] = std::log(energy + kLogFloor);
  }
  fftw_destroy_plan(plan);
  fftw_free(out);
  fftw_free(in);
  return fb;
}

std::vector<double> UtteranceFeatures(std::span<const double> waveform, int sample_rate) {
  const Filterbank fb = ComputeFilterbank(waveform, sample_rate);
  std::vector<double> f(kEmbeddingDim);
  for (std::size_t b = 0; b < kFbankBands; ++b) {
    MeanStd(fb.log_bands, b, kFbankBands, fb.frames, f[b], f[kFbankBands + b]);
  }
  MeanStd(fb.log_energy, 0, 1, fb.frames, f[2 * kFbankBands], f[2 * kFbankBands + 1]);
  return f;
}

SpeakerEmbedding ExtractEmbedding(const std::vector<const Utterance*>& utts) {
  if (utts.empty()) throw UsageError("extract_embedding: no utterances");
  SpeakerEmbedding e;
  e.speaker_id = utts.front()->meta.speaker_id;
  e.features.assign(kEmbeddingDim, 0.0);
  for (const Utterance* u : utts) {
    if (u->meta.speaker_id != e.speaker_id) {
      throw UsageError("extract_embedding: mixed speakers " + e.speaker_id + " and " + u->meta.speaker_id);
    }
    const auto f = UtteranceFeatures(u->waveform, u->meta.sample_rate);
    for (std::size_t i = 0; i < kEmbeddingDim; ++i) e.features[i] += f[i];
  }
  for (double& x : e.features) x /= static_cast<double>(utts.size());
  return e;
}

SeverityClassifier SeverityClassifier::Train(const std::vector<std::vector<double>>& features,
                                             const std::vector<Severity>& labels, const ClassifierConfig& cfg) {
  if (features.size() != labels.size()) throw UsageError("train_classifier: features and labels differ in count");
  if (features.empty()) throw TrainingError("train_classifier: empty training set");
  std::array<std::size_t, kClasses> counts{};
  for (Severity s : labels) ++counts[Index(s)];
  if (std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) < 2) {
    throw TrainingError("train_classifier: at least two severity classes are required");
  }
  const std::size_t dim = features.front().size();
  for (const auto& f : features) {
    if (f.size() != dim) throw DimensionError("train_classifier: ragged feature vectors");
  }

  SeverityClassifier c;
  c.mean_.assign(dim, 0.0);
  c.scale_.assign(dim, 1.0);
  const double n = static_cast<double>(features.size());
  for (std::size_t d = 0; d < dim; ++d) {
    double m = 0.0;
    for (const auto& f : features) m += f[d];
    m /= n;
    double var = 0.0;
    for (const auto& f : features) var += (f[d] - m) * (f[d] - m);
    c.mean_[d] = m;
    c.scale_[d] = std::sqrt(var / n) > 1e-12 ? std::sqrt(var / n) : 1.0;
  }
  std::vector<std::vector<double>> x;
  x.reserve(features.size());
  for (const auto& f : features) x.push_back(c.Standardize(f));

  Rng rng(cfg.rng_seed);
  c.weights_.resize(kClasses * dim);
  for (double& w : c.weights_) w = rng.Normal(0.0, 0.01);
  c.bias_.assign(kClasses, 0.0);

  std::vector<double> gw(c.weights_.size()), gb(kClasses);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      std::vector<double> z(kClasses);
      for (std::size_t k = 0; k < kClasses; ++k) {
        z[k] = c.bias_[k];
        for (std::size_t d = 0; d < dim; ++d) z[k] += c.weights_[k * dim + d] * x[i][d];
      }
      auto p = Softmax(std::move(z));
      p[Index(labels[i])] -= 1.0;
      for (std::size_t k = 0; k < kClasses; ++k) {
        gb[k] += p[k];
        for (std::size_t d = 0; d < dim; ++d) gw[k * dim + d] += p[k] * x[i][d];
      }
    }
    for (std::size_t j = 0; j < gw.size(); ++j) {
      c.weights_[j] -= cfg.step_size * (gw[j] / n + cfg.l2 * c.weights_[j]);
    }
    for (std::size_t k = 0; k < kClasses; ++k) c.bias_[k] -= cfg.step_size * gb[k] / n;
  }
  return c;
}

std::vector<double> SeverityClassifier::Standardize(const std::vector<double>& features) const {
  if (features.size() != mean_.size()) {
    throw DimensionError("classifier: expected " + std::to_string(mean_.size()) + " features, got " +
                         std::to_string(features.size()));
  }
  std::vector<double> out(features.size());
  for (std::size_t d = 0; d < out.size(); ++d) out[d] = (features[d] - mean_[d]) / scale_[d];
  return out;
}

std::vector<double> SeverityClassifier::Probabilities(const std::vector<double>& features) const {
  const auto x = Standardize(features);
  const std::size_t dim = x.size();
  std::vector<double> z(kClasses);
  for (std::size_t k = 0; k < kClasses; ++k) {
    z[k] = bias_[k];
    for (std::size_t d = 0; d < dim; ++d) z[k] += weights_[k * dim + d] * x[d];
  }
  return Softmax(std::move(z));
}

Severity SeverityClassifier::Predict(const std::vector<double>& features) const {
  return kAllSeverities[ArgMax(Probabilities(features))];
}

Severity SeverityClassifier::PredictSpeaker(const std::vector<const Utterance*>& utts) const {
  if (utts.empty()) throw UsageError("predict: no utterances");
  std::vector<double> votes(kClasses, 0.0);
  for (const Utterance* u : utts) {
    votes[Index(Predict(UtteranceFeatures(u->waveform, u->meta.sample_rate)))] += 1.0;
  }
  return kAllSeverities[ArgMax(votes)];
}

void to_json(nlohmann::json& j, const SeverityClassifier& c) {
  j = {{"mean", c.mean_}, {"scale", c.scale_}, {"weights", c.weights_}, {"bias", c.bias_}};
}

void from_json(const nlohmann::json& j, SeverityClassifier& c) {
  j.at("mean").get_to(c.mean_);
  j.at("scale").get_to(c.scale_);
  j.at("weights").get_to(c.weights_);
  j.at("bias").get_to(c.bias_);
  if (c.scale_.size() != c.mean_.size() || c.weights_.size() != kClasses * c.mean_.size() ||
      c.bias_.size() != kClasses) {
    throw ParseError("classifier: inconsistent parameter sizes");
  }
}

SeverityClassifier TrainSeverityClassifier(const std::vector<Utterance>& train, const ClassifierConfig& cfg) {
  std::vector<std::vector<double>> features;
  std::vector<Severity> labels;
  features.reserve(train.size());
  for (const auto& u : train) {
    features.push_back(UtteranceFeatures(u.waveform, u.meta.sample_rate));
    labels.push_back(u.meta.severity);
  }
  return SeverityClassifier::Train(features, labels, cfg);
}

std::map<std::string, Severity> PredictSeverities(const SeverityClassifier& classifier,
                                                  const std::vector<Utterance>& utts) {
  std::map<std::string, std::vector<const Utterance*>> by_speaker;
  for (const auto& u : utts) by_speaker[u.meta.speaker_id].push_back(&u);
  std::map<std::string, Severity> out;
  for (const auto& [spk, list] : by_speaker) out[spk] = classifier.PredictSpeaker(list);
  return out;
}

}  // namespace sdadapt
