// pipelines/pipelines.h

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

#ifndef SDADAPT_PIPELINES_PIPELINES_H_
#define SDADAPT_PIPELINES_PIPELINES_H_

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sdadapt/adapters/adapters.h"
#include "sdadapt/backbone/model.h"
#include "sdadapt/base/error.h"
#include "sdadapt/corpus/corpus.h"
#include "sdadapt/pipelines/train_config.h"

namespace sdadapt {

struct PhaseLog {
  std::string name;
  std::vector<double> epoch_loss;   // mean CTC loss per utterance
  std::vector<double> heldout_ter;  // percent; empty when not measured
  std::size_t skipped = 0;          // utterances with infeasible targets
};

/// Raised when a loss or gradient becomes non-finite. Carries the last
/// parameters that produced a finite epoch.
class DivergenceError : public TrainingError {
 public:
  DivergenceError(const std::string& what, std::shared_ptr<const BackboneModel> last_good)
      : TrainingError(what), last_good_(std::move(last_good)) {}
  const std::shared_ptr<const BackboneModel>& last_good() const { return last_good_; }

 private:
  std::shared_ptr<const BackboneModel> last_good_;
};

/// Speaker id -> severity label used to resolve deficiency adapters.
using SeverityMap = std::map<std::string, Severity>;
/// Ground-truth speaker severities of a set of utterances.
SeverityMap TrueSeverities(const std::vector<Utterance>& utts);

/// Greedy decode of every utterance. With a spec, each utterance uses the
/// adapter stack resolved from its speaker and `severity_of`; without, the
/// bare backbone. With threads > 1 utterances are decoded concurrently; the
/// output does not depend on the thread count.
std::vector<TokenSequence> DecodeAll(const BackboneModel& model, const std::vector<Utterance>& utts,
                                     const AdapterBank* bank = nullptr, const AdapterSpec* spec = nullptr,
                                     const SeverityMap* severity_of = nullptr, std::size_t threads = 1);

/// Fine-tunes every backbone parameter (minus cfg.baseline.freeze) with CTC
/// on ground-truth transcripts.
BackboneModel FinetuneBaseline(const BackboneModel& init, const std::vector<Utterance>& train,
                               const TrainConfig& cfg, PhaseLog* log = nullptr);

struct AftResult {
  BackboneModel model;
  AdapterBank bank;
  std::vector<PhaseLog> logs;
  // Digest of the deficiency entries entering and leaving stage 2.
  std::uint64_t deficiency_digest_before_stage2 = 0;
  std::uint64_t deficiency_digest_after_stage2 = 0;
};

/// Two-stage supervised adaptive fine-tuning. Stage 1 estimates deficiency
/// (or global) adapters jointly with the backbone; stage 2 holds them fixed
/// and estimates speaker adapters, backbone still trainable.
AftResult AdaptiveFinetune(const BackboneModel& baseline, const AdapterSpec& spec,
                           const std::vector<Utterance>& train, const TrainConfig& cfg);

enum class Supervision { kGroundTruth, kPseudoLabel };
std::string ToString(Supervision s);
Supervision ParseSupervision(const std::string& text);

struct SupervisionMode {
  Supervision mode = Supervision::kPseudoLabel;
  // Un-adapted model whose greedy output supplies the pseudo-labels.
  const BackboneModel* decoder = nullptr;
  // Optional precomputed decoder output keyed by utt_id (shared between
  // systems that use the same decoder).
  const std::map<std::string, TokenSequence>* cached = nullptr;
};

struct TtaResult {
  AdapterBank bank;
  std::vector<TokenSequence> hyps;  // aligned with the test utterances
  std::vector<PhaseLog> logs;
  std::size_t skipped = 0;          // utterances excluded from adaptation
  std::uint64_t backbone_digest_before = 0;
  std::uint64_t backbone_digest_after = 0;
};

/// Test-time adaptation with a frozen backbone: (a) supervision, (b) stage 1
/// deficiency/global adapters per pooled severity group, (c) stage 2 speaker
/// adapters per speaker with the deficiency adapters fixed, (d) decode.
TtaResult TestTimeAdapt(const BackboneModel& model, const AdapterBank& bank, const AdapterSpec& spec,
                        const std::vector<Utterance>& test, const SeverityMap& severity_of,
                        const SupervisionMode& supervision, const TrainConfig& cfg);

}  // namespace sdadapt

#endif  // SDADAPT_PIPELINES_PIPELINES_H_
