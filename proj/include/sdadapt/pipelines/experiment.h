// pipelines/experiment.h

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

#ifndef SDADAPT_PIPELINES_EXPERIMENT_H_
#define SDADAPT_PIPELINES_EXPERIMENT_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdadapt/adapters/adapters.h"
#include "sdadapt/backbone/config.h"
#include "sdadapt/classifier/classifier.h"
#include "sdadapt/corpus/corpus.h"
#include "sdadapt/eval/eval.h"
#include "sdadapt/pipelines/pipelines.h"
#include "sdadapt/pipelines/train_config.h"

namespace sdadapt {

/// One row of the system matrix. Without a spec the row is the bare
/// fine-tuned baseline.
struct SystemRow {
  std::string id;
  std::optional<AdapterSpec> spec;
  bool aft = false;
  Supervision supervision = Supervision::kPseudoLabel;
  bool oracle_deficiency = false;
};

void to_json(nlohmann::json& j, const SystemRow& r);
void from_json(const nlohmann::json& j, SystemRow& r);

/// The default matrix: 1 (baseline), 2 / 2* (global RAB, test-time only),
/// 3 (LHUC speaker), 4 / 5 (RAB speaker without / with AFT), 6 / 7 (RAB
/// deficiency), 8 / 9 (structured RAB) and 9* (structured, ground truth).
std::vector<SystemRow> DefaultSystems();

struct ExperimentConfig {
  CorpusConfig corpus;
  BackboneConfig backbone;
  TrainConfig train;
  ClassifierConfig classifier;
  std::vector<SystemRow> systems = DefaultSystems();
  std::string output_dir = "runs/default";
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

  // Throws ConfigError (empty seeds, duplicate or empty system ids, ...).
  void Validate() const;
  // Copy with the corpus, backbone-init and training seeds set to `seed`.
  ExperimentConfig ForSeed(std::uint64_t seed) const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

const SystemRow& FindSystem(const ExperimentConfig& cfg, const std::string& id);

struct SystemResult {
  std::string system_id;
  std::uint64_t seed = 0;
  std::vector<TokenSequence> hyps;  // aligned with the test utterances
  std::vector<UttScore> scores;
  std::size_t n_adapter_params = 0;
  std::uint64_t backbone_digest_before = 0;
  std::uint64_t backbone_digest_after = 0;
  std::size_t skipped = 0;
  double seconds = 0.0;  // wall time, including any AFT first needed by this row
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<SystemResult> systems;  // in config order
  SeverityMap predicted_severity;
  double severity_accuracy = 0.0;  // test speakers, percent
  double setup_seconds = 0.0;       // corpus, baseline, classifier
  const SystemResult& Get(const std::string& id) const;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Generates the corpus, fine-tunes the baseline and runs every system row
/// for one seed. AFT models are shared between rows with the same spec and
/// baseline pseudo-labels are computed once. `threads` is passed to the
/// baseline decode.
SeedResult RunSeed(const ExperimentConfig& cfg, std::uint64_t seed, const ProgressFn& progress = {},
                   std::size_t threads = 1);

/// Rows of the results CSV: one per (system, seed), then one seed-averaged
/// row per system with seed "mean".
std::string ResultsCsv(const ExperimentConfig& cfg, const std::vector<SeedResult>& runs);

/// Utterance scores of one system across seeds, utt ids prefixed with the
/// seed so the segments stay distinct.
std::vector<UttScore> PooledScores(const std::vector<SeedResult>& runs, const std::string& system_id);

/// Seed-averaged overall TER of one system.
double MeanTer(const std::vector<SeedResult>& runs, const std::string& system_id);

/// Pairwise reports mirroring the table markers: every system against "1",
/// and the structured systems against the single-attribute ones.
std::vector<nlohmann::json> MatrixSignificance(const ExperimentConfig& cfg, const std::vector<SeedResult>& runs,
                                               double alpha = 0.05);

}  // namespace sdadapt

#endif  // SDADAPT_PIPELINES_EXPERIMENT_H_
