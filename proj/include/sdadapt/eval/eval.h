// eval/eval.h

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

#ifndef SDADAPT_EVAL_EVAL_H_
#define SDADAPT_EVAL_EVAL_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdadapt/corpus/corpus.h"
#include "sdadapt/ctc/ctc.h"

namespace sdadapt {

struct UttScore {
  std::string utt_id;
  std::string speaker_id;
  std::size_t n_ref_words = 0;
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  Severity severity = Severity::kH;
  bool seen = true;

  std::size_t errors() const { return substitutions + deletions + insertions; }
};

/// Minimal unit-cost alignment of hyp against ref. Among equal-cost
/// alignments the one with the most substitutions wins. Throws UsageError
/// when ref is empty.
UttScore Score(const TokenSequence& ref, const TokenSequence& hyp);
/// Same, with the utterance's bookkeeping fields filled from `meta`.
UttScore Score(const ManifestEntry& meta, const TokenSequence& hyp);

enum class Grouping { kOverall, kSeverity, kSeenUnseen, kSpeaker };

struct WerCell {
  std::size_t errors = 0;
  std::size_t n_ref = 0;
  std::size_t n_utts = 0;
  // Percentage, rounded to 2 decimals.
  double wer = 0.0;
};

/// Group name -> cell. Groups without utterances are absent. Group names:
/// "overall"; "H", "M", "L", "VL"; "seen", "unseen"; speaker ids.
std::map<std::string, WerCell> Aggregate(const std::vector<UttScore>& scores, Grouping grouping);

double RoundTo2(double x);

struct MapssweResult {
  std::size_t n = 0;
  double z = 0.0;
  double p = 1.0;
  bool significant = false;
  // Zero variance of the differences: z = 0, p = 1 by convention.
  bool degenerate = false;
  // Fewer than 30 segments; the normal approximation is shaky.
  bool small_sample = false;
};

/// Matched-pairs test over utterance segments. Scores are paired by utt_id;
/// both lists must cover the same utterances (UsageError otherwise).
MapssweResult Mapsswe(const std::vector<UttScore>& a, const std::vector<UttScore>& b, double alpha = 0.05);
/// Same test on precomputed per-segment error differences e_A − e_B.
MapssweResult MapssweFromDifferences(const std::vector<double>& d, double alpha = 0.05);

nlohmann::json SignificanceReport(const std::string& system_a, const std::string& system_b,
                                  const MapssweResult& r, double alpha);

}  // namespace sdadapt

#endif  // SDADAPT_EVAL_EVAL_H_
