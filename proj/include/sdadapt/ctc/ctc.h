// ctc/ctc.h

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

#ifndef SDADAPT_CTC_CTC_H_
#define SDADAPT_CTC_CTC_H_

#include <cstddef>
#include <span>
#include <vector>

#include "sdadapt/diffcore/array.h"

namespace sdadapt {

/// Target or hypothesis token ids. Ids lie in [1, vocab_size); the blank
/// (id 0) never appears in a sequence. May be empty.
using TokenSequence = std::vector<int>;

inline constexpr int kBlank = 0;
// Stand-in for log(0); never exponentiated directly.
inline constexpr double kLogZero = -1e30;

/// Throws DimensionError when an id is the blank or outside the vocabulary.
void ValidateTokens(const TokenSequence& seq, std::size_t vocab_size);

/// Fewest frames that can emit `target`: one per token plus one blank
/// between each pair of equal adjacent tokens.
std::size_t CtcMinFrames(const TokenSequence& target);

/// Negative log-likelihood of `target` under per-frame log-probabilities
/// log_probs[T×V], summed over the sequence. The result is a scalar on the
/// tape; its backward rule is the exact alpha-beta posterior.
/// Throws InfeasibleError when T < CtcMinFrames(target).
DiffArray CtcLoss(const DiffArray& log_probs, const TokenSequence& target);

/// Per-frame argmax (lowest index wins ties), collapse repeats, drop blanks.
TokenSequence GreedyDecode(const DiffArray& log_probs);
TokenSequence GreedyDecode(std::span<const double> scores, std::size_t frames,
                           std::size_t vocab);

/// Collapses a frame-level label path to its output sequence.
TokenSequence CollapsePath(std::span<const int> path);

/// Sum of the probabilities of every length-T path over V symbols whose
/// collapse equals `target`. probs is [T×V] row-major, linear domain.
/// Exponential in T; throws UsageError when V^T exceeds 1e6.
double BruteForceCtc(std::span<const double> probs, std::size_t frames, std::size_t vocab,
                     const TokenSequence& target);

}  // namespace sdadapt

#endif  // SDADAPT_CTC_CTC_H_
