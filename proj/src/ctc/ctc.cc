// ctc/ctc.cc

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

#include "sdadapt/ctc/ctc.h"

#include <algorithm>
#include <cmath>

#include "sdadapt/base/error.h"

namespace sdadapt {

namespace {

double LogAdd(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b <= kLogZero) return a;
  return a + std::log1p(std::exp(b - a));
}

double Clamp(double x) { return x < kLogZero ? kLogZero : x; }

}  // namespace

void ValidateTokens(const TokenSequence& seq, std::size_t vocab_size) {
  for (int id : seq) {
    if (id <= kBlank || static_cast<std::size_t>(id) >= vocab_size) {
      throw DimensionError("token id " + std::to_string(id) + " outside [1, " +
                           std::to_string(vocab_size) + ")");
    }
  }
}

std::size_t CtcMinFrames(const TokenSequence& target) {
  std::size_t n = target.size();
  for (std::size_t i = 1; i < target.size(); ++i) {
    if (target[i] == target[i - 1]) ++n;
  }
  return n;
}

DiffArray CtcLoss(const DiffArray& log_probs, const TokenSequence& target) {
  if (log_probs.rank() != 2) throw DimensionError("ctc_loss: log_probs must be [T×V]");
  const std::size_t frames = log_probs.dim(0), vocab = log_probs.dim(1);
  ValidateTokens(target, vocab);
  if (frames < CtcMinFrames(target)) {
    throw InfeasibleError("ctc_loss: " + std::to_string(frames) + " frames cannot emit " +
                          std::to_string(target.size()) + " tokens (needs " +
                          std::to_string(CtcMinFrames(target)) + ")");
  }
  // Blank-augmented target: blank, y1, blank, y2, ..., blank.
  const std::size_t states = 2 * target.size() + 1;
  std::vector<int> ext(states, kBlank);
  for (std::size_t u = 0; u < target.size(); ++u) ext[2 * u + 1] = target[u];
  auto skip_allowed = [&](std::size_t s) {  // may jump from s-2 to s
    return s >= 2 && ext[s] != kBlank && ext[s] != ext[s - 2];
  };

  auto lp = log_probs.data();
  auto at = [&](std::size_t t, int k) { return lp[t * vocab + static_cast<std::size_t>(k)]; };

  // alpha includes the emission at t; beta covers frames t+1..T-1 only.
  std::vector<double> alpha(frames * states, kLogZero);
  std::vector<double> beta(frames * states, kLogZero);
  alpha[0] = at(0, ext[0]);
  if (states > 1) alpha[1] = at(0, ext[1]);
  for (std::size_t t = 1; t < frames; ++t) {
    const double* prev = alpha.data() + (t - 1) * states;
    double* cur = alpha.data() + t * states;
    for (std::size_t s = 0; s < states; ++s) {
      double v = prev[s];
      if (s >= 1) v = LogAdd(v, prev[s - 1]);
      if (skip_allowed(s)) v = LogAdd(v, prev[s - 2]);
      cur[s] = v <= kLogZero ? kLogZero : Clamp(v + at(t, ext[s]));
    }
  }
  double* last = beta.data() + (frames - 1) * states;
  last[states - 1] = 0.0;
  if (states >= 2) last[states - 2] = 0.0;
  for (std::size_t t = frames - 1; t-- > 0;) {
    const double* next = beta.data() + (t + 1) * states;
    double* cur = beta.data() + t * states;
    for (std::size_t s = 0; s < states; ++s) {
      double v = next[s] <= kLogZero ? kLogZero : next[s] + at(t + 1, ext[s]);
      if (s + 1 < states && next[s + 1] > kLogZero) v = LogAdd(v, next[s + 1] + at(t + 1, ext[s + 1]));
      if (s + 2 < states && skip_allowed(s + 2) && next[s + 2] > kLogZero)
        v = LogAdd(v, next[s + 2] + at(t + 1, ext[s + 2]));
      cur[s] = Clamp(v);
    }
  }
  const double* alpha_last = alpha.data() + (frames - 1) * states;
  double log_total = alpha_last[states - 1];
  if (states >= 2) log_total = LogAdd(log_total, alpha_last[states - 2]);
  if (!(log_total > kLogZero / 2) || !std::isfinite(log_total)) {
    throw NumericError("ctc_loss: total path probability underflowed");
  }

  return MakeOp(
      {1}, {-log_total}, {log_probs},
      [alpha = std::move(alpha), beta = std::move(beta), ext = std::move(ext), frames, states,
       vocab, log_total](std::span<const double> g, std::span<const std::span<double>> in) {
        // d(−log P)/d lp_t(k) = −Σ_{s: ext[s]=k} exp(α_t(s) + β_t(s) − log P)
        for (std::size_t t = 0; t < frames; ++t) {
          const double* a = alpha.data() + t * states;
          const double* b = beta.data() + t * states;
          double* dst = in[0].data() + t * vocab;
          for (std::size_t s = 0; s < states; ++s) {
            if (a[s] <= kLogZero || b[s] <= kLogZero) continue;
            dst[ext[s]] -= g[0] * std::exp(a[s] + b[s] - log_total);
          }
        }
      });
}

TokenSequence CollapsePath(std::span<const int> path) {
  TokenSequence out;
  int prev = -1;
  for (int k : path) {
    if (k != prev && k != kBlank) out.push_back(k);
    prev = k;
  }
  return out;
}

TokenSequence GreedyDecode(std::span<const double> scores, std::size_t frames,
                           std::size_t vocab) {
  if (scores.size() != frames * vocab) throw DimensionError("greedy_decode: size mismatch");
  std::vector<int> path(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    const double* row = scores.data() + t * vocab;
    // max_element returns the first maximum, i.e. the lowest index on ties.
    path[t] = static_cast<int>(std::max_element(row, row + vocab) - row);
  }
  return CollapsePath(path);
}

TokenSequence GreedyDecode(const DiffArray& log_probs) {
  if (log_probs.rank() != 2) throw DimensionError("greedy_decode: expected [T×V]");
  return GreedyDecode(log_probs.data(), log_probs.dim(0), log_probs.dim(1));
}

double BruteForceCtc(std::span<const double> probs, std::size_t frames, std::size_t vocab,
                     const TokenSequence& target) {
  if (probs.size() != frames * vocab) throw DimensionError("brute_force_ctc: size mismatch");
  double paths = 1.0;
  for (std::size_t t = 0; t < frames; ++t) {
    paths *= static_cast<double>(vocab);
    if (paths > 1e6) throw UsageError("brute_force_ctc: V^T exceeds 1e6");
  }
  std::vector<int> path(frames, 0);
  double total = 0.0;
  while (true) {
    if (CollapsePath(path) == target) {
      double p = 1.0;
      for (std::size_t t = 0; t < frames; ++t) p *= probs[t * vocab + static_cast<std::size_t>(path[t])];
      total += p;
    }
    // Odometer increment over V^T paths.
    std::size_t t = 0;
    while (t < frames && ++path[t] == static_cast<int>(vocab)) path[t++] = 0;
    if (t == frames) break;
  }
  return total;
}

}  // namespace sdadapt
