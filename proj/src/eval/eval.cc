// eval/eval.cc

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

#include "sdadapt/eval/eval.h"

#include <cmath>
#include <unordered_map>

#include "sdadapt/base/error.h"

namespace sdadapt {

UttScore Score(const TokenSequence& ref, const TokenSequence& hyp) {
  if (ref.empty()) throw UsageError("score: empty reference");
  const std::size_t n = ref.size(), m = hyp.size();
  // Cell = (cost, substitutions); lower cost wins, then more substitutions.
  struct Cell {
    std::size_t cost, subs, dels, ins;
  };
  std::vector<Cell> dp((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> Cell& { return dp[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = {i, 0, i, 0};
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = {j, 0, 0, j};
  auto better = [](const Cell& a, const Cell& b) {
    return a.cost < b.cost || (a.cost == b.cost && a.subs > b.subs);
  };
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const Cell& d = at(i - 1, j - 1);
      const bool match = ref[i - 1] == hyp[j - 1];
      Cell best = {d.cost + (match ? 0 : 1), d.subs + (match ? 0 : 1), d.dels, d.ins};
      const Cell& up = at(i - 1, j);
      Cell del = {up.cost + 1, up.subs, up.dels + 1, up.ins};
      if (better(del, best)) best = del;
      const Cell& left = at(i, j - 1);
      Cell ins = {left.cost + 1, left.subs, left.dels, left.ins + 1};
      if (better(ins, best)) best = ins;
      at(i, j) = best;
    }
  }
  const Cell& c = at(n, m);
  UttScore s;
  s.n_ref_words = n;
  s.substitutions = c.subs;
  s.deletions = c.dels;
  s.insertions = c.ins;
  return s;
}

UttScore Score(const ManifestEntry& meta, const TokenSequence& hyp) {
  UttScore s = Score(meta.words, hyp);
  s.utt_id = meta.utt_id;
  s.speaker_id = meta.speaker_id;
  s.severity = meta.severity;
  s.seen = meta.seen;
  return s;
}

double RoundTo2(double x) { return std::round(x * 100.0) / 100.0; }

std::map<std::string, WerCell> Aggregate(const std::vector<UttScore>& scores, Grouping grouping) {
  if (scores.empty()) throw UsageError("aggregate: no scores");
  std::map<std::string, WerCell> out;
  for (const auto& s : scores) {
    std::string key;
    switch (grouping) {
      case Grouping::kOverall: key = "overall"; break;
      case Grouping::kSeverity: key = ToString(s.severity); break;
      case Grouping::kSeenUnseen: key = s.seen ? "seen" : "unseen"; break;
      case Grouping::kSpeaker: key = s.speaker_id; break;
    }
    auto& cell = out[key];
    cell.errors += s.errors();
    cell.n_ref += s.n_ref_words;
    ++cell.n_utts;
  }
  for (auto& [key, cell] : out) {
    cell.wer = RoundTo2(100.0 * static_cast<double>(cell.errors) / static_cast<double>(cell.n_ref));
  }
  return out;
}

MapssweResult MapssweFromDifferences(const std::vector<double>& d, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("mapsswe: alpha must lie in (0, 1)");
  MapssweResult r;
  r.n = d.size();
  r.small_sample = r.n < 30;
  if (r.n < 2) {
    r.degenerate = true;
    return r;
  }
  double mean = 0.0;
  for (double x : d) mean += x;
  mean /= static_cast<double>(r.n);
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double var = ss / static_cast<double>(r.n - 1);
  if (!(var > 0.0)) {
    r.degenerate = true;
    return r;
  }
  r.z = mean * std::sqrt(static_cast<double>(r.n)) / std::sqrt(var);
  r.p = std::erfc(std::abs(r.z) / std::sqrt(2.0));
  r.significant = r.p < alpha;
  return r;
}

MapssweResult Mapsswe(const std::vector<UttScore>& a, const std::vector<UttScore>& b, double alpha) {
  std::unordered_map<std::string, const UttScore*> by_id;
  for (const auto& s : b) {
    if (!by_id.emplace(s.utt_id, &s).second) throw UsageError("mapsswe: duplicate utt_id " + s.utt_id);
  }
  if (a.size() != b.size()) throw UsageError("mapsswe: systems scored different numbers of utterances");
  std::vector<double> d;
  d.reserve(a.size());
  for (const auto& s : a) {
    auto it = by_id.find(s.utt_id);
    if (it == by_id.end()) throw UsageError("mapsswe: utterance " + s.utt_id + " missing from system B");
    d.push_back(static_cast<double>(s.errors()) - static_cast<double>(it->second->errors()));
  }
  return MapssweFromDifferences(d, alpha);
}

nlohmann::json SignificanceReport(const std::string& system_a, const std::string& system_b,
                                  const MapssweResult& r, double alpha) {
  return {{"system_a", system_a}, {"system_b", system_b}, {"n", r.n},
          {"z", r.z},             {"p", r.p},             {"alpha", alpha},
          {"significant", r.significant}};
}

}  // namespace sdadapt
