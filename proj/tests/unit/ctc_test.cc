// tests/unit/ctc_test.cc

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
#include <vector>

#include "doctest.h"
#include "sdadapt/base/error.h"
#include "sdadapt/base/random.h"
#include "sdadapt/ctc/ctc.h"
#include "sdadapt/diffcore/gradcheck.h"
#include "sdadapt/diffcore/ops.h"

using namespace sdadapt;

namespace {

// Random normalized log-probabilities built through the tape so gradients
// can flow back to the raw scores.
DiffArray RandomLogits(std::size_t t, std::size_t v, Rng& rng, bool grad = false) {
  std::vector<double> x(t * v);
  for (double& e : x) e = rng.Normal(0.0, 1.5);
  return DiffArray::FromData({t, v}, std::move(x), grad);
}

TokenSequence RandomTarget(std::size_t max_len, std::size_t vocab, Rng& rng) {
  TokenSequence out(rng.Index(max_len + 1));
  for (int& id : out) id = 1 + static_cast<int>(rng.Index(vocab - 1));
  return out;
}

// All sequences over {1..V-1} with length <= max_len.
void Enumerate(std::size_t max_len, std::size_t vocab, TokenSequence& cur,
               std::vector<TokenSequence>& out) {
  out.push_back(cur);
  if (cur.size() == max_len) return;
  for (int k = 1; k < static_cast<int>(vocab); ++k) {
    cur.push_back(k);
    Enumerate(max_len, vocab, cur, out);
    cur.pop_back();
  }
}

}  // namespace

TEST_CASE("ctc single-frame uniform case equals ln 2") {
  auto lp = DiffArray::FromData({1, 2}, {std::log(0.5), std::log(0.5)});
  CHECK(CtcLoss(lp, {1}).item() == doctest::Approx(std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("ctc empty target is the all-blank path") {
  Rng rng(4);
  auto lp = LogSoftmax(RandomLogits(5, 3, rng));
  double expect = 0.0;
  for (std::size_t t = 0; t < 5; ++t) expect -= lp.at(t, 0);
  CHECK(CtcLoss(lp, {}).item() == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("ctc matches brute-force enumeration on random tiny instances") {
  Rng rng(2024);
  int checked = 0;
  double worst = 0.0;
  while (checked < 200) {
    const std::size_t t = 1 + rng.Index(6);
    const std::size_t v = 2 + rng.Index(2);
    TokenSequence target = RandomTarget(2, v, rng);
    if (CtcMinFrames(target) > t) continue;
    auto lp = LogSoftmax(RandomLogits(t, v, rng));
    std::vector<double> probs(lp.size());
    for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = std::exp(lp.at(i));
    const double brute = BruteForceCtc(probs, t, v, target);
    const double dp = CtcLoss(lp, target).item();
    worst = std::max(worst, std::abs(dp + std::log(brute)));
    ++checked;
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("brute-force collapse partition is complete") {
  Rng rng(8);
  auto lp = LogSoftmax(RandomLogits(2, 2, rng));
  std::vector<double> probs(lp.size());
  for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = std::exp(lp.at(i));
  std::vector<TokenSequence> all;
  TokenSequence cur;
  Enumerate(2, 2, cur, all);
  double total = 0.0;
  for (const auto& target : all) total += BruteForceCtc(probs, 2, 2, target);
  CHECK(std::abs(total - 1.0) < 1e-9);
  CHECK(BruteForceCtc(probs, 2, 2, {1}) == BruteForceCtc(probs, 2, 2, {1}));
  std::vector<double> big(13 * 3, 1.0 / 3);
  CHECK_THROWS_AS(BruteForceCtc(big, 13, 3, {1}), UsageError);
}

TEST_CASE("ctc infeasible target is its own error") {
  auto lp = DiffArray::FromData({2, 2}, {std::log(0.5), std::log(0.5), std::log(0.5), std::log(0.5)});
  CHECK(CtcMinFrames({1, 1}) == 3);
  CHECK_THROWS_AS(CtcLoss(lp, {1, 1}), InfeasibleError);
  CHECK_NOTHROW(CtcLoss(lp, {1}));
  CHECK_THROWS_AS(CtcLoss(lp, {0}), DimensionError);
}

TEST_CASE("ctc probability lies in (0, 1] and gradient matches finite differences") {
  Rng rng(77);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t t = 4 + rng.Index(5);
    auto logits = RandomLogits(t, 4, rng, true);
    TokenSequence target = RandomTarget(3, 4, rng);
    if (CtcMinFrames(target) > t) continue;
    const double loss = CtcLoss(LogSoftmax(logits), target).item();
    CHECK(std::exp(-loss) > 0.0);
    CHECK(std::exp(-loss) <= 1.0);
    auto r = GradCheck([&] { return CtcLoss(LogSoftmax(logits), target); }, {logits});
    CHECK(r.max_rel_err < 1e-4);
  }
}

TEST_CASE("greedy decode collapse rules") {
  auto onehot = [](std::vector<int> path, std::size_t v) {
    std::vector<double> x(path.size() * v, -5.0);
    for (std::size_t t = 0; t < path.size(); ++t) x[t * v + static_cast<std::size_t>(path[t])] = 0.0;
    return DiffArray::FromData({path.size(), v}, x);
  };
  CHECK(GreedyDecode(onehot({1, 1, 0, 2}, 3)) == TokenSequence{1, 2});
  CHECK(GreedyDecode(onehot({0, 0, 0}, 3)).empty());
  CHECK(GreedyDecode(onehot({1, 0, 1}, 3)) == TokenSequence{1, 1});
  // Ties resolve to the lowest index, i.e. blank.
  CHECK(GreedyDecode(DiffArray::FromData({1, 3}, {0.0, 0.0, -1.0})).empty());
}
