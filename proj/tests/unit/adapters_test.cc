// tests/unit/adapters_test.cc

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
#include <set>

#include "doctest.h"
#include "sdadapt/adapters/adapters.h"
#include "sdadapt/base/error.h"
#include "sdadapt/diffcore/gradcheck.h"
#include "sdadapt/diffcore/ops.h"

using namespace sdadapt;

namespace {

DiffArray Rand(Shape s, Rng& rng, bool grad = false) {
  std::vector<double> v(ShapeSize(s));
  for (double& x : v) x = rng.Normal();
  return DiffArray::FromData(std::move(s), std::move(v), grad);
}

RabParams RandomRab(std::size_t m, std::size_t k, Rng& rng, bool grad = false) {
  return {Rand({k, m}, rng, grad), Rand({m, k}, rng, grad), Rand({m}, rng, grad), Rand({m}, rng, grad)};
}

bool SameValues(const DiffArray& a, const DiffArray& b) {
  return a.shape() == b.shape() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

AdapterSpec Spec(AdapterArch arch, LabelGranularity g, std::vector<int> pos = {0}) {
  AdapterSpec s;
  s.arch = arch;
  s.granularity = g;
  s.positions.clear();
  for (int p : pos) s.positions.push_back(InsertionPoint::FromTableIndex(p));
  if (arch == AdapterArch::kLhuc || arch == AdapterArch::kHub) s.bottleneck_k.reset();
  return s;
}

}  // namespace

TEST_CASE("lhuc") {
  Rng rng(1);
  auto h = Rand({3, 4}, rng);
  CHECK(SameValues(ApplyLhuc(h, DiffArray::Zeros({4})), h));

  auto r = Rand({4}, rng);
  auto scale = Scale(Sigmoid(r), 2.0);
  for (double s : scale.data()) {
    CHECK(s > 0.0);
    CHECK(s < 2.0);
  }
  // 2σ(ln 3) = 1.5
  auto out = ApplyLhuc(DiffArray::FromData({1, 2}, {1, -2}),
                       DiffArray::FromData({2}, {std::log(3.0), std::log(3.0)}));
  CHECK(out.at(0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(out.at(1) == doctest::Approx(-3.0).epsilon(1e-15));
  CHECK_THROWS_AS(ApplyLhuc(h, DiffArray::Zeros({3})), DimensionError);
}

TEST_CASE("hub") {
  Rng rng(2);
  auto h = Rand({2, 3}, rng);
  CHECK(SameValues(ApplyHub(h, DiffArray::Zeros({3})), h));
  auto out = ApplyHub(DiffArray::FromData({1, 2}, {1, 2}), DiffArray::FromData({2}, {-1, 1}));
  CHECK(out.at(0) == 0.0);
  CHECK(out.at(1) == 3.0);
  auto r = Rand({3}, rng);
  auto back = ApplyHub(ApplyHub(h, r), Scale(r, -1.0));
  for (std::size_t i = 0; i < h.size(); ++i) CHECK(std::abs(back.at(i) - h.at(i)) < 1e-15);
  CHECK_THROWS_AS(ApplyHub(h, DiffArray::Zeros({2})), DimensionError);
}

TEST_CASE("rab identity at initialization and hand-evaluated case") {
  Rng rng(3);
  AdapterBank bank;
  auto spec = Spec(AdapterArch::kRab, LabelGranularity::kSpeaker);
  const auto& e = bank.CreateEntry(ConditionKey::Speaker("S01"), spec.positions[0], 6, spec, rng);
  auto h = Rand({4, 6}, rng);
  CHECK(SameValues(ApplyRab(h, std::get<RabParams>(e.params), 0.1, nullptr, false), h));

  RabParams theta{DiffArray::FromData({1, 2}, {1, 1}), DiffArray::FromData({2, 1}, {1, 0}),
                  DiffArray::FromData({2}, {1, 1}), DiffArray::FromData({2}, {0, 0})};
  // inner = ζ(2) > 0, LN([ζ(2), 0]) = [1, −1], so output = [1,1] + [1,−1].
  auto out = ApplyRab(DiffArray::FromData({1, 2}, {1, 1}), theta, 0.0, nullptr, false, 1e-14);
  CHECK(out.at(0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(out.at(1)) < 1e-12);
  CHECK_THROWS_AS(ApplyRab(Rand({2, 3}, rng), theta, 0.0, nullptr, false), DimensionError);
}

TEST_CASE("rab gradient w.r.t. all four parameter arrays") {
  Rng rng(4);
  auto h = Rand({5, 6}, rng, true);
  auto theta = RandomRab(6, 3, rng, true);
  auto w = Rand({5, 6}, rng);
  auto r = GradCheck([&] { return Sum(Hadamard(ApplyRab(h, theta, 0.0, nullptr, false), w)); },
                     {h, theta.p_down, theta.p_up, theta.ln_gamma, theta.ln_beta});
  CHECK(r.max_rel_err < 1e-4);
}

TEST_CASE("structured cascade") {
  Rng rng(5);
  AdapterBank bank;
  auto spec = Spec(AdapterArch::kStructuredRab, LabelGranularity::kSpeakerPlusDeficiency, {0, 0});
  const auto& sd = bank.CreateEntry(ConditionKey::Deficiency("VL"), spec.positions[0], 6, spec, rng);
  const auto& s = bank.CreateEntry(ConditionKey::Speaker("S05"), spec.positions[1], 6, spec, rng);
  auto h = Rand({3, 6}, rng);
  CHECK(SameValues(ApplyStructured(h, std::get<RabParams>(sd.params), std::get<RabParams>(s.params),
                                   0.1, nullptr, false),
                   h));

  auto theta_sd = RandomRab(6, 2, rng);
  CHECK(SameValues(ApplyStructured(h, theta_sd, std::get<RabParams>(s.params), 0.0, nullptr, false),
                   ApplyRab(h, theta_sd, 0.0, nullptr, false)));

  int differs = 0;
  for (int trial = 0; trial < 10; ++trial) {
    auto a = RandomRab(6, 2, rng);
    auto b = RandomRab(6, 2, rng);
    auto ab = ApplyStructured(h, a, b, 0.0, nullptr, false);
    auto ba = ApplyStructured(h, b, a, 0.0, nullptr, false);
    double diff = 0.0;
    for (std::size_t i = 0; i < ab.size(); ++i) diff = std::max(diff, std::abs(ab.at(i) - ba.at(i)));
    if (diff > 1e-6) ++differs;
  }
  CHECK(differs == 10);
}

TEST_CASE("resolve honours granularity and cascade order") {
  Rng rng(6);
  AdapterBank bank;
  auto global = Spec(AdapterArch::kRab, LabelGranularity::kGlobal);
  bank.CreateEntry(ConditionKey::Global(), global.positions[0], 4, global, rng);
  CHECK(Resolve(global, bank, "S01", "H").size() == 1);
  CHECK(Resolve(global, bank, "S99", "VL").size() == 1);

  auto structured = Spec(AdapterArch::kStructuredRab, LabelGranularity::kSpeakerPlusDeficiency, {0, 2});
  bank.CreateEntry(ConditionKey::Speaker("S05"), structured.SpeakerPoint(), 4, structured, rng);
  bank.CreateEntry(ConditionKey::Deficiency("VL"), structured.DeficiencyPoint(), 4, structured, rng);
  auto stack = Resolve(structured, bank, "S05", "VL");
  REQUIRE(stack.size() == 2);
  CHECK(stack[0].key == ConditionKey::Deficiency("VL"));
  CHECK(stack[1].key == ConditionKey::Speaker("S05"));
  CHECK(stack[0].entry.point == InsertionPoint::AfterCnnEncoder());
  CHECK(stack[1].entry.point == InsertionPoint::InBlock(1));
  CHECK(Resolve(structured, bank, "S05", "VL", ResolveScope::kDeficiencyOnly).size() == 1);

  auto speaker = Spec(AdapterArch::kRab, LabelGranularity::kSpeaker);
  try {
    Resolve(speaker, bank, "S42", "H");
    FAIL("expected ResolutionError");
  } catch (const ResolutionError& e) {
    CHECK(std::string(e.what()).find("spk:S42") != std::string::npos);
  }
}

TEST_CASE("create_entry parameter counts and duplicates") {
  Rng rng(7);
  AdapterBank bank;
  auto lhuc = Spec(AdapterArch::kLhuc, LabelGranularity::kSpeaker);
  auto rab = Spec(AdapterArch::kRab, LabelGranularity::kDeficiency);
  rab.bottleneck_k = 3;
  CHECK(bank.CreateEntry(ConditionKey::Speaker("A"), lhuc.positions[0], 10, lhuc, rng).ParameterCount() == 10);
  CHECK(bank.CreateEntry(ConditionKey::Deficiency("H"), rab.positions[0], 10, rab, rng).ParameterCount() ==
        2 * 3 * 10 + 2 * 10);
  CHECK(bank.ParameterCount() == 10 + 80);
  CHECK_THROWS_AS(bank.CreateEntry(ConditionKey::Speaker("A"), lhuc.positions[0], 10, lhuc, rng), UsageError);
}

TEST_CASE("spec validation and key strings") {
  auto s = Spec(AdapterArch::kStructuredRab, LabelGranularity::kSpeaker, {0, 0});
  CHECK_THROWS_AS(s.Validate(), ConfigError);
  auto lhuc = Spec(AdapterArch::kLhuc, LabelGranularity::kSpeaker);
  lhuc.bottleneck_k = 4;
  CHECK_THROWS_AS(lhuc.Validate(), ConfigError);
  auto rab = Spec(AdapterArch::kRab, LabelGranularity::kSpeaker);
  rab.bottleneck_k.reset();
  CHECK_THROWS_AS(rab.Validate(), ConfigError);

  for (const char* text : {"global", "defi:VL", "spk:S05"}) {
    CHECK(ConditionKey::Parse(text).ToString() == text);
  }
  CHECK_THROWS_AS(ConditionKey::Parse("speaker:S05"), ParseError);

  auto j = nlohmann::json(Spec(AdapterArch::kStructuredRab, LabelGranularity::kSpeakerPlusDeficiency, {0, 2}));
  CHECK(j.get<AdapterSpec>().Name() == "srab/spk+defi@0,2");
}
