// tests/unit/backbone_test.cc

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
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "sdadapt/adapters/adapters.h"
#include "sdadapt/backbone/checkpoint.h"
#include "sdadapt/backbone/model.h"
#include "sdadapt/base/error.h"
#include "sdadapt/ctc/ctc.h"
#include "sdadapt/diffcore/gradcheck.h"
#include "sdadapt/diffcore/ops.h"
#include "test_util.h"

using namespace sdadapt;
using sdadapt::testing::RandomWave;
using sdadapt::testing::TinyConfig;

namespace {

AdapterSpec MakeSpec(AdapterArch arch, LabelGranularity g, std::vector<int> pos) {
  AdapterSpec s;
  s.arch = arch;
  s.granularity = g;
  s.positions.clear();
  for (int p : pos) s.positions.push_back(InsertionPoint::FromTableIndex(p));
  if (arch == AdapterArch::kLhuc || arch == AdapterArch::kHub) s.bottleneck_k.reset();
  else s.bottleneck_k = 4;
  return s;
}

// Fills every adapter array with small random values so gradients are not
// evaluated at the degenerate identity point.
void Perturb(AdapterBank& bank, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& [name, a] : bank.NamedParameters()) {
    for (double& x : a.mutable_data()) x += 0.3 * rng.Normal();
  }
}

std::filesystem::path TempPath(const std::string& leaf) {
  return std::filesystem::temp_directory_path() / ("sdadapt_" + std::to_string(::getpid()) + "_" + leaf);
}

}  // namespace

TEST_CASE("encode output shape and normalisation") {
  BackboneConfig cfg = TinyConfig();
  cfg.conv_layers = {{8, 8, 4}, {8, 8, 4}, {8, 8, 4}};
  BackboneModel model(cfg);
  auto wave = RandomWave(4000, 1);
  auto lp = Encode(model, wave, {}, false, nullptr);
  // 4000 / 64 = 62.5, the kernel overhang costs one frame.
  CHECK(lp.dim(0) == cfg.OutputFrames(4000));
  CHECK(std::abs(static_cast<long>(lp.dim(0)) - 62) <= 1);
  CHECK(lp.dim(1) == cfg.vocab_size);
  for (std::size_t t = 0; t < lp.dim(0); ++t) {
    double s = 0.0;
    for (std::size_t v = 0; v < lp.dim(1); ++v) s += std::exp(lp.at(t, v));
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(Encode(model, std::vector<double>(cfg.MinSamples() - 1, 0.1), {}, false, nullptr),
                  InputError);
  CHECK(cfg.OutputFrames(cfg.MinSamples()) == 1);
}

TEST_CASE("fresh adapters leave the backbone output unchanged") {
  BackboneModel model(TinyConfig());
  auto wave = RandomWave(900, 2);
  auto plain = Encode(model, wave, {}, false, nullptr);
  for (auto arch : {AdapterArch::kLhuc, AdapterArch::kHub, AdapterArch::kRab}) {
    for (int pos : {0, 1, 2}) {
      AdapterBank bank;
      Rng rng(5);
      auto spec = MakeSpec(arch, LabelGranularity::kSpeaker, {pos});
      bank.CreateEntry(ConditionKey::Speaker("S01"), spec.positions[0],
                       WidthAt(model.config(), spec.positions[0]), spec, rng);
      auto out = Encode(model, wave, Resolve(spec, bank, "S01", "H"), false, nullptr);
      CHECK(std::equal(out.data().begin(), out.data().end(), plain.data().begin()));
    }
  }
}

TEST_CASE("encode matches a hand-assembled pre-norm pipeline") {
  BackboneConfig cfg = TinyConfig();
  cfg.n_blocks = 1;
  cfg.n_heads = 1;
  BackboneModel model(cfg);
  auto wave = RandomWave(700, 3);
  auto lp = Encode(model, wave, {}, false, nullptr);

  double mean = 0.0, var = 0.0;
  for (double s : wave) mean += s;
  mean /= wave.size();
  for (double s : wave) var += (s - mean) * (s - mean);
  var /= wave.size();
  std::vector<double> n(wave.size());
  for (std::size_t i = 0; i < n.size(); ++i) n[i] = (wave[i] - mean) / std::sqrt(var + 1e-7);
  auto P = [&](const char* name) { return model.param(name); };
  auto lin = [&](const DiffArray& x, const char* w, const char* b) { return AddRow(MatMul(x, Transpose(P(w))), P(b)); };
  DiffArray h = DiffArray::FromData({n.size(), 1}, n);
  h = Gelu(Conv1d(h, P("conv.0.kernel"), P("conv.0.bias"), 8));
  h = Gelu(Conv1d(h, P("conv.1.kernel"), P("conv.1.bias"), 2));
  h = lin(LayerNorm(h, P("feature.ln.gamma"), P("feature.ln.beta"), cfg.ln_eps), "feature.proj.weight",
          "feature.proj.bias");
  h = Add(h, DiffArray::FromData(h.shape(), SinusoidalPositions(h.dim(0), cfg.d_model)));
  auto a = LayerNorm(h, P("block.0.ln1.gamma"), P("block.0.ln1.beta"), cfg.ln_eps);
  auto q = lin(a, "block.0.attn.wq", "block.0.attn.bq");
  auto k = lin(a, "block.0.attn.wk", "block.0.attn.bk");
  auto v = lin(a, "block.0.attn.wv", "block.0.attn.bv");
  auto att = MatMul(Softmax(Scale(MatMul(q, Transpose(k)), 1.0 / std::sqrt(16.0))), v);
  auto y = Add(h, lin(att, "block.0.attn.wo", "block.0.attn.bo"));
  auto f = LayerNorm(y, P("block.0.ln2.gamma"), P("block.0.ln2.beta"), cfg.ln_eps);
  h = Add(y, lin(Gelu(lin(f, "block.0.ffn.w1", "block.0.ffn.b1")), "block.0.ffn.w2", "block.0.ffn.b2"));
  h = LayerNorm(h, P("final_ln.gamma"), P("final_ln.beta"), cfg.ln_eps);
  auto expect = LogSoftmax(lin(h, "ctc_head.weight", "ctc_head.bias"));
  REQUIRE(expect.shape() == lp.shape());
  double worst = 0.0;
  for (std::size_t i = 0; i < lp.size(); ++i) worst = std::max(worst, std::abs(lp.at(i) - expect.at(i)));
  CHECK(worst < 1e-10);
}

TEST_CASE("dropout only in training mode") {
  BackboneModel model(TinyConfig());
  auto wave = RandomWave(800, 4);
  auto e1 = Encode(model, wave, {}, false, nullptr);
  auto e2 = Encode(model, wave, {}, false, nullptr);
  CHECK(std::equal(e1.data().begin(), e1.data().end(), e2.data().begin()));
  Rng r1(9), r2(9);
  auto t1 = Encode(model, wave, {}, true, &r1);
  auto t2 = Encode(model, wave, {}, true, &r2);
  CHECK(std::equal(t1.data().begin(), t1.data().end(), t2.data().begin()));
  CHECK_FALSE(std::equal(t1.data().begin(), t1.data().end(), e1.data().begin()));
  CHECK_THROWS_AS(Encode(model, wave, {}, true, nullptr), UsageError);
}

TEST_CASE("named parameters are stable and partitioned") {
  BackboneModel model(TinyConfig());
  AdapterBank bank;
  Rng rng(1);
  auto spec = MakeSpec(AdapterArch::kRab, LabelGranularity::kSpeaker, {1});
  bank.CreateEntry(ConditionKey::Speaker("S01"), spec.positions[0], 16, spec, rng);
  auto a = NamedParameters(model, &bank, ParamFilter::kAll);
  auto b = NamedParameters(model, &bank, ParamFilter::kAll);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].name == b[i].name);
  auto backbone = NamedParameters(model, &bank, ParamFilter::kBackboneOnly);
  CHECK(a.size() == backbone.size() + 4);
  CHECK(a.back().name.rfind("adapter.spk:S01.", 0) == 0);
  CHECK(backbone.front().name == "conv.0.kernel");
  CHECK(backbone.back().name == "ctc_head.bias");
  CHECK(model.HasParam("block.1.ffn.w2"));
  CHECK_FALSE(model.HasParam("block.2.ffn.w2"));
}

TEST_CASE("insertion point validation") {
  auto cfg = TinyConfig();
  CHECK_NOTHROW(InsertionPoint::FromTableIndex(2).Validate(cfg));
  CHECK_THROWS_AS(InsertionPoint::FromTableIndex(3).Validate(cfg), ConfigError);
  CHECK(InsertionPoint::FromTableIndex(0) == InsertionPoint::AfterCnnEncoder());
  CHECK(InsertionPoint::FromTableIndex(1) == InsertionPoint::InBlock(0));
  CHECK(InsertionPoint::InBlock(1).TableIndex() == 2);
  CHECK(WidthAt(cfg, InsertionPoint::AfterCnnEncoder()) == cfg.EncoderWidth());
  CHECK(WidthAt(cfg, InsertionPoint::InBlock(0)) == cfg.d_model);

  BackboneModel model(cfg);
  AdapterBank bank;
  Rng rng(1);
  auto spec = MakeSpec(AdapterArch::kLhuc, LabelGranularity::kSpeaker, {1});
  bank.CreateEntry(ConditionKey::Speaker("S01"), spec.positions[0], 7, spec, rng);
  CHECK_THROWS_AS(Encode(model, RandomWave(800, 1), Resolve(spec, bank, "S01", "H"), false, nullptr),
                  ConfigError);
}

TEST_CASE("ctc through the full model passes a gradient check") {
  auto cfg = TinyConfig();
  cfg.dropout_p = 0.0;
  BackboneModel model(cfg);
  auto wave = RandomWave(600, 6);
  const TokenSequence target = {1, 3, 3, 2};

  struct Case {
    AdapterArch arch;
    LabelGranularity g;
    std::vector<int> pos;
  };
  const std::vector<Case> cases = {
      {AdapterArch::kLhuc, LabelGranularity::kSpeaker, {0}},
      {AdapterArch::kHub, LabelGranularity::kSpeaker, {2}},
      {AdapterArch::kRab, LabelGranularity::kDeficiency, {1}},
      {AdapterArch::kStructuredRab, LabelGranularity::kSpeakerPlusDeficiency, {0, 0}},
      {AdapterArch::kStructuredRab, LabelGranularity::kSpeakerPlusDeficiency, {0, 2}},
  };
  for (const auto& c : cases) {
    CAPTURE(ToString(c.arch));
    AdapterBank bank;
    Rng rng(11);
    auto spec = MakeSpec(c.arch, c.g, c.pos);
    if (spec.UsesDeficiency()) {
      bank.CreateEntry(ConditionKey::Deficiency("VL"), spec.DeficiencyPoint(),
                       WidthAt(cfg, spec.DeficiencyPoint()), spec, rng);
    }
    if (spec.UsesSpeaker()) {
      bank.CreateEntry(ConditionKey::Speaker("S05"), spec.SpeakerPoint(), WidthAt(cfg, spec.SpeakerPoint()),
                       spec, rng);
    }
    Perturb(bank, 13);
    auto stack = Resolve(spec, bank, "S05", "VL");
    std::vector<DiffArray> params;
    for (auto& [name, a] : bank.NamedParameters()) params.push_back(a);
    params.push_back(model.param("block.0.attn.wq"));
    params.push_back(model.param("conv.0.kernel"));
    params.push_back(model.param("feature.ln.gamma"));
    GradCheckOptions opts;
    opts.max_entries_per_param = 12;
    auto r = GradCheck([&] { return CtcLoss(Encode(model, wave, stack, false, nullptr), target); }, params, opts);
    CHECK(r.max_rel_err < 1e-4);
  }
}

TEST_CASE("checkpoint round trip and corruption") {
  BackboneModel model(TinyConfig());
  AdapterBank bank;
  Rng rng(2);
  auto spec = MakeSpec(AdapterArch::kStructuredRab, LabelGranularity::kSpeakerPlusDeficiency, {0, 2});
  bank.CreateEntry(ConditionKey::Deficiency("L"), spec.DeficiencyPoint(), 8, spec, rng);
  bank.CreateEntry(ConditionKey::Speaker("S02"), spec.SpeakerPoint(), 16, spec, rng);
  Perturb(bank, 3);
  const auto path = TempPath("ckpt.bin");
  SaveCheckpoint(path.string(), model, bank, {{"note", "x"}});
  auto ck = LoadCheckpoint(path.string());
  CHECK(ck.model.Digest() == model.Digest());
  CHECK(ck.model.config() == model.config());
  CHECK(ck.extra.at("note") == "x");
  auto wave = RandomWave(800, 8);
  auto a = Encode(model, wave, Resolve(spec, bank, "S02", "L"), false, nullptr);
  auto b = Encode(ck.model, wave, Resolve(spec, ck.bank, "S02", "L"), false, nullptr);
  CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin()));

  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 5);
  CHECK_THROWS_AS(LoadCheckpoint(path.string()), CorruptFileError);

  SaveCheckpoint(path.string(), model, bank);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-3, std::ios::end);
    f.put('\x7f');
  }
  CHECK_THROWS_AS(LoadCheckpoint(path.string()), CorruptFileError);
  {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << "NOTACKPTxxxxxxxxxxxxxxxxxxxx";
  }
  CHECK_THROWS_AS(LoadCheckpoint(path.string()), CorruptFileError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(LoadCheckpoint(path.string()), IoError);
}

TEST_CASE("clone is independent") {
  BackboneModel model(TinyConfig());
  auto copy = model.Clone();
  CHECK(copy.Digest() == model.Digest());
  const auto& bias = copy.param("ctc_head.bias");
  std::vector<double> v(bias.data().begin(), bias.data().end());
  v[0] += 1.0;
  copy.SetParameter("ctc_head.bias", bias.shape(), v);
  CHECK(copy.Digest() != model.Digest());
}
