// tests/unit/pipelines_test.cc

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
#include <sstream>

#include "doctest.h"
#include "sdadapt/base/digest.h"
#include "sdadapt/base/error.h"
#include "sdadapt/pipelines/experiment.h"
#include "sdadapt/pipelines/optimizer.h"
#include "sdadapt/pipelines/pipelines.h"
#include "test_util.h"

using namespace sdadapt;

namespace {

CorpusConfig SmallCorpus(SplitMode mode = SplitMode::kBlockOverlap) {
  CorpusConfig c;
  c.n_train_speakers = 8;
  c.n_test_speakers = 4;
  c.utterances_per_speaker = 4;
  c.test_utterances_per_speaker = 4;
  c.max_words = 3;
  c.split_mode = mode;
  c.rng_seed = 5;
  return c;
}

BackboneConfig SmallBackbone() {
  BackboneConfig b = testing::TinyConfig();
  b.conv_layers = {{8, 64, 32}, {8, 4, 4}};
  b.vocab_size = 41;
  return b;
}

TrainConfig QuickTrain() {
  TrainConfig t;
  t.baseline = {1, 2e-3, {}};
  t.aft_stage1 = {1, 1e-3, {}};
  t.aft_stage2 = {1, 1e-3, {}};
  t.tta_stage1 = {1, 3e-4, {}};
  t.tta_stage2 = {1, 3e-4, {}};
  t.batch_size = 4;
  return t;
}

AdapterSpec Structured() {
  AdapterSpec s;
  s.arch = AdapterArch::kStructuredRab;
  s.granularity = LabelGranularity::kSpeakerPlusDeficiency;
  s.positions = {InsertionPoint::AfterCnnEncoder(), InsertionPoint::AfterCnnEncoder()};
  s.bottleneck_k = 4;
  return s;
}

AdapterSpec SpeakerRab() {
  AdapterSpec s;
  s.granularity = LabelGranularity::kSpeaker;
  s.bottleneck_k = 4;
  return s;
}

std::uint64_t BankDigest(const AdapterBank& bank, ConditionKey::Kind kind) {
  Digest d;
  for (const auto& [key, entry] : bank.entries()) {
    if (key.kind == kind) {
      d.Update(key.ToString());
      d.Update(entry.Digest());
    }
  }
  return d.value();
}

struct Fixture {
  Corpus corpus = GenerateCorpus(SmallCorpus());
  BackboneModel init{SmallBackbone()};
};

}  // namespace

TEST_CASE("glob matching") {
  CHECK(GlobMatch("*", "conv.0.kernel"));
  CHECK(GlobMatch("block.*", "block.1.attn.wq"));
  CHECK_FALSE(GlobMatch("block.*", "conv.0.kernel"));
  CHECK(GlobMatch("adapter.defi:*", "adapter.defi:VL.p_up"));
  CHECK(GlobMatch("conv.?.bias", "conv.1.bias"));
  CHECK_FALSE(GlobMatch("conv.?.bias", "conv.10.bias"));
  CHECK(GlobMatch("", ""));
  CHECK_FALSE(GlobMatch("", "x"));
}

TEST_CASE("train config validation and json") {
  TrainConfig t;
  CHECK_NOTHROW(t.Validate());
  nlohmann::json j = t;
  CHECK(j.get<TrainConfig>() == t);
  t.tta_stage1.step_size = 0.0;
  CHECK_THROWS_AS(t.Validate(), ConfigError);
  t = TrainConfig{};
  t.baseline.epochs = 0;
  CHECK_THROWS_AS(t.Validate(), ConfigError);
  t = TrainConfig{};
  t.batch_size = 0;
  CHECK_THROWS_AS(t.Validate(), ConfigError);
  CHECK_THROWS_AS(ParseOptimizerKind("rmsprop"), ParseError);
  CHECK(ParseSupervision("gt") == Supervision::kGroundTruth);
  CHECK(ParseSupervision("pseudo") == Supervision::kPseudoLabel);
  CHECK_THROWS_AS(ParseSupervision("oracle"), ParseError);
}

TEST_CASE("optimizer steps") {
  TrainConfig t;
  std::vector<NamedParameter> params = {{"w", DiffArray::FromData({2}, {1.0, -1.0}, true)}};
  params[0].value.mutable_grad()[0] = 0.5;
  params[0].value.mutable_grad()[1] = -2.0;

  SUBCASE("first moment-estimation step moves each coordinate by about the step size") {
    Optimizer opt(t, 0.1);
    opt.Step(params, 1.0);
    CHECK(params[0].value.at(0) == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(params[0].value.at(1) == doctest::Approx(-0.9).epsilon(1e-6));
    CHECK_FALSE(params[0].value.has_grad());
  }
  SUBCASE("sgd with clipping scales the joint gradient to the clip norm") {
    t.optimizer = OptimizerKind::kSgd;
    t.grad_clip_norm = 1.0;
    Optimizer opt(t, 1.0);
    const double norm = opt.Step(params, 1.0);
    CHECK(norm == doctest::Approx(std::sqrt(0.25 + 4.0)));
    CHECK(params[0].value.at(0) == doctest::Approx(1.0 - 0.5 / norm));
    CHECK(params[0].value.at(1) == doctest::Approx(-1.0 + 2.0 / norm));
  }
  SUBCASE("parameters without gradients are untouched") {
    params.push_back({"v", DiffArray::FromData({1}, {3.0}, true)});
    Optimizer opt(t, 0.1);
    opt.Step(params, 1.0);
    CHECK(params[1].value.at(0) == 3.0);
  }
}

TEST_CASE("baseline fine-tuning contracts") {
  Fixture f;
  TrainConfig t = QuickTrain();

  SUBCASE("freezing every parameter leaves the model bit-identical") {
    t.baseline.freeze = {"*"};
    const BackboneModel out = FinetuneBaseline(f.init, f.corpus.train, t);
    CHECK(out.Digest() == f.init.Digest());
  }
  SUBCASE("deterministic given the seed, and training changes the model") {
    const BackboneModel a = FinetuneBaseline(f.init, f.corpus.train, t);
    const BackboneModel b = FinetuneBaseline(f.init, f.corpus.train, t);
    CHECK(a.Digest() == b.Digest());
    CHECK(a.Digest() != f.init.Digest());
  }
  SUBCASE("partial freeze keeps the matching parameters") {
    t.baseline.freeze = {"conv.*"};
    const BackboneModel out = FinetuneBaseline(f.init, f.corpus.train, t);
    for (const auto& p : out.parameters()) {
      const bool same = p.value.data()[0] == f.init.param(p.name).data()[0];
      if (GlobMatch("conv.*", p.name)) CHECK(same);
    }
    CHECK(out.Digest() != f.init.Digest());
  }
  SUBCASE("the log records one loss per epoch") {
    t.baseline.epochs = 2;
    t.heldout_fraction = 0.2;
    PhaseLog log;
    FinetuneBaseline(f.init, f.corpus.train, t, &log);
    CHECK(log.epoch_loss.size() == 2);
    CHECK(log.heldout_ter.size() == 2);
    for (double l : log.epoch_loss) CHECK(std::isfinite(l));
  }
}

TEST_CASE("adaptive fine-tuning stage isolation") {
  Fixture f;
  const TrainConfig t = QuickTrain();

  const AftResult s = AdaptiveFinetune(f.init, Structured(), f.corpus.train, t);
  CHECK(s.deficiency_digest_before_stage2 == s.deficiency_digest_after_stage2);
  CHECK(s.deficiency_digest_after_stage2 == BankDigest(s.bank, ConditionKey::Kind::kDeficiency));
  std::set<std::string> speakers, severities;
  for (const auto& u : f.corpus.train) {
    speakers.insert(u.meta.speaker_id);
    severities.insert(ToString(u.meta.severity));
  }
  for (const auto& spk : speakers) CHECK(s.bank.Contains(ConditionKey::Speaker(spk)));
  for (const auto& sev : severities) CHECK(s.bank.Contains(ConditionKey::Deficiency(sev)));
  CHECK(s.bank.size() == speakers.size() + severities.size());
  CHECK(s.model.Digest() != f.init.Digest());

  const AftResult k = AdaptiveFinetune(f.init, SpeakerRab(), f.corpus.train, t);
  for (const auto& key : k.bank.Keys()) CHECK(key.kind == ConditionKey::Kind::kSpeaker);
  CHECK(k.bank.size() == speakers.size());

  const AftResult again = AdaptiveFinetune(f.init, Structured(), f.corpus.train, t);
  CHECK(again.model.Digest() == s.model.Digest());
  CHECK(BankDigest(again.bank, ConditionKey::Kind::kSpeaker) == BankDigest(s.bank, ConditionKey::Kind::kSpeaker));
}

TEST_CASE("test-time adaptation contracts") {
  Fixture f;
  TrainConfig t = QuickTrain();
  const BackboneModel base = FinetuneBaseline(f.init, f.corpus.train, t);
  const SeverityMap truth = TrueSeverities(f.corpus.test);
  const auto plain = DecodeAll(base, f.corpus.test);
  const SupervisionMode pseudo{Supervision::kPseudoLabel, &base, nullptr};

  SUBCASE("backbone is frozen and adapters are created per test speaker") {
    const TtaResult r = TestTimeAdapt(base, AdapterBank{}, Structured(), f.corpus.test, truth,
                                      SupervisionMode{Supervision::kGroundTruth, nullptr, nullptr}, t);
    CHECK(r.backbone_digest_before == r.backbone_digest_after);
    CHECK(r.backbone_digest_after == base.Digest());
    CHECK(r.hyps.size() == f.corpus.test.size());
    for (const auto& [spk, sev] : truth) {
      CHECK(r.bank.Contains(ConditionKey::Speaker(spk)));
      CHECK(r.bank.Contains(ConditionKey::Deficiency(ToString(sev))));
    }
    CHECK(r.skipped == 0);
  }
  SUBCASE("zero epochs decode bit-identically to the un-adapted model") {
    t.tta_stage1.epochs = 0;
    t.tta_stage2.epochs = 0;
    for (const auto& spec : {Structured(), SpeakerRab()}) {
      const TtaResult r = TestTimeAdapt(base, AdapterBank{}, spec, f.corpus.test, truth, pseudo, t);
      CHECK(r.hyps == plain);
    }
  }
  SUBCASE("cached pseudo-labels give the same result as decoding") {
    std::map<std::string, TokenSequence> cache;
    for (std::size_t i = 0; i < f.corpus.test.size(); ++i) cache[f.corpus.test[i].meta.utt_id] = plain[i];
    const auto a = TestTimeAdapt(base, AdapterBank{}, SpeakerRab(), f.corpus.test, truth, pseudo, t);
    const auto b = TestTimeAdapt(base, AdapterBank{}, SpeakerRab(), f.corpus.test, truth,
                                 SupervisionMode{Supervision::kPseudoLabel, &base, &cache}, t);
    CHECK(a.hyps == b.hyps);
    CHECK(BankDigest(a.bank, ConditionKey::Kind::kSpeaker) == BankDigest(b.bank, ConditionKey::Kind::kSpeaker));
  }
  SUBCASE("pseudo-label supervision needs a decoder") {
    CHECK_THROWS_AS(TestTimeAdapt(base, AdapterBank{}, SpeakerRab(), f.corpus.test, truth,
                                  SupervisionMode{Supervision::kPseudoLabel, nullptr, nullptr}, t),
                    UsageError);
  }
  SUBCASE("threaded decoding matches single-threaded decoding") {
    CHECK(DecodeAll(base, f.corpus.test, nullptr, nullptr, nullptr, 3) == plain);
    CHECK_THROWS_AS(DecodeAll(base, f.corpus.test, nullptr, nullptr, nullptr, 0), UsageError);
  }
}

TEST_CASE("baseline loss decreases over the first three epochs on the default corpus") {
  const Corpus corpus = GenerateCorpus(CorpusConfig{});
  TrainConfig t;
  t.baseline.epochs = 3;
  PhaseLog log;
  FinetuneBaseline(BackboneModel(BackboneConfig{}), corpus.train, t, &log);
  REQUIRE(log.epoch_loss.size() == 3);
  CHECK(log.epoch_loss[1] < log.epoch_loss[0]);
  CHECK(log.epoch_loss[2] < log.epoch_loss[1]);
}

TEST_CASE("experiment configuration") {
  ExperimentConfig cfg;
  CHECK_NOTHROW(cfg.Validate());
  REQUIRE(cfg.systems.size() == 11);
  std::vector<std::string> ids;
  for (const auto& r : cfg.systems) ids.push_back(r.id);
  CHECK(ids == std::vector<std::string>{"1", "2", "2*", "3", "4", "5", "6", "7", "8", "9", "9*"});
  // AFT and non-AFT variants exist for each RAB label.
  for (auto g : {LabelGranularity::kSpeaker, LabelGranularity::kDeficiency, LabelGranularity::kSpeakerPlusDeficiency}) {
    std::set<bool> afts;
    for (const auto& r : cfg.systems) {
      if (r.spec && r.spec->granularity == g && r.supervision == Supervision::kPseudoLabel) afts.insert(r.aft);
    }
    CHECK(afts == std::set<bool>{false, true});
  }
  CHECK(FindSystem(cfg, "9*").supervision == Supervision::kGroundTruth);
  CHECK_THROWS_AS(FindSystem(cfg, "10"), UsageError);

  nlohmann::json j = cfg;
  const auto back = j.get<ExperimentConfig>();
  CHECK(nlohmann::json(back) == j);
  CHECK(cfg.ForSeed(7).corpus.rng_seed == 7);
  CHECK(cfg.ForSeed(7).train.rng_seed == 7);
  CHECK(cfg.ForSeed(7).backbone.init_seed == 7);

  auto bad = cfg;
  bad.seeds.clear();
  CHECK_THROWS_AS(bad.Validate(), ConfigError);
  bad = cfg;
  bad.systems.push_back(bad.systems.front());
  CHECK_THROWS_AS(bad.Validate(), ConfigError);
  bad = cfg;
  bad.systems.front().aft = true;
  CHECK_THROWS_AS(bad.Validate(), ConfigError);
}

TEST_CASE("results table bookkeeping") {
  ExperimentConfig cfg;
  cfg.systems = {cfg.systems[0], cfg.systems[4], cfg.systems[9]};  // 1, 4, 9
  std::vector<SeedResult> runs;
  const TokenSequence ref = {1, 2, 3};
  for (std::uint64_t seed : {1, 2}) {
    SeedResult run;
    run.seed = seed;
    for (const auto& row : cfg.systems) {
      SystemResult r;
      r.system_id = row.id;
      r.seed = seed;
      for (int u = 0; u < 40; ++u) {
        ManifestEntry m;
        m.utt_id = "u" + std::to_string(u);
        m.speaker_id = "S0" + std::to_string(u % 4);
        m.severity = kAllSeverities[u % 4];
        m.words = ref;
        // System 1 gets one substitution on every utterance, system 4 on
        // every other one, system 9 on every fourth one.
        const int period = row.id == "1" ? 1 : row.id == "4" ? 2 : 4;
        TokenSequence hyp = ref;
        if (u % period == 0) hyp[0] = 4;
        r.scores.push_back(Score(m, hyp));
      }
      r.n_adapter_params = row.spec ? 100 : 0;
      run.systems.push_back(r);
    }
    runs.push_back(run);
  }

  const std::string csv = ResultsCsv(cfg, runs);
  std::istringstream in(csv);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  REQUIRE(lines.size() == 1 + 3 * 2 + 3);
  CHECK(lines[0] ==
        "seed,system_id,adapt_arch,adapt_label,aft,supervision,wer_overall,wer_VL,wer_L,wer_M,wer_H,wer_seen,"
        "wer_unseen,n_adapter_params");
  CHECK(lines[1] == "1,1,none,none,false,none,33.33,33.33,33.33,33.33,33.33,33.33,,0");
  CHECK(lines.back().rfind("mean,9,srab,spk+defi,true,pseudo,8.33,", 0) == 0);
  CHECK(csv == ResultsCsv(cfg, runs));

  CHECK(MeanTer(runs, "4") == doctest::Approx(16.67).epsilon(1e-3));
  CHECK(PooledScores(runs, "9").size() == 80);

  const auto reports = MatrixSignificance(cfg, runs);
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& r : reports) pairs.emplace(r.at("system_a"), r.at("system_b"));
  CHECK(pairs == std::set<std::pair<std::string, std::string>>{{"4", "1"}, {"9", "1"}});
  for (const auto& r : reports) CHECK(r.at("significant").get<bool>());
}
