// pipelines/pipelines.cc

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

#include "sdadapt/pipelines/pipelines.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <thread>

#include "sdadapt/base/digest.h"
#include "sdadapt/ctc/ctc.h"
#include "sdadapt/eval/eval.h"
#include "sdadapt/pipelines/optimizer.h"

namespace sdadapt {

namespace {

// Sets requires_grad on every parameter of a model/bank pair according to a
// predicate and restores the previous flags on destruction.
class TrainableScope {
 public:
  TrainableScope(std::vector<NamedParameter> all, const std::function<bool(const std::string&)>& trainable)
      : all_(std::move(all)) {
    for (auto& p : all_) {
      saved_.push_back(p.value.requires_grad());
      const bool on = trainable(p.name);
      p.value.set_requires_grad(on);
      if (on) trainable_.push_back(p);
    }
  }
  ~TrainableScope() {
    for (std::size_t i = 0; i < all_.size(); ++i) {
      all_[i].value.clear_grad();
      all_[i].value.set_requires_grad(saved_[i]);
    }
  }
  TrainableScope(const TrainableScope&) = delete;
  TrainableScope& operator=(const TrainableScope&) = delete;

  std::vector<NamedParameter>& trainable() { return trainable_; }

 private:
  std::vector<NamedParameter> all_;
  std::vector<bool> saved_;
  std::vector<NamedParameter> trainable_;
};

std::vector<NamedParameter> AllParameters(const BackboneModel& model, const AdapterBank* bank) {
  return NamedParameters(model, bank, ParamFilter::kAll);
}

bool Frozen(const PhaseConfig& phase, const std::string& name) {
  for (const auto& pat : phase.freeze) {
    if (GlobMatch(pat, name)) return true;
  }
  return false;
}

bool IsAdapter(const std::string& name) { return name.rfind("adapter.", 0) == 0; }

std::string AdapterPrefix(const ConditionKey& key) { return "adapter." + key.ToString() + "."; }

struct Example {
  const Utterance* utt = nullptr;
  TokenSequence target;
  AdapterStack stack;
  // Cached CNN output; only valid while the CNN is frozen.
  DiffArray cnn;
};

bool Feasible(const BackboneModel& model, const Example& ex) {
  if (ex.target.empty()) return false;
  return CtcMinFrames(ex.target) <= model.config().OutputFrames(ex.utt->waveform.size());
}

double TokenErrorRate(const std::vector<const Utterance*>& utts, const std::vector<TokenSequence>& hyps) {
  std::size_t errors = 0, n = 0;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    const auto s = Score(utts[i]->meta.words, hyps[i]);
    errors += s.errors();
    n += s.n_ref_words;
  }
  return n ? 100.0 * static_cast<double>(errors) / static_cast<double>(n) : 0.0;
}

// Runs `phase.epochs` passes of minibatch CTC training over the feasible
// examples, updating the parameters in `trainable`.
PhaseLog RunPhase(const std::string& name, const BackboneModel& model, std::vector<Example> examples,
                  std::vector<NamedParameter>& trainable, const PhaseConfig& phase, const TrainConfig& cfg,
                  Rng& rng, const std::function<double()>& heldout = {}) {
  PhaseLog log;
  log.name = name;
  std::vector<Example> usable;
  for (auto& ex : examples) {
    if (Feasible(model, ex)) {
      usable.push_back(std::move(ex));
    } else {
      ++log.skipped;
    }
  }
  if (usable.empty() || phase.epochs == 0 || trainable.empty()) return log;

  Optimizer opt(cfg, phase.step_size);
  std::vector<std::size_t> order(usable.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < phase.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      for (std::size_t i = start; i < end; ++i) {
        const Example& ex = usable[order[i]];
        DiffArray lp = ex.cnn.defined() ? EncodeFromCnn(model, ex.cnn, ex.stack, true, &rng)
                                        : Encode(model, ex.utt->waveform, ex.stack, true, &rng);
        DiffArray loss = CtcLoss(lp, ex.target);
        const double value = loss.item();
        if (!std::isfinite(value)) {
          throw TrainingError(name + ": non-finite loss on " + ex.utt->meta.utt_id);
        }
        total += value;
        loss.Backward();
      }
      opt.Step(trainable, 1.0 / static_cast<double>(end - start));
    }
    log.epoch_loss.push_back(total / static_cast<double>(usable.size()));
    if (heldout) log.heldout_ter.push_back(heldout());
  }
  return log;
}

std::uint64_t DigestEntries(const AdapterBank& bank, ConditionKey::Kind kind) {
  Digest d;
  for (const auto& [key, entry] : bank.entries()) {
    if (key.kind != kind) continue;
    d.Update(key.ToString());
    d.Update(entry.Digest());
  }
  return d.value();
}

AdapterStack StackFor(const AdapterSpec& spec, const AdapterBank& bank, const Utterance& u,
                      const SeverityMap* severity_of, ResolveScope scope) {
  Severity sev = u.meta.severity;
  if (severity_of) {
    auto it = severity_of->find(u.meta.speaker_id);
    if (it == severity_of->end()) {
      throw ResolutionError("no severity label for speaker " + u.meta.speaker_id);
    }
    sev = it->second;
  }
  return Resolve(spec, bank, u.meta.speaker_id, ToString(sev), scope);
}

}  // namespace

SeverityMap TrueSeverities(const std::vector<Utterance>& utts) {
  SeverityMap out;
  for (const auto& u : utts) out[u.meta.speaker_id] = u.meta.severity;
  return out;
}

std::vector<TokenSequence> DecodeAll(const BackboneModel& model, const std::vector<Utterance>& utts,
                                     const AdapterBank* bank, const AdapterSpec* spec,
                                     const SeverityMap* severity_of, std::size_t threads) {
  if ((bank == nullptr) != (spec == nullptr)) throw UsageError("decode: bank and spec go together");
  if (threads == 0) throw UsageError("decode: threads must be >= 1");
  std::vector<AdapterStack> stacks(utts.size());
  if (spec) {
    for (std::size_t i = 0; i < utts.size(); ++i) {
      stacks[i] = StackFor(*spec, *bank, utts[i], severity_of, ResolveScope::kAll);
    }
  }
  std::vector<TokenSequence> out(utts.size());
  auto work = [&](std::size_t first, std::size_t step) {
    for (std::size_t i = first; i < utts.size(); i += step) {
      out[i] = GreedyDecode(Encode(model, utts[i].waveform, stacks[i], false, nullptr));
    }
  };
  if (threads == 1 || utts.size() < 2) {
    work(0, 1);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        work(t, threads);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

BackboneModel FinetuneBaseline(const BackboneModel& init, const std::vector<Utterance>& train,
                               const TrainConfig& cfg, PhaseLog* log) {
  cfg.Validate();
  BackboneModel model = init.Clone();
  Rng rng(DeriveSeed(cfg.rng_seed, "baseline"));

  // Optional held-out slice for progress logging.
  std::vector<std::size_t> idx(train.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<const Utterance*> heldout;
  std::set<std::size_t> held;
  if (cfg.heldout_fraction > 0.0) {
    Rng split_rng(DeriveSeed(cfg.rng_seed, "heldout"));
    std::shuffle(idx.begin(), idx.end(), split_rng.engine());
    const auto n = static_cast<std::size_t>(std::floor(cfg.heldout_fraction * train.size()));
    for (std::size_t i = 0; i < n; ++i) {
      held.insert(idx[i]);
      heldout.push_back(&train[idx[i]]);
    }
  }
  std::vector<Example> examples;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (!held.count(i)) examples.push_back({&train[i], train[i].meta.words, {}, {}});
  }
  auto heldout_ter = [&]() {
    std::vector<TokenSequence> hyps;
    for (const auto* u : heldout) hyps.push_back(GreedyDecode(Encode(model, u->waveform, {}, false, nullptr)));
    return TokenErrorRate(heldout, hyps);
  };

  TrainableScope scope(AllParameters(model, nullptr),
                       [&](const std::string& n) { return !Frozen(cfg.baseline, n); });
  PhaseLog l = RunPhase("baseline", model, std::move(examples), scope.trainable(), cfg.baseline, cfg, rng,
                        heldout.empty() ? std::function<double()>() : heldout_ter);
  if (log) *log = std::move(l);
  return model;
}

AftResult AdaptiveFinetune(const BackboneModel& baseline, const AdapterSpec& spec,
                           const std::vector<Utterance>& train, const TrainConfig& cfg) {
  cfg.Validate();
  spec.Validate(baseline.config());
  AftResult out{baseline.Clone(), {}, {}, 0, 0};
  BackboneModel& model = out.model;
  AdapterBank& bank = out.bank;
  Rng init_rng(DeriveSeed(cfg.rng_seed, "aft:init:" + spec.Name()));
  Rng rng(DeriveSeed(cfg.rng_seed, "aft:" + spec.Name()));
  const auto& bcfg = model.config();

  const bool stage1 = spec.UsesDeficiency() || spec.granularity == LabelGranularity::kGlobal;
  if (stage1) {
    std::vector<Example> examples;
    for (const auto& u : train) {
      const auto keys = RequiredKeys(spec, u.meta.speaker_id, ToString(u.meta.severity), ResolveScope::kDeficiencyOnly);
      for (const auto& key : keys) {
        if (!bank.Contains(key)) {
          const auto point = PointFor(spec, key);
          bank.CreateEntry(key, point, WidthAt(bcfg, point), spec, init_rng);
        }
      }
    }
    for (const auto& u : train) {
      examples.push_back({&u, u.meta.words, StackFor(spec, bank, u, nullptr, ResolveScope::kDeficiencyOnly), {}});
    }
    TrainableScope scope(AllParameters(model, &bank),
                         [&](const std::string& n) { return !Frozen(cfg.aft_stage1, n); });
    out.logs.push_back(RunPhase("aft_stage1", model, std::move(examples), scope.trainable(), cfg.aft_stage1,
                                cfg, rng));
  }

  out.deficiency_digest_before_stage2 = DigestEntries(bank, ConditionKey::Kind::kDeficiency);
  if (spec.UsesSpeaker()) {
    for (const auto& u : train) {
      const auto key = ConditionKey::Speaker(u.meta.speaker_id);
      if (!bank.Contains(key)) {
        const auto point = PointFor(spec, key);
        bank.CreateEntry(key, point, WidthAt(bcfg, point), spec, init_rng);
      }
    }
    std::vector<Example> examples;
    for (const auto& u : train) {
      examples.push_back({&u, u.meta.words, StackFor(spec, bank, u, nullptr, ResolveScope::kAll), {}});
    }
    // Deficiency and global adapters stay fixed in stage 2.
    TrainableScope scope(AllParameters(model, &bank), [&](const std::string& n) {
      if (Frozen(cfg.aft_stage2, n)) return false;
      if (IsAdapter(n)) return n.rfind("adapter.spk:", 0) == 0;
      return true;
    });
    out.logs.push_back(RunPhase("aft_stage2", model, std::move(examples), scope.trainable(), cfg.aft_stage2,
                                cfg, rng));
  }
  out.deficiency_digest_after_stage2 = DigestEntries(bank, ConditionKey::Kind::kDeficiency);
  return out;
}

std::string ToString(Supervision s) { return s == Supervision::kGroundTruth ? "gt" : "pseudo"; }

Supervision ParseSupervision(const std::string& text) {
  if (text == "gt") return Supervision::kGroundTruth;
  if (text == "pseudo") return Supervision::kPseudoLabel;
  throw ParseError("supervision must be gt or pseudo (got '" + text + "')");
}

TtaResult TestTimeAdapt(const BackboneModel& model, const AdapterBank& bank, const AdapterSpec& spec,
                        const std::vector<Utterance>& test, const SeverityMap& severity_of,
                        const SupervisionMode& supervision, const TrainConfig& cfg) {
  cfg.Validate();
  spec.Validate(model.config());
  TtaResult out;
  out.backbone_digest_before = model.Digest();
  out.bank = bank.Clone();
  AdapterBank& tb = out.bank;
  const auto& bcfg = model.config();
  Rng init_rng(DeriveSeed(cfg.rng_seed, "tta:init:" + spec.Name()));
  Rng rng(DeriveSeed(cfg.rng_seed, "tta:" + spec.Name()));

  // (a) Supervision, produced once before any adaptation.
  std::vector<TokenSequence> targets(test.size());
  if (supervision.mode == Supervision::kGroundTruth) {
    for (std::size_t i = 0; i < test.size(); ++i) targets[i] = test[i].meta.words;
  } else {
    if (supervision.cached) {
      for (std::size_t i = 0; i < test.size(); ++i) {
        auto it = supervision.cached->find(test[i].meta.utt_id);
        if (it == supervision.cached->end()) {
          throw UsageError("tta: cached pseudo-labels lack " + test[i].meta.utt_id);
        }
        targets[i] = it->second;
      }
    } else {
      if (supervision.decoder == nullptr) throw UsageError("tta: pseudo-label supervision needs a decoder model");
      targets = DecodeAll(*supervision.decoder, test);
    }
  }

  // Entries: deficiency/global ones are reused when the bank has them,
  // speaker ones are reused only for seen speakers when warm starts are on.
  std::set<std::string> seen_speakers;
  for (const auto& [key, entry] : bank.entries()) {
    if (key.kind == ConditionKey::Kind::kSpeaker) seen_speakers.insert(key.label);
  }
  for (const auto& u : test) {
    const auto sev = severity_of.find(u.meta.speaker_id);
    if (sev == severity_of.end()) throw ResolutionError("no severity label for speaker " + u.meta.speaker_id);
    for (const auto& key : RequiredKeys(spec, u.meta.speaker_id, ToString(sev->second))) {
      const bool fresh_speaker = key.kind == ConditionKey::Kind::kSpeaker &&
                                 !(cfg.warm_start_seen_speakers && seen_speakers.count(key.label));
      if (fresh_speaker && tb.Contains(key) && bank.Contains(key)) tb.Erase(key);
      if (!tb.Contains(key)) {
        const auto point = PointFor(spec, key);
        tb.CreateEntry(key, point, WidthAt(bcfg, point), spec, init_rng);
      }
    }
  }

  // The backbone is frozen, so CNN features are computed once.
  std::vector<DiffArray> cnn(test.size());
  {
    TrainableScope frozen(AllParameters(model, nullptr), [](const std::string&) { return false; });
    for (std::size_t i = 0; i < test.size(); ++i) cnn[i] = EncodeCnn(model, test[i].waveform);
  }
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    Example probe{&test[i], targets[i], {}, {}};
    if (!Feasible(model, probe)) ++skipped;
  }
  out.skipped = skipped;

  auto make_examples = [&](const std::function<bool(const Utterance&)>& keep, ResolveScope scope) {
    std::vector<Example> ex;
    for (std::size_t i = 0; i < test.size(); ++i) {
      if (!keep(test[i])) continue;
      ex.push_back({&test[i], targets[i], StackFor(spec, tb, test[i], &severity_of, scope), cnn[i]});
    }
    return ex;
  };
  auto only_prefix = [&](const std::string& prefix) {
    return [prefix](const std::string& n) { return n.rfind(prefix, 0) == 0; };
  };

  // (b) Stage 1: deficiency (or global) adapters on pooled groups.
  if (spec.granularity == LabelGranularity::kGlobal) {
    TrainableScope scope(AllParameters(model, &tb), only_prefix(AdapterPrefix(ConditionKey::Global())));
    auto ex = make_examples([](const Utterance&) { return true; }, ResolveScope::kAll);
    auto log = RunPhase("tta_stage1:global", model, std::move(ex), scope.trainable(), cfg.tta_stage1, cfg, rng);
    log.skipped = 0;
    out.logs.push_back(std::move(log));
  } else if (spec.UsesDeficiency()) {
    std::set<Severity> groups;
    for (const auto& u : test) groups.insert(severity_of.at(u.meta.speaker_id));
    for (Severity sev : groups) {
      const auto key = ConditionKey::Deficiency(ToString(sev));
      TrainableScope scope(AllParameters(model, &tb), only_prefix(AdapterPrefix(key)));
      auto ex = make_examples([&](const Utterance& u) { return severity_of.at(u.meta.speaker_id) == sev; },
                              ResolveScope::kDeficiencyOnly);
      out.logs.push_back(RunPhase("tta_stage1:" + key.ToString(), model, std::move(ex), scope.trainable(),
                                  cfg.tta_stage1, cfg, rng));
    }
  }

  // (c) Stage 2: speaker adapters, deficiency adapters held fixed.
  if (spec.UsesSpeaker()) {
    std::set<std::string> speakers;
    for (const auto& u : test) speakers.insert(u.meta.speaker_id);
    for (const auto& spk : speakers) {
      const auto key = ConditionKey::Speaker(spk);
      TrainableScope scope(AllParameters(model, &tb), only_prefix(AdapterPrefix(key)));
      auto ex = make_examples([&](const Utterance& u) { return u.meta.speaker_id == spk; }, ResolveScope::kAll);
      out.logs.push_back(RunPhase("tta_stage2:" + key.ToString(), model, std::move(ex), scope.trainable(),
                                  cfg.tta_stage2, cfg, rng));
    }
  }

  // (d) Decode with the adapted stacks.
  out.hyps.reserve(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto stack = StackFor(spec, tb, test[i], &severity_of, ResolveScope::kAll);
    out.hyps.push_back(GreedyDecode(EncodeFromCnn(model, cnn[i], stack, false, nullptr)));
  }
  out.backbone_digest_after = model.Digest();
  return out;
}

}  // namespace sdadapt
