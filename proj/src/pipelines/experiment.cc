// pipelines/experiment.cc

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

#include "sdadapt/pipelines/experiment.h"

#include <chrono>
#include <cstdio>
#include <set>
#include <sstream>

#include "sdadapt/base/error.h"

namespace sdadapt {

namespace {

AdapterSpec MakeSpec(AdapterArch arch, LabelGranularity g, std::vector<int> positions) {
  AdapterSpec s;
  s.arch = arch;
  s.granularity = g;
  s.positions.clear();
  for (int p : positions) s.positions.push_back(InsertionPoint::FromTableIndex(p));
  if (arch == AdapterArch::kLhuc || arch == AdapterArch::kHub) s.bottleneck_k.reset();
  return s;
}

SystemRow Row(std::string id, std::optional<AdapterSpec> spec, bool aft,
              Supervision sup = Supervision::kPseudoLabel) {
  SystemRow r;
  r.id = std::move(id);
  r.spec = std::move(spec);
  r.aft = aft;
  r.supervision = sup;
  return r;
}

std::string Fixed2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", x);
  return buf;
}

const std::vector<std::string>& CsvGroups() {
  static const std::vector<std::string> groups = {"overall", "VL", "L", "M", "H", "seen", "unseen"};
  return groups;
}

std::map<std::string, double> GroupWers(const std::vector<UttScore>& scores) {
  std::map<std::string, double> out;
  for (Grouping g : {Grouping::kOverall, Grouping::kSeverity, Grouping::kSeenUnseen}) {
    for (const auto& [name, cell] : Aggregate(scores, g)) out[name] = cell.wer;
  }
  return out;
}

bool IsSingleAttributeRab(const SystemRow& r) {
  return r.spec && r.spec->arch == AdapterArch::kRab &&
         (r.spec->granularity == LabelGranularity::kSpeaker || r.spec->granularity == LabelGranularity::kDeficiency);
}

}  // namespace

void to_json(nlohmann::json& j, const SystemRow& r) {
  j = {{"id", r.id},
       {"spec", r.spec ? nlohmann::json(*r.spec) : nlohmann::json(nullptr)},
       {"aft", r.aft},
       {"supervision", ToString(r.supervision)},
       {"oracle_deficiency", r.oracle_deficiency}};
}

void from_json(const nlohmann::json& j, SystemRow& r) {
  r = SystemRow{};
  j.at("id").get_to(r.id);
  if (j.contains("spec") && !j.at("spec").is_null()) r.spec = j.at("spec").get<AdapterSpec>();
  r.aft = j.value("aft", false);
  if (j.contains("supervision")) r.supervision = ParseSupervision(j.at("supervision").get<std::string>());
  r.oracle_deficiency = j.value("oracle_deficiency", false);
}

std::vector<SystemRow> DefaultSystems() {
  using A = AdapterArch;
  using G = LabelGranularity;
  const auto global = MakeSpec(A::kRab, G::kGlobal, {0});
  const auto lhuc = MakeSpec(A::kLhuc, G::kSpeaker, {0});
  const auto spk = MakeSpec(A::kRab, G::kSpeaker, {0});
  const auto defi = MakeSpec(A::kRab, G::kDeficiency, {0});
  const auto structured = MakeSpec(A::kStructuredRab, G::kSpeakerPlusDeficiency, {0, 0});
  return {
      Row("1", std::nullopt, false),
      Row("2", global, false),
      Row("2*", global, false, Supervision::kGroundTruth),
      Row("3", lhuc, true),
      Row("4", spk, false),
      Row("5", spk, true),
      Row("6", defi, false),
      Row("7", defi, true),
      Row("8", structured, false),
      Row("9", structured, true),
      Row("9*", structured, true, Supervision::kGroundTruth),
  };
}

void ExperimentConfig::Validate() const {
  corpus.Validate();
  backbone.Validate();
  train.Validate();
  if (seeds.empty()) throw ConfigError("experiment: seeds must be nonempty");
  if (output_dir.empty()) throw ConfigError("experiment: output_dir must be set");
  if (systems.empty()) throw ConfigError("experiment: no systems");
  std::set<std::string> ids;
  for (const auto& r : systems) {
    if (r.id.empty()) throw ConfigError("experiment: system id must be nonempty");
    if (!ids.insert(r.id).second) throw ConfigError("experiment: duplicate system id " + r.id);
    if (r.spec) {
      r.spec->Validate(backbone);
    } else if (r.aft || r.supervision == Supervision::kGroundTruth) {
      throw ConfigError("experiment: system " + r.id + " has no adapters, so aft/gt do not apply");
    }
  }
}

ExperimentConfig ExperimentConfig::ForSeed(std::uint64_t seed) const {
  ExperimentConfig c = *this;
  c.corpus.rng_seed = seed;
  c.backbone.init_seed = seed;
  c.train.rng_seed = seed;
  c.classifier.rng_seed = seed;
  return c;
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = {{"corpus", c.corpus},       {"backbone", c.backbone},     {"train", c.train},
       {"classifier", {{"epochs", c.classifier.epochs}, {"step_size", c.classifier.step_size},
                       {"l2", c.classifier.l2}, {"rng_seed", c.classifier.rng_seed}}},
       {"systems", c.systems},     {"output_dir", c.output_dir}, {"seeds", c.seeds}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  c = ExperimentConfig{};
  if (j.contains("corpus")) c.corpus = j.at("corpus").get<CorpusConfig>();
  if (j.contains("backbone")) c.backbone = j.at("backbone").get<BackboneConfig>();
  if (j.contains("train")) c.train = j.at("train").get<TrainConfig>();
  if (j.contains("classifier")) {
    const auto& k = j.at("classifier");
    c.classifier.epochs = k.value("epochs", c.classifier.epochs);
    c.classifier.step_size = k.value("step_size", c.classifier.step_size);
    c.classifier.l2 = k.value("l2", c.classifier.l2);
    c.classifier.rng_seed = k.value("rng_seed", c.classifier.rng_seed);
  }
  if (j.contains("systems")) c.systems = j.at("systems").get<std::vector<SystemRow>>();
  c.output_dir = j.value("output_dir", c.output_dir);
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
}

const SystemRow& FindSystem(const ExperimentConfig& cfg, const std::string& id) {
  for (const auto& r : cfg.systems) {
    if (r.id == id) return r;
  }
  throw UsageError("no system with id '" + id + "' in the experiment config");
}

const SystemResult& SeedResult::Get(const std::string& id) const {
  for (const auto& s : systems) {
    if (s.system_id == id) return s;
  }
  throw UsageError("seed " + std::to_string(seed) + " has no result for system " + id);
}

SeedResult RunSeed(const ExperimentConfig& base_cfg, std::uint64_t seed, const ProgressFn& progress,
                   std::size_t threads) {
  const ExperimentConfig cfg = base_cfg.ForSeed(seed);
  cfg.Validate();
  auto say = [&](const std::string& msg) {
    if (progress) progress("seed " + std::to_string(seed) + ": " + msg);
  };

  using Clock = std::chrono::steady_clock;
  auto since = [](Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); };
  const auto t_setup = Clock::now();
  SeedResult out;
  out.seed = seed;
  const Corpus corpus = GenerateCorpus(cfg.corpus);
  say("corpus generated (" + std::to_string(corpus.train.size()) + " train, " +
      std::to_string(corpus.test.size()) + " test)");
  const BackboneModel baseline = FinetuneBaseline(BackboneModel(cfg.backbone), corpus.train, cfg.train);
  say("baseline fine-tuned");
  const auto base_hyps = DecodeAll(baseline, corpus.test, nullptr, nullptr, nullptr, threads);
  std::map<std::string, TokenSequence> cache;
  for (std::size_t i = 0; i < corpus.test.size(); ++i) cache[corpus.test[i].meta.utt_id] = base_hyps[i];

  const SeverityMap truth = TrueSeverities(corpus.test);
  const auto classifier = TrainSeverityClassifier(corpus.train, cfg.classifier);
  out.predicted_severity = PredictSeverities(classifier, corpus.test);
  std::size_t right = 0;
  for (const auto& [spk, sev] : out.predicted_severity) right += truth.at(spk) == sev;
  out.severity_accuracy = 100.0 * static_cast<double>(right) / static_cast<double>(truth.size());
  out.setup_seconds = since(t_setup);
  say("setup " + Fixed2(out.setup_seconds) + " s");

  std::map<std::string, AftResult> aft_cache;
  const AdapterBank empty;
  for (const auto& row : cfg.systems) {
    const auto t_row = Clock::now();
    SystemResult r;
    r.system_id = row.id;
    r.seed = seed;
    if (!row.spec) {
      r.hyps = base_hyps;
      r.backbone_digest_before = r.backbone_digest_after = baseline.Digest();
    } else {
      const BackboneModel* model = &baseline;
      const AdapterBank* bank = &empty;
      if (row.aft) {
        const std::string key = nlohmann::json(*row.spec).dump();
        auto it = aft_cache.find(key);
        if (it == aft_cache.end()) {
          it = aft_cache.emplace(key, AdaptiveFinetune(baseline, *row.spec, corpus.train, cfg.train)).first;
          say("AFT " + row.spec->Name() + " done");
        }
        model = &it->second.model;
        bank = &it->second.bank;
      }
      const SeverityMap& sev = row.oracle_deficiency ? truth : out.predicted_severity;
      SupervisionMode sup{row.supervision, &baseline, &cache};
      TtaResult t = TestTimeAdapt(*model, *bank, *row.spec, corpus.test, sev, sup, cfg.train);
      r.hyps = std::move(t.hyps);
      r.skipped = t.skipped;
      r.backbone_digest_before = t.backbone_digest_before;
      r.backbone_digest_after = t.backbone_digest_after;
      std::set<ConditionKey> used;
      for (const auto& [spk, label] : sev) {
        for (const auto& k : RequiredKeys(*row.spec, spk, ToString(label))) used.insert(k);
      }
      for (const auto& k : used) r.n_adapter_params += t.bank.Get(k).ParameterCount();
    }
    for (std::size_t i = 0; i < corpus.test.size(); ++i) r.scores.push_back(Score(corpus.test[i].meta, r.hyps[i]));
    r.seconds = since(t_row);
    say("system " + row.id + " TER " + Fixed2(Aggregate(r.scores, Grouping::kOverall).at("overall").wer) + " (" +
        Fixed2(r.seconds) + " s)");
    out.systems.push_back(std::move(r));
  }
  return out;
}

std::string ResultsCsv(const ExperimentConfig& cfg, const std::vector<SeedResult>& runs) {
  std::ostringstream os;
  os << "seed,system_id,adapt_arch,adapt_label,aft,supervision";
  for (const auto& g : CsvGroups()) os << ",wer_" << g;
  os << ",n_adapter_params\n";
  auto prefix = [&](const SystemRow& row, const std::string& seed) {
    os << seed << ',' << row.id << ',' << (row.spec ? ToString(row.spec->arch) : "none") << ','
       << (row.spec ? ToString(row.spec->granularity) : "none") << ',' << (row.aft ? "true" : "false") << ','
       << (row.spec ? ToString(row.supervision) : "none");
  };
  for (const auto& run : runs) {
    for (const auto& row : cfg.systems) {
      const auto& res = run.Get(row.id);
      const auto wers = GroupWers(res.scores);
      prefix(row, std::to_string(run.seed));
      for (const auto& g : CsvGroups()) {
        os << ',';
        if (auto it = wers.find(g); it != wers.end()) os << Fixed2(it->second);
      }
      os << ',' << res.n_adapter_params << '\n';
    }
  }
  for (const auto& row : cfg.systems) {
    prefix(row, "mean");
    for (const auto& g : CsvGroups()) {
      double sum = 0.0;
      int n = 0;
      for (const auto& run : runs) {
        const auto wers = GroupWers(run.Get(row.id).scores);
        if (auto it = wers.find(g); it != wers.end()) {
          sum += it->second;
          ++n;
        }
      }
      os << ',';
      if (n) os << Fixed2(sum / n);
    }
    double params = 0.0;
    for (const auto& run : runs) params += static_cast<double>(run.Get(row.id).n_adapter_params);
    os << ',' << Fixed2(runs.empty() ? 0.0 : params / static_cast<double>(runs.size())) << '\n';
  }
  return os.str();
}

std::vector<UttScore> PooledScores(const std::vector<SeedResult>& runs, const std::string& system_id) {
  std::vector<UttScore> out;
  for (const auto& run : runs) {
    for (auto s : run.Get(system_id).scores) {
      s.utt_id = std::to_string(run.seed) + "/" + s.utt_id;
      out.push_back(std::move(s));
    }
  }
  return out;
}

double MeanTer(const std::vector<SeedResult>& runs, const std::string& system_id) {
  if (runs.empty()) throw UsageError("mean_ter: no runs");
  double sum = 0.0;
  for (const auto& run : runs) sum += Aggregate(run.Get(system_id).scores, Grouping::kOverall).at("overall").wer;
  return sum / static_cast<double>(runs.size());
}

std::vector<nlohmann::json> MatrixSignificance(const ExperimentConfig& cfg, const std::vector<SeedResult>& runs,
                                               double alpha) {
  std::vector<std::pair<std::string, std::string>> pairs;
  const bool has_baseline = std::any_of(cfg.systems.begin(), cfg.systems.end(),
                                        [](const SystemRow& r) { return r.id == "1"; });
  for (const auto& row : cfg.systems) {
    if (has_baseline && row.id != "1") pairs.emplace_back(row.id, "1");
  }
  for (const auto& row : cfg.systems) {
    if (!row.spec || row.spec->arch != AdapterArch::kStructuredRab) continue;
    for (const auto& other : cfg.systems) {
      if (IsSingleAttributeRab(other) && other.aft == row.aft && other.supervision == row.supervision) {
        pairs.emplace_back(row.id, other.id);
      }
    }
  }
  std::vector<nlohmann::json> out;
  for (const auto& [a, b] : pairs) {
    const auto r = Mapsswe(PooledScores(runs, a), PooledScores(runs, b), alpha);
    auto report = SignificanceReport(a, b, r, alpha);
    report["mean_ter_a"] = MeanTer(runs, a);
    report["mean_ter_b"] = MeanTer(runs, b);
    out.push_back(std::move(report));
  }
  return out;
}

}  // namespace sdadapt
