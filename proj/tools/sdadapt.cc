// tools/sdadapt.cc

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

// Command-line front end: corpus generation, baseline fine-tuning, adaptive
// fine-tuning, test-time adaptation, decoding, scoring and significance.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sdadapt/backbone/checkpoint.h"
#include "sdadapt/base/digest.h"
#include "sdadapt/base/error.h"
#include "sdadapt/classifier/classifier.h"
#include "sdadapt/corpus/corpus.h"
#include "sdadapt/eval/eval.h"
#include "sdadapt/pipelines/experiment.h"
#include "sdadapt/pipelines/pipelines.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sdadapt;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string output;
  std::size_t threads = 1;
  bool force = false;
  std::string system;
  std::string supervision;
  bool oracle_deficiency = false;
  std::string system_a;
  std::string system_b;
  double alpha = 0.05;
};

// Raised when an input artifact is absent; names the command producing it.
class MissingPrerequisite : public Error {
 public:
  using Error::Error;
};

ExperimentConfig LoadConfig(const Options& o) {
  ExperimentConfig cfg;
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw IoError("cannot open config file " + o.config_path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ParseError("config " + o.config_path + ": " + e.what());
    }
    try {
      cfg = j.get<ExperimentConfig>();
    } catch (const json::exception& e) {
      throw ConfigError("config " + o.config_path + ": " + e.what());
    }
  }
  if (!o.output.empty()) cfg.output_dir = o.output;
  cfg.Validate();
  return cfg;
}

// Digest of the materialized configuration; output_dir is excluded so a run
// directory can be moved.
std::string ConfigDigest(const ExperimentConfig& cfg) {
  json j = cfg;
  j.erase("output_dir");
  Digest d;
  d.Update(j.dump());
  return d.Hex();
}

std::uint64_t SeedOf(const Options& o, const ExperimentConfig& cfg) { return o.seed.value_or(cfg.seeds.front()); }

fs::path SeedDir(const ExperimentConfig& cfg, std::uint64_t seed) {
  return fs::path(cfg.output_dir) / ("seed-" + std::to_string(seed));
}

// System ids such as "9*" become directory-safe names ("9star").
std::string SafeId(const std::string& id) {
  std::string out;
  for (char c : id) {
    if (c == '*') {
      out += "star";
    } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') {
      out += c;
    } else {
      out += '_';
    }
  }
  return out;
}

fs::path SystemDir(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& id) {
  return SeedDir(cfg, seed) / ("system-" + SafeId(id));
}

std::string CommandHint(const Options& o, const std::string& command, std::uint64_t seed,
                        const std::string& extra = "") {
  std::string s = "sdadapt " + command;
  if (!o.config_path.empty()) s += " --config " + o.config_path;
  if (!o.output.empty()) s += " --output " + o.output;
  s += " --seed " + std::to_string(seed) + extra;
  return s;
}

void Require(const fs::path& p, const std::string& hint) {
  if (!fs::exists(p)) throw MissingPrerequisite("missing " + p.string() + "; run `" + hint + "` first");
}

json ReadJson(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ParseError(p.string() + ": " + e.what());
  }
}

void WriteText(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, p);
}

// Creates or checks <dir>/run_metadata.json. With `command` set, appends it
// to the list of completed commands.
void RecordRun(const fs::path& dir, const ExperimentConfig& cfg, std::optional<std::uint64_t> seed,
               const std::string& command, bool force) {
  const fs::path meta_path = dir / "run_metadata.json";
  const std::string digest = ConfigDigest(cfg);
  json meta;
  if (fs::exists(meta_path)) {
    meta = ReadJson(meta_path);
    const std::string old = meta.value("config_digest", "");
    if (old != digest) {
      if (!force) {
        throw ConfigError("config digest " + digest + " differs from " + old + " recorded in " + meta_path.string() +
                          "; use --force to overwrite");
      }
      meta = json::object();
    }
  }
  if (meta.empty()) {
    meta["tool"] = "sdadapt";
    meta["version"] = SDADAPT_VERSION;
    meta["config_digest"] = digest;
    meta["config"] = seed ? json(cfg.ForSeed(*seed)) : json(cfg);
    meta["experiment_config"] = cfg;
    if (seed) {
      meta["seed"] = *seed;
    } else {
      meta["seeds"] = cfg.seeds;
    }
    meta["commands"] = json::array();
  }
  if (!command.empty()) meta["commands"].push_back(command);
  WriteText(meta_path, meta.dump(2) + "\n");
}

std::vector<Utterance> LoadSplit(const fs::path& seed_dir, const std::string& split, const std::string& hint) {
  const fs::path manifest = seed_dir / "corpus" / (split + ".jsonl");
  Require(manifest, hint);
  return LoadUtterances(ReadManifest(manifest.string()), manifest.string());
}

void Save(const fs::path& p, const BackboneModel& model, const AdapterBank& bank, const json& extra) {
  fs::create_directories(p.parent_path());
  SaveCheckpoint(p.string(), model, bank, extra);
}

void WriteDecodes(const fs::path& p, const std::vector<Utterance>& utts, const std::vector<TokenSequence>& hyps) {
  std::ostringstream os;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    os << json{{"utt_id", utts[i].meta.utt_id}, {"hyp", JoinWords(hyps[i])}}.dump() << '\n';
  }
  WriteText(p, os.str());
}

std::map<std::string, TokenSequence> ReadDecodes(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  std::map<std::string, TokenSequence> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      out[j.at("utt_id").get<std::string>()] = SplitWords(j.at("hyp").get<std::string>());
    } catch (const json::exception& e) {
      throw ParseError(p.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::vector<UttScore> ScoreDecodes(const std::vector<Utterance>& test, const std::map<std::string, TokenSequence>& hyps,
                                   const fs::path& source) {
  std::vector<UttScore> scores;
  for (const auto& u : test) {
    auto it = hyps.find(u.meta.utt_id);
    if (it == hyps.end()) throw DataError(source.string() + " has no decode for " + u.meta.utt_id);
    scores.push_back(Score(u.meta, it->second));
  }
  return scores;
}

std::string ScoresCsv(const std::vector<UttScore>& scores) {
  std::ostringstream os;
  os << "utt_id,speaker_id,severity,seen,n_ref,substitutions,deletions,insertions\n";
  for (const auto& s : scores) {
    os << s.utt_id << ',' << s.speaker_id << ',' << ToString(s.severity) << ',' << (s.seen ? "true" : "false") << ','
       << s.n_ref_words << ',' << s.substitutions << ',' << s.deletions << ',' << s.insertions << '\n';
  }
  return os.str();
}

json Summary(const std::vector<UttScore>& scores) {
  json j = json::object();
  for (Grouping g : {Grouping::kOverall, Grouping::kSeverity, Grouping::kSeenUnseen}) {
    for (const auto& [name, cell] : Aggregate(scores, g)) {
      j[name] = {{"wer", cell.wer}, {"errors", cell.errors}, {"n_ref", cell.n_ref}, {"n_utts", cell.n_utts}};
    }
  }
  return j;
}

SeverityMap ReadSeverityMap(const json& j) {
  SeverityMap m;
  for (const auto& [spk, sev] : j.items()) m[spk] = ParseSeverity(sev.get<std::string>());
  return m;
}

json SeverityMapJson(const SeverityMap& m) {
  json j = json::object();
  for (const auto& [spk, sev] : m) j[spk] = ToString(sev);
  return j;
}

// ---------------------------------------------------------------- commands

int CmdGenerate(const Options& o) {
  const auto cfg = LoadConfig(o);
  const auto seed = SeedOf(o, cfg);
  const fs::path dir = SeedDir(cfg, seed);
  fs::create_directories(dir);
  RecordRun(dir, cfg, seed, "", o.force);
  const Corpus corpus = GenerateCorpus(cfg.ForSeed(seed).corpus);
  WriteCorpus(corpus, (dir / "corpus").string());
  std::cout << "wrote " << corpus.train.size() << " train and " << corpus.test.size() << " test utterances to "
            << (dir / "corpus").string() << "\n";
  RecordRun(dir, cfg, seed, "generate", o.force);
  return 0;
}

int CmdTrainBaseline(const Options& o) {
  const auto cfg = LoadConfig(o);
  const auto seed = SeedOf(o, cfg);
  const auto scfg = cfg.ForSeed(seed);
  const fs::path dir = SeedDir(cfg, seed);
  const auto train = LoadSplit(dir, "train", CommandHint(o, "generate", seed));
  RecordRun(dir, cfg, seed, "", o.force);
  PhaseLog log;
  const BackboneModel model = FinetuneBaseline(BackboneModel(scfg.backbone), train, scfg.train, &log);
  const auto clf = TrainSeverityClassifier(train, scfg.classifier);
  Save(dir / "baseline.ckpt", model, AdapterBank{},
                 {{"kind", "baseline"}, {"epoch_loss", log.epoch_loss}, {"skipped", log.skipped}});
  WriteText(dir / "classifier.json", json(clf).dump(2) + "\n");
  std::cout << "baseline: " << log.epoch_loss.size() << " epochs, final loss "
            << (log.epoch_loss.empty() ? 0.0 : log.epoch_loss.back()) << "\n";
  RecordRun(dir, cfg, seed, "train-baseline", o.force);
  return 0;
}

int CmdAft(const Options& o) {
  const auto cfg = LoadConfig(o);
  const auto seed = SeedOf(o, cfg);
  const auto scfg = cfg.ForSeed(seed);
  const auto& row = FindSystem(cfg, o.system);
  if (!row.spec) throw UsageError("system " + row.id + " has no adapters; nothing to fine-tune");
  const fs::path dir = SeedDir(cfg, seed);
  const auto train = LoadSplit(dir, "train", CommandHint(o, "generate", seed));
  Require(dir / "baseline.ckpt", CommandHint(o, "train-baseline", seed));
  RecordRun(dir, cfg, seed, "", o.force);
  const Checkpoint base = LoadCheckpoint((dir / "baseline.ckpt").string());
  const AftResult r = AdaptiveFinetune(base.model, *row.spec, train, scfg.train);
  json logs = json::array();
  for (const auto& l : r.logs) logs.push_back({{"name", l.name}, {"epoch_loss", l.epoch_loss}, {"skipped", l.skipped}});
  Save(SystemDir(cfg, seed, row.id) / "aft.ckpt", r.model, r.bank,
                 {{"kind", "aft"}, {"system", row.id}, {"spec", *row.spec}, {"logs", logs}});
  std::cout << "aft " << row.id << ": " << r.bank.size() << " adapter entries\n";
  RecordRun(dir, cfg, seed, "aft --system " + row.id, o.force);
  return 0;
}

int CmdAdapt(const Options& o) {
  const auto cfg = LoadConfig(o);
  const auto seed = SeedOf(o, cfg);
  const auto scfg = cfg.ForSeed(seed);
  SystemRow row = FindSystem(cfg, o.system);
  if (!o.supervision.empty()) row.supervision = ParseSupervision(o.supervision);
  if (o.oracle_deficiency) row.oracle_deficiency = true;
  const fs::path dir = SeedDir(cfg, seed);
  const fs::path sys_dir = SystemDir(cfg, seed, row.id);
  const auto test = LoadSplit(dir, "test", CommandHint(o, "generate", seed));
  Require(dir / "baseline.ckpt", CommandHint(o, "train-baseline", seed));
  Require(dir / "classifier.json", CommandHint(o, "train-baseline", seed));
  if (row.aft) Require(sys_dir / "aft.ckpt", CommandHint(o, "aft", seed, " --system " + row.id));
  RecordRun(dir, cfg, seed, "", o.force);

  const Checkpoint base = LoadCheckpoint((dir / "baseline.ckpt").string());
  const auto base_hyps = DecodeAll(base.model, test, nullptr, nullptr, nullptr, o.threads);
  if (!row.spec) {
    Save(sys_dir / "adapted.ckpt", base.model, AdapterBank{}, {{"kind", "adapted"}, {"system", row.id}});
    WriteDecodes(sys_dir / "decodes.jsonl", test, base_hyps);
    std::cout << "system " << row.id << ": baseline decodes written\n";
    RecordRun(dir, cfg, seed, "adapt --system " + row.id, o.force);
    return 0;
  }
  std::map<std::string, TokenSequence> cache;
  for (std::size_t i = 0; i < test.size(); ++i) cache[test[i].meta.utt_id] = base_hyps[i];
  const auto clf = ReadJson(dir / "classifier.json").get<SeverityClassifier>();
  const SeverityMap severity = row.oracle_deficiency ? TrueSeverities(test) : PredictSeverities(clf, test);

  std::optional<Checkpoint> aft;
  if (row.aft) aft = LoadCheckpoint((sys_dir / "aft.ckpt").string());
  const BackboneModel& model = aft ? aft->model : base.model;
  const AdapterBank start = aft ? aft->bank : AdapterBank{};
  const SupervisionMode sup{row.supervision, &base.model, &cache};
  const TtaResult r = TestTimeAdapt(model, start, *row.spec, test, severity, sup, scfg.train);
  if (r.backbone_digest_before != r.backbone_digest_after) throw TrainingError("test-time adaptation changed the backbone");
  Save(sys_dir / "adapted.ckpt", model, r.bank,
                 {{"kind", "adapted"},
                  {"system", row.id},
                  {"spec", *row.spec},
                  {"supervision", ToString(row.supervision)},
                  {"oracle_deficiency", row.oracle_deficiency},
                  {"severity", SeverityMapJson(severity)},
                  {"skipped", r.skipped}});
  WriteDecodes(sys_dir / "decodes.jsonl", test, r.hyps);
  std::cout << "system " << row.id << ": adapted " << severity.size() << " speakers, skipped " << r.skipped
            << " utterances\n";
  RecordRun(dir, cfg, seed, "adapt --system " + row.id, o.force);
  return 0;
}

int CmdDecode(const Options& o) {
  const auto cfg = LoadConfig(o);
  const auto seed = SeedOf(o, cfg);
  const auto& row = FindSystem(cfg, o.system);
  const fs::path dir = SeedDir(cfg, seed);
  const fs::path sys_dir = SystemDir(cfg, seed, row.id);
  const auto test = LoadSplit(dir, "test", CommandHint(o, "generate", seed));
  Require(sys_dir / "adapted.ckpt", CommandHint(o, "adapt", seed, " --system " + row.id));
  RecordRun(dir, cfg, seed, "", o.force);
  const Checkpoint ck = LoadCheckpoint((sys_dir / "adapted.ckpt").string());
  std::vector<TokenSequence> hyps;
  if (ck.extra.contains("spec")) {
    const auto spec = ck.extra.at("spec").get<AdapterSpec>();
    const SeverityMap severity = ReadSeverityMap(ck.extra.at("severity"));
    hyps = DecodeAll(ck.model, test, &ck.bank, &spec, &severity, o.threads);
  } else {
    hyps = DecodeAll(ck.model, test, nullptr, nullptr, nullptr, o.threads);
  }
  WriteDecodes(sys_dir / "decodes.jsonl", test, hyps);
  std::cout << "system " << row.id << ": decoded " << test.size() << " utterances\n";
  RecordRun(dir, cfg, seed, "decode --system " + row.id, o.force);
  return 0;
}

int CmdScore(const Options& o) {
  const auto cfg = LoadConfig(o);
  const auto seed = SeedOf(o, cfg);
  const auto& row = FindSystem(cfg, o.system);
  const fs::path dir = SeedDir(cfg, seed);
  const fs::path sys_dir = SystemDir(cfg, seed, row.id);
  const auto hint = CommandHint(o, "generate", seed);
  const fs::path manifest = dir / "corpus" / "test.jsonl";
  Require(manifest, hint);
  Require(sys_dir / "decodes.jsonl", CommandHint(o, "adapt", seed, " --system " + row.id));
  RecordRun(dir, cfg, seed, "", o.force);
  std::vector<Utterance> test;
  for (const auto& e : ReadManifest(manifest.string())) test.push_back(Utterance{e, {}, 0.0});
  const auto scores = ScoreDecodes(test, ReadDecodes(sys_dir / "decodes.jsonl"), sys_dir / "decodes.jsonl");
  WriteText(sys_dir / "scores.csv", ScoresCsv(scores));
  const json summary = Summary(scores);
  WriteText(sys_dir / "summary.json", summary.dump(2) + "\n");
  std::cout << "system " << row.id << ":";
  for (const auto& g : {"overall", "VL", "L", "M", "H", "seen", "unseen"}) {
    if (summary.contains(g)) std::cout << ' ' << g << ' ' << summary[g]["wer"].get<double>();
  }
  std::cout << "\n";
  RecordRun(dir, cfg, seed, "score --system " + row.id, o.force);
  return 0;
}

int CmdSignificance(const Options& o) {
  const auto cfg = LoadConfig(o);
  const auto seed = SeedOf(o, cfg);
  const auto& a = FindSystem(cfg, o.system_a);
  const auto& b = FindSystem(cfg, o.system_b);
  const fs::path dir = SeedDir(cfg, seed);
  const fs::path manifest = dir / "corpus" / "test.jsonl";
  Require(manifest, CommandHint(o, "generate", seed));
  std::vector<Utterance> test;
  for (const auto& e : ReadManifest(manifest.string())) test.push_back(Utterance{e, {}, 0.0});
  auto load = [&](const SystemRow& row) {
    const fs::path p = SystemDir(cfg, seed, row.id) / "decodes.jsonl";
    Require(p, CommandHint(o, "adapt", seed, " --system " + row.id));
    return ScoreDecodes(test, ReadDecodes(p), p);
  };
  const auto sa = load(a);
  const auto sb = load(b);
  RecordRun(dir, cfg, seed, "", o.force);
  const auto r = Mapsswe(sa, sb, o.alpha);
  const json report = SignificanceReport(a.id, b.id, r, o.alpha);
  WriteText(dir / "significance" / (SafeId(a.id) + "_vs_" + SafeId(b.id) + ".json"), report.dump(2) + "\n");
  std::cout << report.dump() << "\n";
  RecordRun(dir, cfg, seed, "significance --a " + a.id + " --b " + b.id, o.force);
  return 0;
}

int CmdMatrix(const Options& o) {
  const auto cfg = LoadConfig(o);
  std::vector<std::uint64_t> seeds = cfg.seeds;
  if (o.seed) seeds = {*o.seed};
  const fs::path root(cfg.output_dir);
  fs::create_directories(root);
  RecordRun(root, cfg, std::nullopt, "", o.force);
  std::vector<SeedResult> runs;
  for (auto seed : seeds) {
    const fs::path dir = SeedDir(cfg, seed);
    fs::create_directories(dir);
    RecordRun(dir, cfg, seed, "", o.force);
    auto run = RunSeed(cfg, seed, [](const std::string& msg) { std::cerr << msg << "\n"; }, o.threads);
    const Corpus corpus = GenerateCorpus(cfg.ForSeed(seed).corpus);
    WriteCorpus(corpus, (dir / "corpus").string());
    for (const auto& s : run.systems) {
      const fs::path sys_dir = SystemDir(cfg, seed, s.system_id);
      WriteDecodes(sys_dir / "decodes.jsonl", corpus.test, s.hyps);
      WriteText(sys_dir / "scores.csv", ScoresCsv(s.scores));
      WriteText(sys_dir / "summary.json", Summary(s.scores).dump(2) + "\n");
    }
    WriteText(dir / "predicted_severity.json",
              json{{"accuracy", run.severity_accuracy}, {"labels", SeverityMapJson(run.predicted_severity)}}.dump(2) +
                  "\n");
    RecordRun(dir, cfg, seed, "matrix", o.force);
    runs.push_back(std::move(run));
  }
  WriteText(root / "results.csv", ResultsCsv(cfg, runs));
  for (const auto& report : MatrixSignificance(cfg, runs)) {
    const std::string name = SafeId(report.at("system_a").get<std::string>()) + "_vs_" +
                             SafeId(report.at("system_b").get<std::string>()) + ".json";
    WriteText(root / "significance" / name, report.dump(2) + "\n");
  }
  RecordRun(root, cfg, std::nullopt, "matrix", o.force);
  std::cout << "wrote " << (root / "results.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured speaker-deficiency adaptation experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(SDADAPT_VERSION));
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Seed (default: first seed of the config)");
    sub->add_option("--output", o.output, "Output directory (overrides output_dir)");
    sub->add_option("--threads", o.threads, "Decoding threads")->check(CLI::PositiveNumber);
    sub->add_flag("--force", o.force, "Overwrite run metadata recorded with a different config");
  };
  auto* gen = app.add_subcommand("generate", "Write the synthetic corpus for one seed");
  auto* base = app.add_subcommand("train-baseline", "Fine-tune the baseline and train the severity classifier");
  auto* aft = app.add_subcommand("aft", "Adaptive fine-tuning for one system");
  auto* adapt = app.add_subcommand("adapt", "Test-time adaptation and decoding for one system");
  auto* decode = app.add_subcommand("decode", "Re-decode the test set with an adapted checkpoint");
  auto* score = app.add_subcommand("score", "Score the decodes of one system");
  auto* sig = app.add_subcommand("significance", "MAPSSWE test between two systems");
  auto* matrix = app.add_subcommand("matrix", "Run every system over every seed");
  for (auto* sub : {gen, base, aft, adapt, decode, score, sig, matrix}) common(sub);
  for (auto* sub : {aft, adapt, decode, score}) sub->add_option("--system", o.system, "System id")->required();
  adapt->add_option("--supervision", o.supervision, "Override the row's supervision")
      ->check(CLI::IsMember({"gt", "pseudo"}));
  adapt->add_flag("--oracle-deficiency", o.oracle_deficiency, "Use ground-truth severity labels");
  sig->add_option("--a", o.system_a, "First system id")->required();
  sig->add_option("--b", o.system_b, "Second system id")->required();
  sig->add_option("--alpha", o.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return CmdGenerate(o);
    if (*base) return CmdTrainBaseline(o);
    if (*aft) return CmdAft(o);
    if (*adapt) return CmdAdapt(o);
    if (*decode) return CmdDecode(o);
    if (*score) return CmdScore(o);
    if (*sig) return CmdSignificance(o);
    if (*matrix) return CmdMatrix(o);
  } catch (const MissingPrerequisite& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
