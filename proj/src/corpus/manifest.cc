// corpus/manifest.cc

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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sdadapt/base/error.h"
#include "sdadapt/corpus/corpus.h"
#include "sdadapt/corpus/wav.h"

namespace sdadapt {

namespace fs = std::filesystem;

std::string ToString(Severity s) {
  switch (s) {
    case Severity::kH: return "H";
    case Severity::kM: return "M";
    case Severity::kL: return "L";
    case Severity::kVL: return "VL";
  }
  return "?";
}

Severity ParseSeverity(const std::string& text) {
  for (Severity s : kAllSeverities) {
    if (text == ToString(s)) return s;
  }
  throw ParseError("severity must be one of H, M, L, VL (got '" + text + "')");
}

std::string ToString(SplitMode m) {
  return m == SplitMode::kBlockOverlap ? "block_overlap" : "speaker_disjoint";
}

SplitMode ParseSplitMode(const std::string& text) {
  if (text == "block_overlap") return SplitMode::kBlockOverlap;
  if (text == "speaker_disjoint") return SplitMode::kSpeakerDisjoint;
  throw ParseError("split_mode must be block_overlap or speaker_disjoint (got '" + text + "')");
}

std::string WordName(int token) {
  if (token < 1) throw UsageError("word tokens start at 1");
  char buf[16];
  std::snprintf(buf, sizeof(buf), "w%02d", token - 1);
  return buf;
}

int ParseWord(const std::string& word) {
  if (word.size() < 2 || word[0] != 'w') throw ParseError("bad word '" + word + "'");
  int index = 0;
  for (std::size_t i = 1; i < word.size(); ++i) {
    if (word[i] < '0' || word[i] > '9') throw ParseError("bad word '" + word + "'");
    index = index * 10 + (word[i] - '0');
  }
  return index + 1;
}

std::string JoinWords(const TokenSequence& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += WordName(tokens[i]);
  }
  return out;
}

TokenSequence SplitWords(const std::string& text) {
  std::istringstream in(text);
  TokenSequence out;
  std::string w;
  while (in >> w) out.push_back(ParseWord(w));
  return out;
}

void to_json(nlohmann::json& j, const CorpusConfig& c) {
  nlohmann::json schedules = nlohmann::json::object();
  for (Severity s : kAllSeverities) {
    const auto& x = c.schedules[Index(s)];
    schedules[ToString(s)] = {{"time_warp", x.time_warp}, {"blur_width", x.blur_width},
                              {"snr_db", x.snr_db}, {"jitter", x.jitter}};
  }
  nlohmann::json dist = nlohmann::json::object();
  for (Severity s : kAllSeverities) dist[ToString(s)] = c.severity_distribution[Index(s)];
  j = {{"n_train_speakers", c.n_train_speakers},
       {"n_test_speakers", c.n_test_speakers},
       {"severity_distribution", dist},
       {"vocab_size", c.vocab_size},
       {"utterances_per_speaker", c.utterances_per_speaker},
       {"test_utterances_per_speaker", c.test_utterances_per_speaker},
       {"split_mode", ToString(c.split_mode)},
       {"unseen_word_fraction", c.unseen_word_fraction},
       {"test_vocab_fraction", c.test_vocab_fraction},
       {"unseen_utterance_fraction", c.unseen_utterance_fraction},
       {"min_words", c.min_words},
       {"max_words", c.max_words},
       {"sample_rate", c.sample_rate},
       {"max_seconds", c.max_seconds},
       {"schedules", schedules},
       {"rng_seed", c.rng_seed}};
}

void from_json(const nlohmann::json& j, CorpusConfig& c) {
  CorpusConfig d;
  d.n_train_speakers = j.value("n_train_speakers", d.n_train_speakers);
  d.n_test_speakers = j.value("n_test_speakers", d.n_test_speakers);
  if (j.contains("severity_distribution")) {
    for (const auto& [k, v] : j.at("severity_distribution").items()) {
      d.severity_distribution[Index(ParseSeverity(k))] = v.get<double>();
    }
  }
  d.vocab_size = j.value("vocab_size", d.vocab_size);
  d.utterances_per_speaker = j.value("utterances_per_speaker", d.utterances_per_speaker);
  d.test_utterances_per_speaker = j.value("test_utterances_per_speaker", d.test_utterances_per_speaker);
  if (j.contains("split_mode")) d.split_mode = ParseSplitMode(j.at("split_mode").get<std::string>());
  d.unseen_word_fraction = j.value("unseen_word_fraction", d.unseen_word_fraction);
  d.test_vocab_fraction = j.value("test_vocab_fraction", d.test_vocab_fraction);
  d.unseen_utterance_fraction = j.value("unseen_utterance_fraction", d.unseen_utterance_fraction);
  d.min_words = j.value("min_words", d.min_words);
  d.max_words = j.value("max_words", d.max_words);
  d.sample_rate = j.value("sample_rate", d.sample_rate);
  d.max_seconds = j.value("max_seconds", d.max_seconds);
  if (j.contains("schedules")) {
    for (const auto& [k, v] : j.at("schedules").items()) {
      auto& x = d.schedules[Index(ParseSeverity(k))];
      x.time_warp = v.value("time_warp", x.time_warp);
      x.blur_width = v.value("blur_width", x.blur_width);
      x.snr_db = v.value("snr_db", x.snr_db);
      x.jitter = v.value("jitter", x.jitter);
    }
  }
  d.rng_seed = j.value("rng_seed", d.rng_seed);
  c = std::move(d);
}

void WriteManifest(const std::vector<ManifestEntry>& entries, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const auto& e : entries) {
    nlohmann::json j = {{"utt_id", e.utt_id},         {"speaker_id", e.speaker_id},
                        {"severity", ToString(e.severity)}, {"split", e.split},
                        {"words", JoinWords(e.words)}, {"seen", e.seen},
                        {"audio_path", e.audio_path}, {"sample_rate", e.sample_rate}};
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("failed writing " + path);
}

std::vector<ManifestEntry> ReadManifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path);
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ManifestEntry e;
      e.utt_id = j.at("utt_id").get<std::string>();
      e.speaker_id = j.at("speaker_id").get<std::string>();
      e.severity = ParseSeverity(j.at("severity").get<std::string>());
      e.split = j.at("split").get<std::string>();
      e.words = SplitWords(j.at("words").get<std::string>());
      e.seen = j.at("seen").get<bool>();
      e.audio_path = j.at("audio_path").get<std::string>();
      e.sample_rate = j.at("sample_rate").get<int>();
      if (e.words.empty()) throw ParseError("empty transcript");
      entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + ex.what());
    } catch (const ParseError& ex) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return entries;
}

std::vector<Utterance> LoadUtterances(const std::vector<ManifestEntry>& entries,
                                      const std::string& manifest_path) {
  const fs::path base = fs::path(manifest_path).parent_path();
  std::vector<Utterance> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    fs::path audio = e.audio_path;
    if (audio.is_relative()) audio = base / audio;
    if (!fs::exists(audio)) {
      throw ResolutionError("manifest entry " + e.utt_id + " references missing audio " + audio.string());
    }
    WavData wav = ReadWav(audio.string());
    if (wav.sample_rate != e.sample_rate) {
      throw DataError(e.utt_id + ": audio is " + std::to_string(wav.sample_rate) +
                      " Hz but the manifest says " + std::to_string(e.sample_rate));
    }
    out.push_back({e, std::move(wav.samples), 0.0});
  }
  return out;
}

void WriteCorpus(const Corpus& corpus, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "audio");
  auto write = [&](const std::vector<Utterance>& utts, const char* name) {
    std::vector<ManifestEntry> entries;
    for (const auto& u : utts) {
      WriteWav((fs::path(dir) / u.meta.audio_path).string(), u.waveform, u.meta.sample_rate);
      entries.push_back(u.meta);
    }
    WriteManifest(entries, (fs::path(dir) / name).string());
  };
  write(corpus.train, "train.jsonl");
  write(corpus.test, "test.jsonl");
}

}  // namespace sdadapt
