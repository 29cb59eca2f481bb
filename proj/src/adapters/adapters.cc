// adapters/adapters.cc

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

#include "sdadapt/adapters/adapters.h"

#include <cmath>
#include <sstream>

#include "sdadapt/base/digest.h"
#include "sdadapt/base/error.h"
#include "sdadapt/diffcore/ops.h"

namespace sdadapt {

std::string ToString(AdapterArch arch) {
  switch (arch) {
    case AdapterArch::kLhuc: return "lhuc";
    case AdapterArch::kHub: return "hub";
    case AdapterArch::kRab: return "rab";
    case AdapterArch::kStructuredRab: return "srab";
  }
  return "?";
}

std::string ToString(LabelGranularity granularity) {
  switch (granularity) {
    case LabelGranularity::kGlobal: return "global";
    case LabelGranularity::kDeficiency: return "defi";
    case LabelGranularity::kSpeaker: return "spk";
    case LabelGranularity::kSpeakerPlusDeficiency: return "spk+defi";
  }
  return "?";
}

AdapterArch ParseAdapterArch(const std::string& text) {
  if (text == "lhuc") return AdapterArch::kLhuc;
  if (text == "hub") return AdapterArch::kHub;
  if (text == "rab") return AdapterArch::kRab;
  if (text == "srab" || text == "structured") return AdapterArch::kStructuredRab;
  throw ConfigError("unknown adapter architecture '" + text + "'");
}

LabelGranularity ParseLabelGranularity(const std::string& text) {
  if (text == "global") return LabelGranularity::kGlobal;
  if (text == "defi" || text == "deficiency") return LabelGranularity::kDeficiency;
  if (text == "spk" || text == "speaker") return LabelGranularity::kSpeaker;
  if (text == "spk+defi" || text == "structured") return LabelGranularity::kSpeakerPlusDeficiency;
  throw ConfigError("unknown adapter label granularity '" + text + "'");
}

void AdapterSpec::Validate() const {
  const bool structured = arch == AdapterArch::kStructuredRab;
  if (structured != (granularity == LabelGranularity::kSpeakerPlusDeficiency)) {
    throw ConfigError("adapter spec: StructuredRAB goes with spk+defi labels and only with them");
  }
  if (positions.size() != (structured ? 2u : 1u)) {
    throw ConfigError(std::string("adapter spec: ") + (structured ? "two positions" : "one position") +
                      " required");
  }
  const bool needs_k = arch == AdapterArch::kRab || structured;
  if (needs_k != bottleneck_k.has_value()) {
    throw ConfigError("adapter spec: bottleneck_k is required for RAB and only for RAB");
  }
  if (needs_k && *bottleneck_k == 0) throw ConfigError("adapter spec: bottleneck_k must be >= 1");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("adapter spec: dropout_p outside [0,1)");
}

void AdapterSpec::Validate(const BackboneConfig& backbone) const {
  Validate();
  for (const auto& p : positions) p.Validate(backbone);
}

bool AdapterSpec::UsesDeficiency() const {
  return granularity == LabelGranularity::kDeficiency ||
         granularity == LabelGranularity::kSpeakerPlusDeficiency;
}

bool AdapterSpec::UsesSpeaker() const {
  return granularity == LabelGranularity::kSpeaker ||
         granularity == LabelGranularity::kSpeakerPlusDeficiency;
}

std::string AdapterSpec::Name() const {
  std::ostringstream os;
  os << ToString(arch) << '/' << ToString(granularity) << '@';
  for (std::size_t i = 0; i < positions.size(); ++i) os << (i ? "," : "") << positions[i].TableIndex();
  return os.str();
}

void to_json(nlohmann::json& j, const AdapterSpec& s) {
  std::vector<int> pos;
  for (const auto& p : s.positions) pos.push_back(p.TableIndex());
  j = {{"arch", ToString(s.arch)},
       {"label", ToString(s.granularity)},
       {"positions", pos},
       {"dropout_p", s.dropout_p}};
  if (s.bottleneck_k) j["bottleneck_k"] = *s.bottleneck_k;
}

void from_json(const nlohmann::json& j, AdapterSpec& s) {
  AdapterSpec d;
  d.arch = ParseAdapterArch(j.at("arch").get<std::string>());
  d.granularity = ParseLabelGranularity(j.at("label").get<std::string>());
  d.positions.clear();
  if (j.contains("positions")) {
    for (int p : j.at("positions").get<std::vector<int>>()) d.positions.push_back(InsertionPoint::FromTableIndex(p));
  } else {
    d.positions.assign(d.arch == AdapterArch::kStructuredRab ? 2 : 1, InsertionPoint::AfterCnnEncoder());
  }
  const bool needs_k = d.arch == AdapterArch::kRab || d.arch == AdapterArch::kStructuredRab;
  if (j.contains("bottleneck_k")) {
    d.bottleneck_k = j.at("bottleneck_k").get<std::size_t>();
  } else if (!needs_k) {
    d.bottleneck_k.reset();
  }
  d.dropout_p = j.value("dropout_p", d.dropout_p);
  d.Validate();
  s = std::move(d);
}

std::string ConditionKey::ToString() const {
  switch (kind) {
    case Kind::kGlobal: return "global";
    case Kind::kDeficiency: return "defi:" + label;
    case Kind::kSpeaker: return "spk:" + label;
  }
  return "?";
}

ConditionKey ConditionKey::Parse(const std::string& text) {
  if (text == "global") return Global();
  if (text.rfind("defi:", 0) == 0 && text.size() > 5) return Deficiency(text.substr(5));
  if (text.rfind("spk:", 0) == 0 && text.size() > 4) return Speaker(text.substr(4));
  throw ParseError("malformed condition key '" + text + "'");
}

AdapterArch AdapterEntry::arch() const {
  if (std::holds_alternative<LhucParams>(params)) return AdapterArch::kLhuc;
  if (std::holds_alternative<HubParams>(params)) return AdapterArch::kHub;
  return AdapterArch::kRab;
}

std::size_t AdapterEntry::width() const {
  return std::visit(
      [](const auto& p) -> std::size_t {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RabParams>) {
          return p.ln_gamma.size();
        } else {
          return p.r.size();
        }
      },
      params);
}

std::vector<std::pair<std::string, DiffArray>> AdapterEntry::Parameters() const {
  return std::visit(
      [](const auto& p) -> std::vector<std::pair<std::string, DiffArray>> {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RabParams>) {
          return {{"p_down", p.p_down}, {"p_up", p.p_up}, {"ln_gamma", p.ln_gamma}, {"ln_beta", p.ln_beta}};
        } else {
          return {{"r", p.r}};
        }
      },
      params);
}

std::size_t AdapterEntry::ParameterCount() const {
  std::size_t n = 0;
  for (const auto& [name, a] : Parameters()) n += a.size();
  return n;
}

AdapterEntry AdapterEntry::Clone() const {
  AdapterEntry out{point, params, dropout_p};
  std::visit(
      [](auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RabParams>) {
          p.p_down = p.p_down.Clone(p.p_down.requires_grad());
          p.p_up = p.p_up.Clone(p.p_up.requires_grad());
          p.ln_gamma = p.ln_gamma.Clone(p.ln_gamma.requires_grad());
          p.ln_beta = p.ln_beta.Clone(p.ln_beta.requires_grad());
        } else {
          p.r = p.r.Clone(p.r.requires_grad());
        }
      },
      out.params);
  return out;
}

std::uint64_t AdapterEntry::Digest() const {
  sdadapt::Digest d;
  d.Update(point.ToString());
  for (const auto& [name, a] : Parameters()) {
    d.Update(name);
    d.Update(a.data());
  }
  return d.value();
}

namespace {

void RequireWidth(const DiffArray& h, std::size_t width, const char* what) {
  if (h.rank() != 2 || h.dim(1) != width) {
    throw DimensionError(std::string(what) + ": hidden width " +
                         (h.rank() == 2 ? std::to_string(h.dim(1)) : ShapeString(h.shape())) +
                         " does not match adapter width " + std::to_string(width));
  }
}

}  // namespace

DiffArray ApplyLhuc(const DiffArray& h, const DiffArray& r) {
  RequireWidth(h, r.size(), "lhuc");
  return MulRow(h, Scale(Sigmoid(r), 2.0));
}

DiffArray ApplyHub(const DiffArray& h, const DiffArray& r) {
  RequireWidth(h, r.size(), "hub");
  return AddRow(h, r);
}

DiffArray ApplyRab(const DiffArray& h, const RabParams& theta, double dropout_p, Rng* rng,
                   bool training, double ln_eps) {
  RequireWidth(h, theta.ln_gamma.size(), "rab");
  if (theta.p_down.dim(1) != h.dim(1) || theta.p_up.dim(0) != h.dim(1) ||
      theta.p_up.dim(1) != theta.p_down.dim(0)) {
    throw DimensionError("rab: projection shapes are inconsistent with width " +
                         std::to_string(h.dim(1)));
  }
  if (training && dropout_p > 0.0 && rng == nullptr) throw UsageError("rab: training dropout needs an rng");
  DiffArray inner = MatMulNT(Gelu(MatMulNT(h, theta.p_down)), theta.p_up);
  Rng unused(0);
  inner = Dropout(inner, dropout_p, rng ? *rng : unused, training);
  return Add(h, LayerNorm(inner, theta.ln_gamma, theta.ln_beta, ln_eps));
}

DiffArray ApplyStructured(const DiffArray& h, const RabParams& theta_deficiency,
                          const RabParams& theta_speaker, double dropout_p, Rng* rng,
                          bool training, double ln_eps) {
  DiffArray h_sd = ApplyRab(h, theta_deficiency, dropout_p, rng, training, ln_eps);
  return ApplyRab(h_sd, theta_speaker, dropout_p, rng, training, ln_eps);
}

DiffArray ApplyEntry(const DiffArray& h, const AdapterEntry& entry, Rng* rng, bool training) {
  return std::visit(
      [&](const auto& p) -> DiffArray {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LhucParams>) {
          return ApplyLhuc(h, p.r);
        } else if constexpr (std::is_same_v<T, HubParams>) {
          return ApplyHub(h, p.r);
        } else {
          return ApplyRab(h, p, entry.dropout_p, rng, training);
        }
      },
      entry.params);
}

const AdapterEntry& AdapterBank::Get(const ConditionKey& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ResolutionError("adapter bank has no entry for " + key.ToString());
  return it->second;
}

AdapterEntry& AdapterBank::GetMutable(const ConditionKey& key) {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ResolutionError("adapter bank has no entry for " + key.ToString());
  return it->second;
}

const AdapterEntry& AdapterBank::CreateEntry(const ConditionKey& key, const InsertionPoint& point,
                                             std::size_t width, const AdapterSpec& spec, Rng& rng) {
  spec.Validate();
  if (Contains(key)) throw UsageError("adapter bank already has an entry for " + key.ToString());
  if (width == 0) throw DimensionError("adapter width must be positive");
  AdapterEntry entry;
  entry.point = point;
  entry.dropout_p = spec.dropout_p;
  switch (spec.arch) {
    case AdapterArch::kLhuc:
      entry.params = LhucParams{DiffArray::Zeros({width})};
      break;
    case AdapterArch::kHub:
      entry.params = HubParams{DiffArray::Zeros({width})};
      break;
    case AdapterArch::kRab:
    case AdapterArch::kStructuredRab: {
      const std::size_t k = *spec.bottleneck_k;
      const double bound = std::sqrt(6.0 / static_cast<double>(k + width));
      std::vector<double> down(k * width);
      for (double& v : down) v = rng.Uniform(-bound, bound);
      entry.params = RabParams{DiffArray::FromData({k, width}, std::move(down)),
                               DiffArray::Zeros({width, k}), DiffArray::Filled({width}, 1.0),
                               DiffArray::Zeros({width})};
      break;
    }
  }
  return entries_.emplace(key, std::move(entry)).first->second;
}

void AdapterBank::Insert(const ConditionKey& key, AdapterEntry entry) {
  if (Contains(key)) throw UsageError("adapter bank already has an entry for " + key.ToString());
  entries_.emplace(key, std::move(entry));
}

std::size_t AdapterBank::ParameterCount() const {
  std::size_t n = 0;
  for (const auto& [key, e] : entries_) n += e.ParameterCount();
  return n;
}

std::vector<ConditionKey> AdapterBank::Keys() const {
  std::vector<ConditionKey> out;
  for (const auto& [key, e] : entries_) out.push_back(key);
  return out;
}

std::vector<std::pair<std::string, DiffArray>> AdapterBank::NamedParameters() const {
  std::vector<std::pair<std::string, DiffArray>> out;
  for (const auto& [key, e] : entries_) {
    for (auto& [name, a] : e.Parameters()) out.emplace_back("adapter." + key.ToString() + "." + name, a);
  }
  return out;
}

AdapterBank AdapterBank::Clone() const {
  AdapterBank out;
  for (const auto& [key, e] : entries_) out.entries_.emplace(key, e.Clone());
  return out;
}

std::vector<ConditionKey> RequiredKeys(const AdapterSpec& spec, const std::string& speaker,
                                       const std::string& deficiency, ResolveScope scope) {
  std::vector<ConditionKey> keys;
  switch (spec.granularity) {
    case LabelGranularity::kGlobal:
      keys.push_back(ConditionKey::Global());
      break;
    case LabelGranularity::kDeficiency:
      keys.push_back(ConditionKey::Deficiency(deficiency));
      break;
    case LabelGranularity::kSpeaker:
      keys.push_back(ConditionKey::Speaker(speaker));
      break;
    case LabelGranularity::kSpeakerPlusDeficiency:
      if (scope != ResolveScope::kSpeakerOnly) keys.push_back(ConditionKey::Deficiency(deficiency));
      if (scope != ResolveScope::kDeficiencyOnly) keys.push_back(ConditionKey::Speaker(speaker));
      break;
  }
  return keys;
}

AdapterStack Resolve(const AdapterSpec& spec, const AdapterBank& bank, const std::string& speaker,
                     const std::string& deficiency, ResolveScope scope) {
  AdapterStack stack;
  for (const auto& key : RequiredKeys(spec, speaker, deficiency, scope)) {
    if (!bank.Contains(key)) {
      throw ResolutionError("cannot resolve " + spec.Name() + ": missing adapter entry " +
                            key.ToString());
    }
    stack.push_back({key, bank.Get(key)});
  }
  return stack;
}

InsertionPoint PointFor(const AdapterSpec& spec, const ConditionKey& key) {
  if (spec.arch == AdapterArch::kStructuredRab) {
    return key.kind == ConditionKey::Kind::kDeficiency ? spec.DeficiencyPoint() : spec.SpeakerPoint();
  }
  return spec.positions.front();
}

}  // namespace sdadapt
