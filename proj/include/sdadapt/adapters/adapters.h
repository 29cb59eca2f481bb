// adapters/adapters.h

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

#ifndef SDADAPT_ADAPTERS_ADAPTERS_H_
#define SDADAPT_ADAPTERS_ADAPTERS_H_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "sdadapt/backbone/config.h"
#include "sdadapt/base/random.h"
#include "sdadapt/diffcore/array.h"

namespace sdadapt {

enum class AdapterArch { kLhuc, kHub, kRab, kStructuredRab };
enum class LabelGranularity { kGlobal, kDeficiency, kSpeaker, kSpeakerPlusDeficiency };

std::string ToString(AdapterArch arch);
std::string ToString(LabelGranularity granularity);
AdapterArch ParseAdapterArch(const std::string& text);
LabelGranularity ParseLabelGranularity(const std::string& text);

/// Architecture, position and label recipe of one adapted system.
/// positions holds one point, or (deficiency point, speaker point) for the
/// structured cascade.
struct AdapterSpec {
  AdapterArch arch = AdapterArch::kRab;
  std::vector<InsertionPoint> positions = {InsertionPoint::AfterCnnEncoder()};
  LabelGranularity granularity = LabelGranularity::kSpeaker;
  std::optional<std::size_t> bottleneck_k = 16;
  double dropout_p = 0.1;

  void Validate() const;
  void Validate(const BackboneConfig& backbone) const;
  bool UsesDeficiency() const;
  bool UsesSpeaker() const;
  const InsertionPoint& DeficiencyPoint() const { return positions.front(); }
  const InsertionPoint& SpeakerPoint() const { return positions.back(); }
  // Compact label such as "rab/spk@0" or "srab/spk+defi@0,2".
  std::string Name() const;
};

void to_json(nlohmann::json& j, const AdapterSpec& s);
void from_json(const nlohmann::json& j, AdapterSpec& s);

/// Presets mirroring the large-model bottleneck sizes (k = 256 for both
/// adapters on the dysarthric task, 128 for the speaker adapter on the
/// elderly task). Not used by default at desk scale.
inline constexpr std::size_t kLargeModelDeficiencyBottleneck = 256;
inline constexpr std::size_t kLargeModelSpeakerBottleneckDysarthric = 256;
inline constexpr std::size_t kLargeModelSpeakerBottleneckElderly = 128;

struct ConditionKey {
  enum class Kind { kGlobal, kDeficiency, kSpeaker };
  Kind kind = Kind::kGlobal;
  std::string label;  // empty for kGlobal

  static ConditionKey Global() { return {}; }
  static ConditionKey Deficiency(std::string severity) { return {Kind::kDeficiency, std::move(severity)}; }
  static ConditionKey Speaker(std::string speaker) { return {Kind::kSpeaker, std::move(speaker)}; }

  // "global", "defi:VL", "spk:S05"
  std::string ToString() const;
  static ConditionKey Parse(const std::string& text);

  auto operator<=>(const ConditionKey&) const = default;
};

struct LhucParams {
  DiffArray r;  // [m], ξ(r) = 2σ(r) scales each hidden unit
};

struct HubParams {
  DiffArray r;  // [m], added to each hidden unit
};

struct RabParams {
  DiffArray p_down;    // [k×m]
  DiffArray p_up;      // [m×k]
  DiffArray ln_gamma;  // [m]
  DiffArray ln_beta;   // [m]
};

using AdapterParams = std::variant<LhucParams, HubParams, RabParams>;

struct AdapterEntry {
  InsertionPoint point;
  AdapterParams params;
  double dropout_p = 0.0;

  AdapterArch arch() const;
  std::size_t width() const;
  std::size_t ParameterCount() const;
  // Parameter arrays with their short names ("r", "p_down", ...).
  std::vector<std::pair<std::string, DiffArray>> Parameters() const;
  AdapterEntry Clone() const;
  std::uint64_t Digest() const;
};

// h[T×m] ⊙ 2σ(r)
DiffArray ApplyLhuc(const DiffArray& h, const DiffArray& r);
// h[T×m] + r
DiffArray ApplyHub(const DiffArray& h, const DiffArray& r);
// h + LN(DP(ζ(h·P_dᵀ)·P_uᵀ)), per frame
DiffArray ApplyRab(const DiffArray& h, const RabParams& theta, double dropout_p, Rng* rng,
                   bool training, double ln_eps = 1e-5);
// Deficiency adapter first, then the speaker adapter on its output.
DiffArray ApplyStructured(const DiffArray& h, const RabParams& theta_deficiency,
                          const RabParams& theta_speaker, double dropout_p, Rng* rng,
                          bool training, double ln_eps = 1e-5);
DiffArray ApplyEntry(const DiffArray& h, const AdapterEntry& entry, Rng* rng, bool training);

/// Label-indexed adapter parameters.
class AdapterBank {
 public:
  bool Contains(const ConditionKey& key) const { return entries_.count(key) > 0; }
  const AdapterEntry& Get(const ConditionKey& key) const;
  AdapterEntry& GetMutable(const ConditionKey& key);

  /// Adds an identity-initialized entry of the spec's architecture. RAB
  /// down-projections are drawn Xavier-uniform from `rng`; everything that
  /// feeds the output starts at zero so the adapter is an exact identity.
  /// Throws UsageError if the key already exists.
  const AdapterEntry& CreateEntry(const ConditionKey& key, const InsertionPoint& point,
                                  std::size_t width, const AdapterSpec& spec, Rng& rng);
  void Insert(const ConditionKey& key, AdapterEntry entry);
  void Erase(const ConditionKey& key) { entries_.erase(key); }

  const std::map<ConditionKey, AdapterEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t ParameterCount() const;
  std::vector<ConditionKey> Keys() const;

  /// "adapter.<key>.<param>" names, in key order.
  std::vector<std::pair<std::string, DiffArray>> NamedParameters() const;
  AdapterBank Clone() const;

 private:
  std::map<ConditionKey, AdapterEntry> entries_;
};

struct StackItem {
  ConditionKey key;
  AdapterEntry entry;
};

/// Adapters to run during one forward pass, applied in order at their
/// insertion points.
using AdapterStack = std::vector<StackItem>;

enum class ResolveScope { kAll, kDeficiencyOnly, kSpeakerOnly };

/// Builds the stack for one utterance. SpeakerPlusDeficiency yields the
/// deficiency entry before the speaker entry. Throws ResolutionError naming
/// the absent key.
AdapterStack Resolve(const AdapterSpec& spec, const AdapterBank& bank, const std::string& speaker,
                     const std::string& deficiency, ResolveScope scope = ResolveScope::kAll);

/// Keys the spec needs for (speaker, deficiency), in application order.
std::vector<ConditionKey> RequiredKeys(const AdapterSpec& spec, const std::string& speaker,
                                       const std::string& deficiency,
                                       ResolveScope scope = ResolveScope::kAll);

/// Point at which the entry for `key` lives under `spec`.
InsertionPoint PointFor(const AdapterSpec& spec, const ConditionKey& key);

}  // namespace sdadapt

#endif  // SDADAPT_ADAPTERS_ADAPTERS_H_
