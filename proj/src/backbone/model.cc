// backbone/model.cc

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

#include "sdadapt/backbone/model.h"

#include <cmath>

#include "sdadapt/base/digest.h"
#include "sdadapt/base/error.h"
#include "sdadapt/diffcore/ops.h"

namespace sdadapt {

namespace {

DiffArray XavierUniform(std::size_t out, std::size_t in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  std::vector<double> v(out * in);
  for (double& x : v) x = rng.Uniform(-bound, bound);
  return DiffArray::FromData({out, in}, std::move(v), true);
}

DiffArray Linear(const DiffArray& x, const DiffArray& weight, const DiffArray& bias) {
  return AddRow(MatMulNT(x, weight), bias);
}

std::string BlockName(std::size_t b, const char* leaf) {
  return "block." + std::to_string(b) + "." + leaf;
}

}  // namespace

BackboneModel::BackboneModel(BackboneConfig config) : config_(std::move(config)) {
  config_.Validate();
  Rng rng(config_.init_seed);
  std::size_t cin = 1;
  for (std::size_t i = 0; i < config_.conv_layers.size(); ++i) {
    const auto& l = config_.conv_layers[i];
    std::vector<double> k(l.out_channels * l.kernel * cin);
    for (double& x : k) x = rng.Normal(0.0, 0.02);
    const std::string p = "conv." + std::to_string(i) + ".";
    Register(p + "kernel", DiffArray::FromData({l.out_channels, l.kernel, cin}, std::move(k), true));
    Register(p + "bias", DiffArray::Zeros({l.out_channels}, true));
    cin = l.out_channels;
  }
  const std::size_t d = config_.d_model;
  Register("feature.ln.gamma", DiffArray::Filled({cin}, 1.0, true));
  Register("feature.ln.beta", DiffArray::Zeros({cin}, true));
  Register("feature.proj.weight", XavierUniform(d, cin, rng));
  Register("feature.proj.bias", DiffArray::Zeros({d}, true));
  for (std::size_t b = 0; b < config_.n_blocks; ++b) {
    Register(BlockName(b, "ln1.gamma"), DiffArray::Filled({d}, 1.0, true));
    Register(BlockName(b, "ln1.beta"), DiffArray::Zeros({d}, true));
    for (const char* w : {"q", "k", "v", "o"}) {
      Register(BlockName(b, (std::string("attn.w") + w).c_str()), XavierUniform(d, d, rng));
      Register(BlockName(b, (std::string("attn.b") + w).c_str()), DiffArray::Zeros({d}, true));
    }
    Register(BlockName(b, "ln2.gamma"), DiffArray::Filled({d}, 1.0, true));
    Register(BlockName(b, "ln2.beta"), DiffArray::Zeros({d}, true));
    Register(BlockName(b, "ffn.w1"), XavierUniform(config_.d_ff, d, rng));
    Register(BlockName(b, "ffn.b1"), DiffArray::Zeros({config_.d_ff}, true));
    Register(BlockName(b, "ffn.w2"), XavierUniform(d, config_.d_ff, rng));
    Register(BlockName(b, "ffn.b2"), DiffArray::Zeros({d}, true));
  }
  Register("final_ln.gamma", DiffArray::Filled({d}, 1.0, true));
  Register("final_ln.beta", DiffArray::Zeros({d}, true));
  Register("ctc_head.weight", XavierUniform(config_.vocab_size, d, rng));
  Register("ctc_head.bias", DiffArray::Zeros({config_.vocab_size}, true));
}

DiffArray& BackboneModel::Register(std::string name, DiffArray value) {
  if (index_.count(name)) throw UsageError("duplicate parameter name " + name);
  index_.emplace(name, params_.size());
  params_.push_back({std::move(name), std::move(value)});
  return params_.back().value;
}

const DiffArray& BackboneModel::param(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("unknown parameter " + std::string(name));
  return params_[it->second].value;
}

bool BackboneModel::HasParam(std::string_view name) const { return index_.find(name) != index_.end(); }

std::size_t BackboneModel::ParameterCount() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

std::uint64_t BackboneModel::Digest() const {
  sdadapt::Digest d;
  for (const auto& p : params_) {
    d.Update(p.name);
    for (std::size_t s : p.value.shape()) d.Update(static_cast<std::uint64_t>(s));
    d.Update(p.value.data());
  }
  return d.value();
}

BackboneModel BackboneModel::Clone() const {
  BackboneModel out(*this);
  for (auto& p : out.params_) p.value = p.value.Clone(p.value.requires_grad());
  return out;
}

void BackboneModel::SetParameter(std::string_view name, const Shape& shape, std::vector<double> values) {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("unknown parameter " + std::string(name));
  DiffArray& dst = params_[it->second].value;
  if (dst.shape() != shape || values.size() != dst.size()) {
    throw DimensionError("parameter " + std::string(name) + " expects shape " +
                         ShapeString(dst.shape()) + ", got " + ShapeString(shape));
  }
  auto out = dst.mutable_data();
  std::copy(values.begin(), values.end(), out.begin());
}

std::vector<NamedParameter> NamedParameters(const BackboneModel& model, const AdapterBank* bank,
                                            ParamFilter filter) {
  std::vector<NamedParameter> out = model.parameters();
  if (filter == ParamFilter::kAll && bank != nullptr) {
    for (auto& [name, a] : bank->NamedParameters()) out.push_back({name, a});
  }
  return out;
}

std::vector<double> SinusoidalPositions(std::size_t frames, std::size_t width) {
  std::vector<double> pe(frames * width);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t i = 0; i < width; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(width));
      const double angle = static_cast<double>(t) * rate;
      pe[t * width + i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

namespace {

DiffArray ApplyAdaptersAt(const DiffArray& h, const InsertionPoint& point, const AdapterStack& stack,
                          bool training, Rng* rng) {
  DiffArray out = h;
  for (const auto& item : stack) {
    if (item.entry.point != point) continue;
    if (item.entry.width() != h.dim(1)) {
      throw ConfigError("adapter " + item.key.ToString() + " has width " +
                        std::to_string(item.entry.width()) + " but " + point.ToString() +
                        " carries width " + std::to_string(h.dim(1)));
    }
    out = ApplyEntry(out, item.entry, rng, training);
  }
  return out;
}

DiffArray SelfAttention(const BackboneModel& m, std::size_t b, const DiffArray& x) {
  const auto& cfg = m.config();
  auto P = [&](const char* leaf) -> const DiffArray& { return m.param(BlockName(b, leaf)); };
  DiffArray q = Linear(x, P("attn.wq"), P("attn.bq"));
  DiffArray k = Linear(x, P("attn.wk"), P("attn.bk"));
  DiffArray v = Linear(x, P("attn.wv"), P("attn.bv"));
  const std::size_t dh = cfg.d_model / cfg.n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<DiffArray> heads;
  heads.reserve(cfg.n_heads);
  for (std::size_t h = 0; h < cfg.n_heads; ++h) {
    DiffArray qh = SliceCols(q, h * dh, dh);
    DiffArray kh = SliceCols(k, h * dh, dh);
    DiffArray vh = SliceCols(v, h * dh, dh);
    DiffArray attn = Softmax(Scale(MatMulNT(qh, kh), scale));
    heads.push_back(MatMul(attn, vh));
  }
  DiffArray ctx = cfg.n_heads == 1 ? heads[0] : ConcatCols(heads);
  return Linear(ctx, P("attn.wo"), P("attn.bo"));
}

}  // namespace

DiffArray EncodeCnn(const BackboneModel& model, std::span<const double> waveform) {
  const auto& cfg = model.config();
  if (cfg.OutputFrames(waveform.size()) < 1) {
    throw InputError("waveform of " + std::to_string(waveform.size()) +
                     " samples is shorter than the encoder's minimum of " +
                     std::to_string(cfg.MinSamples()));
  }
  // Per-utterance standardization of the raw samples.
  double mean = 0.0;
  for (double s : waveform) mean += s;
  mean /= static_cast<double>(waveform.size());
  double var = 0.0;
  for (double s : waveform) var += (s - mean) * (s - mean);
  var /= static_cast<double>(waveform.size());
  const double inv = 1.0 / std::sqrt(var + 1e-7);
  std::vector<double> norm(waveform.size());
  for (std::size_t i = 0; i < norm.size(); ++i) norm[i] = (waveform[i] - mean) * inv;

  const std::size_t samples = norm.size();
  DiffArray h = DiffArray::FromData({samples, 1}, std::move(norm));
  for (std::size_t i = 0; i < cfg.conv_layers.size(); ++i) {
    const std::string p = "conv." + std::to_string(i) + ".";
    h = Gelu(Conv1d(h, model.param(p + "kernel"), model.param(p + "bias"), cfg.conv_layers[i].stride));
  }
  return h;
}

DiffArray EncodeFromCnn(const BackboneModel& model, const DiffArray& cnn_out, const AdapterStack& stack,
                        bool training, Rng* rng) {
  const auto& cfg = model.config();
  if (training && cfg.dropout_p > 0.0 && rng == nullptr) {
    throw UsageError("encode: training with dropout requires an rng");
  }
  for (const auto& item : stack) item.entry.point.Validate(cfg);
  Rng unused(0);
  Rng& drop_rng = rng ? *rng : unused;

  DiffArray h = ApplyAdaptersAt(cnn_out, InsertionPoint::AfterCnnEncoder(), stack, training, rng);
  h = LayerNorm(h, model.param("feature.ln.gamma"), model.param("feature.ln.beta"), cfg.ln_eps);
  h = Linear(h, model.param("feature.proj.weight"), model.param("feature.proj.bias"));
  const std::size_t frames = h.dim(0);
  h = Add(h, DiffArray::FromData({frames, cfg.d_model}, SinusoidalPositions(frames, cfg.d_model)));
  h = Dropout(h, cfg.dropout_p, drop_rng, training);

  for (std::size_t b = 0; b < cfg.n_blocks; ++b) {
    auto P = [&](const char* leaf) -> const DiffArray& { return model.param(BlockName(b, leaf)); };
    DiffArray a = LayerNorm(h, P("ln1.gamma"), P("ln1.beta"), cfg.ln_eps);
    DiffArray y = Add(h, Dropout(SelfAttention(model, b, a), cfg.dropout_p, drop_rng, training));
    DiffArray f = LayerNorm(y, P("ln2.gamma"), P("ln2.beta"), cfg.ln_eps);
    f = Linear(Gelu(Linear(f, P("ffn.w1"), P("ffn.b1"))), P("ffn.w2"), P("ffn.b2"));
    h = Add(y, Dropout(f, cfg.dropout_p, drop_rng, training));
    h = ApplyAdaptersAt(h, InsertionPoint::InBlock(b), stack, training, rng);
  }

  h = LayerNorm(h, model.param("final_ln.gamma"), model.param("final_ln.beta"), cfg.ln_eps);
  return LogSoftmax(Linear(h, model.param("ctc_head.weight"), model.param("ctc_head.bias")));
}

DiffArray Encode(const BackboneModel& model, std::span<const double> waveform,
                 const AdapterStack& stack, bool training, Rng* rng) {
  if (training && model.config().dropout_p > 0.0 && rng == nullptr) {
    throw UsageError("encode: training with dropout requires an rng");
  }
  return EncodeFromCnn(model, EncodeCnn(model, waveform), stack, training, rng);
}

}  // namespace sdadapt
