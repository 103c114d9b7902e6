// Copyright 2026 The HSC Authors. All Rights Reserved.
//
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


#include "hsc/codec.h"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "hsc/bytes.h"
#include "hsc/error.h"
#include "hsc/grid_coder.h"

namespace hsc {
namespace {

constexpr char kMagic[4] = {'H', 'S', 'C', 'B'};

std::string FormatDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<float> Linspace(int n, double lo, double hi) {
  std::vector<float> out(n);
  for (int i = 0; i < n; ++i) out[i] = static_cast<float>(lo + (hi - lo) * i / (n - 1));
  return out;
}

// Splits an N x (C+1) x h x w head into data and an importance plane in
// (0, C). The sigmoid keeps the plane off the clamp edges, where the
// expansion would pass no gradient.
// Negative slope of every codec activation. Plain ReLUs die early in
// training and leave the decoder stuck.
constexpr double kLeak = 0.1;

TensorF Act(const TensorF& x) { return LeakyRelu(x, kLeak); }

LatentSplit<float> SplitHead(const TensorF& head, int channels, double bound) {
  LatentSplit<float> out;
  out.data = Slice(head, 1, 0, channels);
  if (bound > 0) {
    // b * tanh(y / b) = 2b * sigmoid(2y / b) - b.
    out.data = AddScalar(Scale(Sigmoid(Scale(out.data, 2.0 / bound)), 2.0 * bound), -bound);
  }
  out.importance = Scale(Sigmoid(Slice(head, 1, channels, channels + 1)), channels);
  return out;
}

QuantizedLatent AsGrid(QuantizedLatent q) {
  // N=1 latents are coded as C x h x w volumes.
  Check(q.shape.size() == 4 && q.shape[0] == 1, ErrorKind::kShape, "codec: expected N=1 latent");
  q.shape = Shape{q.shape[1], q.shape[2], q.shape[3]};
  return q;
}

QuantizedLatent AsBatch(QuantizedLatent q) {
  q.shape.insert(q.shape.begin(), 1);
  return q;
}

Codebook CodebookFrom(const std::vector<float>& centers, double sigma) {
  Codebook cb;
  cb.centers.assign(centers.begin(), centers.end());
  cb.sigma = sigma;
  cb.Validate();
  return cb;
}

}  // namespace

// ---------------------------------------------------------------- config

void CodecConfig::Validate() const {
  auto need = [](bool ok, const std::string& what) { Check(ok, ErrorKind::kUsage, "config: " + what); };
  need(c1 >= 1 && c2 >= 1, "c1 and c2 must be >= 1");
  need(l1 >= 2 && l2 >= 2 && l1 <= 64 && l2 <= 64, "codebook sizes must be in [2, 64]");
  need(lambda1 >= 0 && lambda2 >= 0 && w1 >= 0 && w2 >= 0 && alpha >= 0 && beta >= 0,
       "weights must be >= 0");
  need(std::abs(w1 + w2 - 1.0) < 1e-9, "w1 + w2 must equal 1");
  need(target_bpp > 0, "target_bpp must be > 0");
  need(e1_width >= 1 && e2_width >= 1 && e1_blocks >= 0 && e2_blocks >= 0,
       "bad encoder widths");
  need(cond_maps >= 1, "cond_maps must be >= 1");
  need(context_hidden >= 1 && context_layers >= 2, "bad context model size");
  need(sigma > 0, "sigma must be > 0");
  need(latent_bound >= 0, "latent_bound must be >= 0");
  need(mse_weight >= 0 && dpl_weight >= 0 && dpl_scale >= 0 && aux_weight >= 0,
       "distortion weights must be >= 0");
}

std::string CodecConfig::Canonical() const {
  std::map<std::string, std::string> kv = {
      {"c1", std::to_string(c1)},
      {"c2", std::to_string(c2)},
      {"l1", std::to_string(l1)},
      {"l2", std::to_string(l2)},
      {"lambda1", FormatDouble(lambda1)},
      {"lambda2", FormatDouble(lambda2)},
      {"w1", FormatDouble(w1)},
      {"w2", FormatDouble(w2)},
      {"alpha", FormatDouble(alpha)},
      {"beta", FormatDouble(beta)},
      {"target_bpp", FormatDouble(target_bpp)},
      {"seed", std::to_string(seed)},
      {"e1_width", std::to_string(e1_width)},
      {"e1_blocks", std::to_string(e1_blocks)},
      {"e2_width", std::to_string(e2_width)},
      {"e2_blocks", std::to_string(e2_blocks)},
      {"cond_maps", std::to_string(cond_maps)},
      {"context_hidden", std::to_string(context_hidden)},
      {"context_layers", std::to_string(context_layers)},
      {"sigma", FormatDouble(sigma)},
      {"latent_bound", FormatDouble(latent_bound)},
      {"mse_weight", FormatDouble(mse_weight)},
      {"dpl_weight", FormatDouble(dpl_weight)},
      {"dpl_scale", FormatDouble(dpl_scale)},
      {"aux_weight", FormatDouble(aux_weight)},
  };
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

uint64_t CodecConfig::Digest() const {
  const std::string c = Canonical();
  return Fnv1a64({reinterpret_cast<const uint8_t*>(c.data()), c.size()});
}

void CodecConfig::Apply(ConfigReader& r) {
  r.Get("c1", c1);
  r.Get("c2", c2);
  r.Get("l1", l1);
  r.Get("l2", l2);
  r.Get("lambda1", lambda1);
  r.Get("lambda2", lambda2);
  r.Get("w1", w1);
  r.Get("w2", w2);
  r.Get("alpha", alpha);
  r.Get("beta", beta);
  r.Get("target_bpp", target_bpp);
  r.Get("seed", seed);
  r.Get("e1_width", e1_width);
  r.Get("e1_blocks", e1_blocks);
  r.Get("e2_width", e2_width);
  r.Get("e2_blocks", e2_blocks);
  r.Get("cond_maps", cond_maps);
  r.Get("context_hidden", context_hidden);
  r.Get("context_layers", context_layers);
  r.Get("sigma", sigma);
  r.Get("latent_bound", latent_bound);
  r.Get("mse_weight", mse_weight);
  r.Get("dpl_weight", dpl_weight);
  r.Get("dpl_scale", dpl_scale);
  r.Get("aux_weight", aux_weight);
}

CodecConfig ParseCodecConfig(const std::string& canonical) {
  ConfigReader r(ParseKeyValues(canonical));
  CodecConfig c;
  c.Apply(r);
  r.RejectUnknown();
  c.Validate();
  return c;
}

LatentGeometry GeometryFor(int padded_width, int padded_height) {
  Check(padded_width > 0 && padded_height > 0 && padded_width % 32 == 0 &&
            padded_height % 32 == 0,
        ErrorKind::kShape, "codec: image size must be a positive multiple of 32");
  return {padded_width / 8, padded_height / 8, padded_width / 32, padded_height / 32};
}

// ---------------------------------------------------------------- model

HierarchicalModel::HierarchicalModel(const CodecConfig& config) : config_(config) {
  config_.Validate();
  Rng rng(config_.seed);
  const int w = config_.e1_width, v = config_.e2_width;
  const int c1 = config_.c1, c2 = config_.c2;

  e1_down_.emplace_back("e1.down0", 3, w, 5, 2, rng);
  e1_down_.emplace_back("e1.down1", w, w, 5, 2, rng);
  e1_down_.emplace_back("e1.down2", w, w, 5, 2, rng);
  for (int i = 0; i < config_.e1_blocks; ++i) {
    e1_blocks_.emplace_back("e1.res" + std::to_string(i), w, rng, kLeak);
  }
  e1_attn_ = SelfAttention<float>("e1.attn", w, rng);
  e1_head_ = Conv2dLayer<float>("e1.head", w, c1 + 1, 3, 1, rng);

  d1_head_ = Conv2dLayer<float>("d1.head", c1, w, 3, 1, rng);
  for (int i = 0; i < config_.e1_blocks; ++i) {
    d1_blocks_.emplace_back("d1.res" + std::to_string(i), w, rng, kLeak);
  }
  d1_attn_ = SelfAttention<float>("d1.attn", w, rng);
  d1_up_.emplace_back("d1.up0", w, w, 4, 2, rng);
  d1_up_.emplace_back("d1.up1", w, w, 4, 2, rng);
  d1_up_.emplace_back("d1.up2", w, 3, 4, 2, rng);
  // Small output layer: the untrained decoder starts near flat grey.
  for (float& v : d1_up_.back().weight.value.mutable_values()) v *= 0.1f;

  e2_down_.emplace_back("e2.down0", c1, v, 5, 2, rng);
  e2_down_.emplace_back("e2.down1", v, v, 5, 2, rng);
  for (int i = 0; i < config_.e2_blocks; ++i) {
    e2_blocks_.emplace_back("e2.res" + std::to_string(i), v, rng, kLeak);
  }
  e2_attn_ = SelfAttention<float>("e2.attn", v, rng);
  e2_head_ = Conv2dLayer<float>("e2.head", v, c2 + 1, 3, 1, rng);

  d2_head_ = Conv2dLayer<float>("d2.head", c2, v, 3, 1, rng);
  for (int i = 0; i < config_.e2_blocks; ++i) {
    d2_blocks_.emplace_back("d2.res" + std::to_string(i), v, rng, kLeak);
  }
  d2_attn_ = SelfAttention<float>("d2.attn", v, rng);
  d2_up_.emplace_back("d2.up0", v, v, 4, 2, rng);
  d2_up_.emplace_back("d2.up1", v, config_.cond_maps * c1, 4, 2, rng);

  centers1_ = Parameter<float>("codec.centers1", TensorF({config_.l1}, Linspace(config_.l1, -2, 2)));
  centers2_ = Parameter<float>("codec.centers2", TensorF({config_.l2}, Linspace(config_.l2, -2, 2)));

  ContextModelConfig cm1;
  cm1.levels = config_.l1;
  cm1.cond_channels = config_.cond_maps;
  cm1.hidden = config_.context_hidden;
  cm1.layers = config_.context_layers;
  context1_ = ContextModel<float>("ctx1", cm1, rng);
  ContextModelConfig cm2 = cm1;
  cm2.levels = config_.l2;
  cm2.cond_channels = 0;
  context2_ = ContextModel<float>("ctx2", cm2, rng);
}

void HierarchicalModel::Collect(ParamList<float>& out) {
  for (auto& l : e1_down_) l.Collect(out);
  for (auto& b : e1_blocks_) b.Collect(out);
  e1_attn_.Collect(out);
  e1_head_.Collect(out);
  d1_head_.Collect(out);
  for (auto& b : d1_blocks_) b.Collect(out);
  d1_attn_.Collect(out);
  for (auto& l : d1_up_) l.Collect(out);
  for (auto& l : e2_down_) l.Collect(out);
  for (auto& b : e2_blocks_) b.Collect(out);
  e2_attn_.Collect(out);
  e2_head_.Collect(out);
  d2_head_.Collect(out);
  for (auto& b : d2_blocks_) b.Collect(out);
  d2_attn_.Collect(out);
  for (auto& l : d2_up_) l.Collect(out);
  out.push_back(&centers1_);
  out.push_back(&centers2_);
  context1_.Collect(out);
  context2_.Collect(out);
}

void HierarchicalModel::SetPerceptual(FeatureExtractor<float> extractor,
                                      ChannelWeights<float> weights) {
  extractor_ = std::move(extractor);
  dpl_weights_ = std::move(weights);
  has_perceptual_ = true;
}

TensorF HierarchicalModel::EncodeStage1(const TensorF& x, TensorF* importance) const {
  TensorF h = AddScalar(x, -0.5);
  for (const auto& l : e1_down_) h = Act(l(h));
  for (const auto& b : e1_blocks_) h = b(h);
  h = e1_attn_(h);
  LatentSplit<float> split = SplitHead(e1_head_(h), config_.c1, config_.latent_bound);
  *importance = split.importance;
  return split.data;
}

TensorF HierarchicalModel::DecodeStage1(const TensorF& y) const {
  TensorF h = Act(d1_head_(y));
  for (const auto& b : d1_blocks_) h = b(h);
  h = d1_attn_(h);
  for (size_t i = 0; i < d1_up_.size(); ++i) {
    h = d1_up_[i](h);
    if (i + 1 < d1_up_.size()) h = Act(h);
  }
  return AddScalar(h, 0.5);
}

TensorF HierarchicalModel::EncodeStage2(const TensorF& y, TensorF* importance) const {
  TensorF h = y;
  for (const auto& l : e2_down_) h = Act(l(h));
  for (const auto& b : e2_blocks_) h = b(h);
  h = e2_attn_(h);
  LatentSplit<float> split = SplitHead(e2_head_(h), config_.c2, config_.latent_bound);
  *importance = split.importance;
  return split.data;
}

TensorF HierarchicalModel::DecodeStage2(const TensorF& z) const {
  TensorF h = Act(d2_head_(z));
  for (const auto& b : d2_blocks_) h = b(h);
  h = d2_attn_(h);
  h = Act(d2_up_[0](h));
  return d2_up_[1](h);
}

TensorF HierarchicalModel::AsVolume(const TensorF& latent, int maps) const {
  const int64_t n = latent.dim(0), c = latent.dim(1) / maps;
  return Reshape(latent, Shape{n, maps, c, latent.dim(2), latent.dim(3)});
}

Codebook HierarchicalModel::codebook1() const {
  return Codebook::FromTensor(centers1_.value, config_.sigma);
}

Codebook HierarchicalModel::codebook2() const {
  return Codebook::FromTensor(centers2_.value, config_.sigma);
}

LossParts HierarchicalModel::TrainingLoss(const TensorF& x, const TensorF& saliency,
                                          double rate_scale) const {
  Check(x.rank() == 4 && x.dim(1) == 3, ErrorKind::kShape, "train: expected N x 3 x H x W");
  const LatentGeometry g = GeometryFor(static_cast<int>(x.dim(3)), static_cast<int>(x.dim(2)));
  const int64_t n = x.dim(0);
  const double pixels = static_cast<double>(n) * x.dim(2) * x.dim(3);
  const int c1 = config_.c1, c2 = config_.c2;

  TensorF imp1;
  const TensorF y = EncodeStage1(x, &imp1);
  const FusedMask<float> m1 =
      FuseAndExpand(imp1, saliency, config_.lambda1, config_.lambda2, c1);
  std::vector<int32_t> sym1, sym2;
  const TensorF y_q = SoftQuantize(ApplyMask(y, m1.expanded), centers1_.value, config_.sigma, &sym1);
  const TensorF x_hat = DecodeStage1(y_q);

  // Stage 2 and the entropy models see the quantized latent as data.
  const TensorF y_in = y_q.Detach();
  TensorF imp2;
  const TensorF z = EncodeStage2(y_in, &imp2);
  const FusedMask<float> m2 = FuseAndExpand(imp2, TensorF(), 0.0, config_.lambda2, c2);
  const TensorF z_q = SoftQuantize(ApplyMask(z, m2.expanded), centers2_.value, config_.sigma, &sym2);
  const TensorF d2 = DecodeStage2(z_q);
  const TensorF aux = Mse(Slice(d2, 1, 0, c1), y_in);

  const TensorF bits1 =
      context1_.CodeLengths(AsVolume(y_in, 1), AsVolume(d2, config_.cond_maps), sym1);
  const TensorF bits2 =
      context2_.CodeLengths(AsVolume(z_q.Detach(), 1), TensorF(), sym2);
  const TensorF weighted = Scale(Add(Sum(Mul(bits1, m1.expanded)), Sum(Mul(bits2, m2.expanded))),
                                 1.0 / pixels);
  const TensorF stage2 = Scale(Sum(bits2), 1.0 / pixels);
  const TensorF entropy = Add(Scale(Sum(bits1), 1.0 / pixels), stage2);

  DistortionSpec<float> spec;
  spec.w1 = config_.w1;
  spec.w2 = config_.w2;
  spec.mse_weight = config_.mse_weight;
  spec.dpl_weight = has_perceptual_ ? config_.dpl_weight * config_.dpl_scale : 0.0;
  spec.extractor = has_perceptual_ ? &extractor_ : nullptr;
  spec.weights = has_perceptual_ ? &dpl_weights_ : nullptr;
  const TensorF sal = saliency.defined() ? saliency : TensorF(Shape{n, 1, g.h1, g.w1});
  const TensorF dist = WeightedDistortion(x, x_hat, sal, spec);

  LossParts parts;
  parts.rate_bpp = weighted[0];
  parts.entropy_bpp = entropy[0];
  parts.stage2_bpp = stage2[0];
  parts.distortion = dist[0];
  parts.aux = aux[0];
  {
    int64_t kept = 0;
    for (float v : m1.expanded.values()) kept += v > 0;
    parts.kept_fraction = static_cast<double>(kept) / m1.expanded.size();
  }
  {
    NoGradGuard ng;
    parts.mse = Mse(x, x_hat)[0];
    if (has_perceptual_) {
      parts.dpl = Mean(Dpl(x, x_hat, extractor_, dpl_weights_))[0];
    }
  }
  // max(t, R): below the target the rate term is a constant.
  TensorF rate_term = weighted;
  if (parts.rate_bpp < config_.target_bpp) {
    rate_term = TensorF::FromScalar(static_cast<float>(config_.target_bpp));
    parts.rate_clipped = true;
  }
  parts.loss = Add(Add(Scale(rate_term, config_.alpha * rate_scale), Scale(dist, config_.beta)),
                   Add(Scale(aux, config_.aux_weight), entropy));
  return parts;
}

TensorF HierarchicalModel::Reconstruct(const TensorF& x, const TensorF& saliency) const {
  NoGradGuard ng;
  TensorF imp;
  const TensorF y = EncodeStage1(x, &imp);
  const FusedMask<float> m =
      FuseAndExpand(imp, saliency, config_.lambda1, config_.lambda2, config_.c1);
  const TensorF ym = ApplyMask(y, m.expanded);
  const Codebook cb = codebook1();
  return DecodeStage1(Dequantize<float>(QuantizeForward(ym, cb), cb));
}

void HierarchicalModel::Save(Checkpoint& ckpt) {
  ParamList<float> params;
  Collect(params);
  AppendParameters<float>(params, ckpt);
  if (has_perceptual_) AppendExtractor(extractor_, dpl_weights_, ckpt);
  char digest[32];
  std::snprintf(digest, sizeof(digest), "%016" PRIx64, config_.Digest());
  ckpt.metadata = std::string("digest=") + digest + "\n" + config_.Canonical();
}

HierarchicalModel HierarchicalModel::Load(const Checkpoint& ckpt) {
  KeyValues kv = ParseKeyValues(ckpt.metadata);
  auto it = kv.find("digest");
  Check(it != kv.end(), ErrorKind::kFormat, "checkpoint has no config digest");
  const std::string recorded = it->second;
  kv.erase(it);
  CodecConfig config;
  try {
    ConfigReader r(kv);
    config.Apply(r);
    r.RejectUnknown();
    config.Validate();
  } catch (const Error& e) {
    Fail(ErrorKind::kFormat, std::string("checkpoint config: ") + e.what());
  }
  char digest[32];
  std::snprintf(digest, sizeof(digest), "%016" PRIx64, config.Digest());
  Check(recorded == digest, ErrorKind::kFormat,
        "checkpoint digest " + recorded + " does not match its config (" + digest + ")");
  HierarchicalModel model(config);
  ParamList<float> params;
  model.Collect(params);
  RestoreParameters<float>(ckpt, params);
  if (ckpt.Find("dpl.block0.weight")) {
    FeatureExtractor<float> ex;
    ChannelWeights<float> w;
    RestoreExtractor(ckpt, ex, w);
    model.SetPerceptual(std::move(ex), std::move(w));
  }
  return model;
}

// ---------------------------------------------------------------- distortion

template <typename T>
Tensor<T> WeightedDistortion(const Tensor<T>& x, const Tensor<T>& xhat,
                             const Tensor<T>& saliency, const DistortionSpec<T>& spec) {
  Check(x.shape() == xhat.shape() && x.rank() == 4, ErrorKind::kShape,
        "weighted_distortion: image shapes differ");
  Check(saliency.rank() == 4 && saliency.dim(0) == x.dim(0) && saliency.dim(1) == 1 &&
            saliency.dim(2) * 8 == x.dim(2) && saliency.dim(3) * 8 == x.dim(3),
        ErrorKind::kShape, "weighted_distortion: saliency must be N x 1 x H/8 x W/8");
  const bool use_dpl = spec.dpl_weight > 0;
  Check(!use_dpl || (spec.extractor && spec.weights), ErrorKind::kUsage,
        "weighted_distortion: dpl requested without an extractor");
  const Tensor<T> s = UpsampleNearest(saliency, 8);
  const Tensor<T> inv = AddScalar(Scale(s, -1.0), 1.0);
  auto D = [&](const Tensor<T>& a, const Tensor<T>& b) {
    Tensor<T> d = Scale(Mse(a, b), spec.mse_weight);
    if (use_dpl) {
      d = Add(d, Scale(Mean(Dpl(a, b, *spec.extractor, *spec.weights)), spec.dpl_weight));
    }
    return d;
  };
  Tensor<T> out = Scale(D(Mul(x, s), Mul(xhat, s)), spec.w1);
  return Add(out, Scale(D(Mul(x, inv), Mul(xhat, inv)), spec.w2));
}

template TensorF WeightedDistortion<float>(const TensorF&, const TensorF&, const TensorF&,
                                           const DistortionSpec<float>&);
template TensorD WeightedDistortion<double>(const TensorD&, const TensorD&, const TensorD&,
                                            const DistortionSpec<double>&);

// ---------------------------------------------------------------- bitstream

double Bitstream::bpp() const {
  return static_cast<double>(payload_bits()) / (static_cast<double>(width) * height);
}

double Bitstream::stage2_share() const {
  const uint64_t total = payload_bits();
  return total == 0 ? 0.0 : static_cast<double>(stage2.declared_bits) / total;
}

std::vector<uint8_t> SerializeBitstream(const Bitstream& bs) {
  ByteWriter w;
  for (char c : kMagic) w.U8(static_cast<uint8_t>(c));
  w.U16(bs.version);
  w.U32(bs.width);
  w.U32(bs.height);
  w.U64(bs.digest);
  for (const auto* centers : {&bs.centers1, &bs.centers2}) {
    w.U16(static_cast<uint16_t>(centers->size()));
    for (float c : *centers) w.F32(c);
  }
  WritePayload(bs.stage2, w);
  WritePayload(bs.stage1, w);
  return w.Take();
}

Bitstream ParseBitstream(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  Bitstream bs;
  for (char c : kMagic) {
    Check(r.remaining() > 0 && r.U8() == static_cast<uint8_t>(c), ErrorKind::kFormat,
          "bitstream: bad magic");
  }
  bs.version = r.U16();
  Check(bs.version == Bitstream::kVersion, ErrorKind::kFormat,
        "bitstream: unsupported version " + std::to_string(bs.version));
  bs.width = r.U32();
  bs.height = r.U32();
  Check(bs.width > 0 && bs.height > 0, ErrorKind::kFormat, "bitstream: empty image");
  bs.digest = r.U64();
  for (auto* centers : {&bs.centers1, &bs.centers2}) {
    const uint16_t n = r.U16();
    Check(n >= 2 && n <= 64, ErrorKind::kFormat, "bitstream: bad codebook size");
    centers->resize(n);
    for (float& c : *centers) c = r.F32();
  }
  bs.stage2 = ReadPayload(r);
  bs.stage1 = ReadPayload(r);
  Check(r.remaining() == 0, ErrorKind::kFormat, "bitstream: trailing bytes");
  return bs;
}

// ---------------------------------------------------------------- coding

std::vector<uint8_t> Compress(const HierarchicalModel& model, const Image& image,
                              const SaliencyMask* saliency, CodecAudit* audit) {
  NoGradGuard ng;
  const CodecConfig& cfg = model.config_;
  Check(image.width > 0 && image.height > 0, ErrorKind::kShape, "compress: empty image");
  const Image padded = ReflectPad(image, 32);
  const LatentGeometry g = GeometryFor(padded.width, padded.height);
  const Image* batch[] = {&padded};
  const TensorF x = ImagesToTensor<float>(batch);

  TensorF imp1;
  const TensorF y = model.EncodeStage1(x, &imp1);
  TensorF sal;
  SaliencyMask fitted;
  if (saliency) {
    Check(saliency->width == (image.width + 7) / 8 && saliency->height == (image.height + 7) / 8,
          ErrorKind::kShape, "compress: saliency mask must be ceil(W/8) x ceil(H/8)");
    fitted = FitSaliency(*saliency, g.w1, g.h1);
    const SaliencyMask* masks[] = {&fitted};
    sal = SaliencyTensor<float>(masks);
  }
  const FusedMask<float> m1 = FuseAndExpand(imp1, sal, cfg.lambda1, cfg.lambda2, cfg.c1);
  const Codebook cb1 = model.codebook1(), cb2 = model.codebook2();
  const QuantizedLatent q1 = QuantizeForward(ApplyMask(y, m1.expanded), cb1, 1);

  TensorF imp2;
  const TensorF z = model.EncodeStage2(Dequantize<float>(q1, cb1), &imp2);
  const FusedMask<float> m2 = FuseAndExpand(imp2, TensorF(), 0.0, cfg.lambda2, cfg.c2);
  const QuantizedLatent q2 = QuantizeForward(ApplyMask(z, m2.expanded), cb2, 2);

  Bitstream bs;
  bs.width = static_cast<uint32_t>(image.width);
  bs.height = static_cast<uint32_t>(image.height);
  bs.digest = cfg.Digest();
  bs.centers1.assign(model.centers1_.value.values().begin(), model.centers1_.value.values().end());
  bs.centers2.assign(model.centers2_.value.values().begin(), model.centers2_.value.values().end());

  GridCodingStats st2, st1;
  st1.keep_symbol_bits = audit != nullptr;
  bs.stage2 = EncodeGrid<float>(model.context2_, AsGrid(q2), {}, bs.centers2, &st2);
  // The decoder rebuilds this conditioning from the decoded stage 2 alone.
  const TensorF cond = model.DecodeStage2(Dequantize<float>(q2, cb2));
  bs.stage1 = EncodeGrid<float>(model.context1_, AsGrid(q1), cond.values(), bs.centers1, &st1);

  if (audit) {
    audit->padded_width = padded.width;
    audit->padded_height = padded.height;
    audit->stage1 = AsGrid(q1);
    audit->stage2 = AsGrid(q2);
    const int64_t sites = static_cast<int64_t>(g.w1) * g.h1;
    audit->stage1_site_bits.assign(sites, 0.0);
    for (size_t i = 0; i < st1.symbol_bits.size(); ++i) {
      audit->stage1_site_bits[i % sites] += st1.symbol_bits[i];
    }
    audit->saliency = saliency ? fitted.grid : std::vector<uint8_t>(sites, 0);
    audit->plane.assign(m1.plane.values().begin(), m1.plane.values().end());
    audit->kept_stage1 = 0;
    for (float v : m1.expanded.values()) audit->kept_stage1 += v > 0 ? 1 : 0;
    audit->stage1_model_bits = st1.model_bits;
    audit->stage2_model_bits = st2.model_bits;
    audit->stream = bs;
  }
  return SerializeBitstream(bs);
}

Image Decompress(const HierarchicalModel& model, std::span<const uint8_t> bytes,
                 CodecAudit* audit) {
  NoGradGuard ng;
  const CodecConfig& cfg = model.config_;
  const Bitstream bs = ParseBitstream(bytes);
  char want[32], got[32];
  std::snprintf(want, sizeof(want), "%016" PRIx64, cfg.Digest());
  std::snprintf(got, sizeof(got), "%016" PRIx64, bs.digest);
  Check(bs.digest == cfg.Digest(), ErrorKind::kFormat,
        std::string("config digest mismatch: stream ") + got + ", checkpoint " + want);
  Check(static_cast<int>(bs.centers1.size()) == cfg.l1 &&
            static_cast<int>(bs.centers2.size()) == cfg.l2,
        ErrorKind::kFormat, "bitstream codebook sizes do not match the model");
  const int pw = (static_cast<int>(bs.width) + 31) / 32 * 32;
  const int ph = (static_cast<int>(bs.height) + 31) / 32 * 32;
  const LatentGeometry g = GeometryFor(pw, ph);
  const Codebook cb1 = CodebookFrom(bs.centers1, cfg.sigma);
  const Codebook cb2 = CodebookFrom(bs.centers2, cfg.sigma);

  QuantizedLatent q2 = DecodeGrid<float>(model.context2_, bs.stage2, Shape{cfg.c2, g.h2, g.w2},
                                         {}, bs.centers2);
  q2.codebook_id = 2;
  const TensorF cond = model.DecodeStage2(Dequantize<float>(AsBatch(q2), cb2));
  QuantizedLatent q1 = DecodeGrid<float>(model.context1_, bs.stage1, Shape{cfg.c1, g.h1, g.w1},
                                         cond.values(), bs.centers1);
  q1.codebook_id = 1;
  const TensorF x_hat = model.DecodeStage1(Dequantize<float>(AsBatch(q1), cb1));
  Image out = TensorToImage(Clamp(x_hat, 0.0, 1.0), 0);
  if (audit) {
    audit->padded_width = pw;
    audit->padded_height = ph;
    audit->stage1 = q1;
    audit->stage2 = q2;
    audit->stream = bs;
  }
  return Crop(out, static_cast<int>(bs.width), static_cast<int>(bs.height));
}

}  // namespace hsc
