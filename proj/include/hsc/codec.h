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


#ifndef HSC_CODEC_H_
#define HSC_CODEC_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hsc/arith_coder.h"
#include "hsc/checkpoint.h"
#include "hsc/config.h"
#include "hsc/context_model.h"
#include "hsc/image.h"
#include "hsc/masking.h"
#include "hsc/nn.h"
#include "hsc/perceptual.h"
#include "hsc/quantizer.h"

namespace hsc {

// Everything that shapes the model or its objective. The digest covers
// every field, so a checkpoint and a bitstream agree only when they come
// from the same configuration.
struct CodecConfig {
  int c1 = 32;  // stage-1 bottleneck channels
  int c2 = 8;   // stage-2 bottleneck channels
  int l1 = 6;   // codebook sizes
  int l2 = 6;
  double lambda1 = 1.0;  // saliency weight in the stage-1 mask
  double lambda2 = 1.0;  // importance weight
  double w1 = 0.75;      // salient / non-salient distortion weights
  double w2 = 0.25;
  double alpha = 1.0;  // rate weight
  double beta = 1000.0;  // distortion weight
  double target_bpp = 0.4;
  uint64_t seed = 1;

  // Architecture.
  int e1_width = 48;
  int e1_blocks = 2;
  int e2_width = 32;
  int e2_blocks = 1;
  int cond_maps = 1;  // D2 output maps per stage-1 channel
  int context_hidden = 16;
  int context_layers = 3;
  double sigma = 1.0;  // soft quantization temperature
  // Encoder outputs pass through b * tanh(y / b); 0 disables. Keeps latents
  // where the soft quantizer still has gradient.
  double latent_bound = 2.5;

  // Objective details.
  double mse_weight = 0.9;  // base distortion: mse_weight * mse + dpl_weight * dpl
  double dpl_weight = 0.1;
  double dpl_scale = 0.01;  // brings dpl to the magnitude of pixel mse
  double aux_weight = 1.0;  // mse(y~, D2(z~)) weight

  void Validate() const;
  // Sorted key=value lines, with doubles printed round-trip exact.
  std::string Canonical() const;
  uint64_t Digest() const;
  // Applies the keys this config owns; others are left in the reader.
  void Apply(ConfigReader& reader);
};

CodecConfig ParseCodecConfig(const std::string& canonical);

// Stage-1 and stage-2 latent geometry for an image of padded size W x H.
struct LatentGeometry {
  int w1 = 0, h1 = 0;  // W/8, H/8
  int w2 = 0, h2 = 0;  // W/32, H/32
};
LatentGeometry GeometryFor(int padded_width, int padded_height);

// Loss pieces of one training forward pass, already reduced over the batch.
struct LossParts {
  Tensor<float> loss;
  double rate_bpp = 0;           // mask-weighted rate, the clipped term
  double entropy_bpp = 0;        // unweighted cross-entropy of all symbols
  double stage2_bpp = 0;         // unweighted, stage 2 only
  double distortion = 0;         // saliency-weighted base distortion
  double mse = 0;                // plain pixel mse, [0, 1] scale
  double dpl = 0;                // unweighted-by-saliency dpl of the batch
  double aux = 0;
  double kept_fraction = 0;      // stage-1 mask entries that keep their symbol
  bool rate_clipped = false;     // batch rate fell below the target
};

struct CodecAudit;

// The two-stage model: E1/D1 around the stage-1 bottleneck, E2/D2 around
// the stage-2 bottleneck, a learned codebook per stage and an
// auto-regressive context model per stage.
class HierarchicalModel {
 public:
  HierarchicalModel() = default;
  explicit HierarchicalModel(const CodecConfig& config);

  const CodecConfig& config() const { return config_; }
  void Collect(ParamList<float>& out);

  // Frozen feature extractor for the dpl part of the distortion.
  void SetPerceptual(FeatureExtractor<float> extractor, ChannelWeights<float> weights);
  bool has_perceptual() const { return has_perceptual_; }
  const FeatureExtractor<float>& extractor() const { return extractor_; }
  const ChannelWeights<float>& dpl_weights() const { return dpl_weights_; }

  // x: N x 3 x H x W in [0, 1] with H, W multiples of 32. saliency:
  // N x 1 x H/8 x W/8 binary, or undefined for importance-only masking.
  // rate_scale multiplies alpha; the trainer sets it to 0 during warm-up.
  LossParts TrainingLoss(const Tensor<float>& x, const Tensor<float>& saliency,
                         double rate_scale = 1.0) const;

  // Reconstruction through the hard quantizers, without coding.
  Tensor<float> Reconstruct(const Tensor<float>& x, const Tensor<float>& saliency) const;

  Codebook codebook1() const;
  Codebook codebook2() const;

  void Save(Checkpoint& ckpt);
  // Throws kFormat when the checkpoint's digest differs from the config's.
  static HierarchicalModel Load(const Checkpoint& ckpt);

 private:
  friend std::vector<uint8_t> Compress(const HierarchicalModel&, const Image&,
                                       const SaliencyMask*, CodecAudit*);
  friend Image Decompress(const HierarchicalModel&, std::span<const uint8_t>, CodecAudit*);

  Tensor<float> EncodeStage1(const Tensor<float>& x, Tensor<float>* importance) const;
  Tensor<float> DecodeStage1(const Tensor<float>& y) const;
  Tensor<float> EncodeStage2(const Tensor<float>& y, Tensor<float>* importance) const;
  Tensor<float> DecodeStage2(const Tensor<float>& z) const;
  // Stage-1 context model inputs from a stage-1 latent and D2's output.
  Tensor<float> AsVolume(const Tensor<float>& latent, int maps) const;

  CodecConfig config_;
  // E1
  std::vector<Conv2dLayer<float>> e1_down_;
  std::vector<ResidualBlock<float>> e1_blocks_;
  SelfAttention<float> e1_attn_;
  Conv2dLayer<float> e1_head_;
  // D1
  Conv2dLayer<float> d1_head_;
  std::vector<ResidualBlock<float>> d1_blocks_;
  SelfAttention<float> d1_attn_;
  std::vector<ConvTranspose2dLayer<float>> d1_up_;
  // E2
  std::vector<Conv2dLayer<float>> e2_down_;
  std::vector<ResidualBlock<float>> e2_blocks_;
  SelfAttention<float> e2_attn_;
  Conv2dLayer<float> e2_head_;
  // D2
  Conv2dLayer<float> d2_head_;
  std::vector<ResidualBlock<float>> d2_blocks_;
  SelfAttention<float> d2_attn_;
  std::vector<ConvTranspose2dLayer<float>> d2_up_;

  Parameter<float> centers1_, centers2_;
  ContextModel<float> context1_, context2_;

  bool has_perceptual_ = false;
  FeatureExtractor<float> extractor_;
  ChannelWeights<float> dpl_weights_;
};

// Saliency-weighted distortion
//   w1 D(x*s, xh*s) + w2 D(x*(1-s), xh*(1-s)),  D = mse_w * mse + dpl_w * dpl
// where s (N x 1 x H/8 x W/8) is upsampled x8 to the image. The dpl part is
// skipped when dpl_weight is 0. Returns a scalar (batch mean).
template <typename T>
struct DistortionSpec {
  double w1 = 0.75;
  double w2 = 0.25;
  double mse_weight = 1.0;
  double dpl_weight = 0.0;
  const FeatureExtractor<T>* extractor = nullptr;
  const ChannelWeights<T>* weights = nullptr;
};

template <typename T>
Tensor<T> WeightedDistortion(const Tensor<T>& x, const Tensor<T>& xhat,
                             const Tensor<T>& saliency, const DistortionSpec<T>& spec);

// On-disk container:
//   "HSCB", u16 version, u32 W, u32 H, u64 config digest,
//   u16 L1, L1 x f32, u16 L2, L2 x f32,
//   stage-2 payload, stage-1 payload (see WritePayload).
struct Bitstream {
  static constexpr uint16_t kVersion = 1;
  uint16_t version = kVersion;
  uint32_t width = 0;
  uint32_t height = 0;
  uint64_t digest = 0;
  std::vector<float> centers1, centers2;
  CodedPayload stage2, stage1;

  uint64_t payload_bits() const { return stage1.declared_bits + stage2.declared_bits; }
  double bpp() const;
  double stage2_share() const;
};

std::vector<uint8_t> SerializeBitstream(const Bitstream& bs);
// Throws kFormat on bad magic, unknown version or truncation.
Bitstream ParseBitstream(std::span<const uint8_t> bytes);

// Internals of one compress or decompress call, for tests and audits.
struct CodecAudit {
  int padded_width = 0, padded_height = 0;
  QuantizedLatent stage1, stage2;          // C x h x w symbol volumes
  std::vector<double> stage1_site_bits;    // per spatial site, summed over channels
  std::vector<uint8_t> saliency;           // latent grid actually used (h1 x w1)
  std::vector<float> plane;                // fused mask plane (h1 x w1)
  int64_t kept_stage1 = 0;                 // symbols under a nonzero mask
  double stage1_model_bits = 0, stage2_model_bits = 0;
  Bitstream stream;
};

// saliency: latent-resolution mask for the unpadded image (ceil(W/8) x
// ceil(H/8)), or null for importance-only masking.
std::vector<uint8_t> Compress(const HierarchicalModel& model, const Image& image,
                              const SaliencyMask* saliency, CodecAudit* audit = nullptr);
// Throws kFormat on digest or version mismatch and on corrupt payloads.
Image Decompress(const HierarchicalModel& model, std::span<const uint8_t> bytes,
                 CodecAudit* audit = nullptr);

}  // namespace hsc

#endif  // HSC_CODEC_H_
