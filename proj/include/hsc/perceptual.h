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


#ifndef HSC_PERCEPTUAL_H_
#define HSC_PERCEPTUAL_H_

#include <cstdint>
#include <string>
#include <vector>

#include "hsc/checkpoint.h"
#include "hsc/image.h"
#include "hsc/nn.h"
#include "hsc/rng.h"

namespace hsc {

// Small conv stack with a relu tap after each block. Block 0 keeps the
// resolution; the rest halve it.
template <typename T>
class FeatureExtractor {
 public:
  FeatureExtractor() = default;
  FeatureExtractor(const std::vector<int>& widths, Rng& rng);

  // x: N x 3 x H x W in [0, 1]. One tensor per tap, shallowest first.
  std::vector<Tensor<T>> Taps(const Tensor<T>& x) const;
  std::vector<int> TapChannels() const { return widths_; }
  int num_taps() const { return static_cast<int>(widths_.size()); }

  void Collect(ParamList<T>& out);
  template <typename U>
  void CopyFrom(const FeatureExtractor<U>& other);
  const std::vector<Conv2dLayer<T>>& blocks() const { return blocks_; }

 private:
  std::vector<int> widths_;
  std::vector<Conv2dLayer<T>> blocks_;
};

inline std::vector<int> DefaultExtractorWidths() { return {8, 16, 24, 32, 32}; }

// Briefly fits the extractor as the encoder half of an autoencoder so its
// features respond to image structure. Deterministic for a given seed.
void PretrainExtractor(FeatureExtractor<float>& extractor,
                       const std::vector<Image>& images, int steps, uint64_t seed);

// One non-negative weight vector per tap.
template <typename T>
struct ChannelWeights {
  std::vector<Tensor<T>> per_tap;

  static ChannelWeights Ones(const std::vector<int>& channels);
  static ChannelWeights Zeros(const std::vector<int>& channels);
  std::vector<double> Flat() const;
};

// Deep perceptual loss from precomputed taps: per sample,
//   sum_l 1/(H_l W_l) sum_hw || w_l * (norm(zy) - norm(zx)) ||^2
// where norm unit-normalises over channels. Returns an N-vector.
template <typename T>
Tensor<T> DplFromTaps(const std::vector<Tensor<T>>& taps_x,
                      const std::vector<Tensor<T>>& taps_y,
                      const ChannelWeights<T>& weights);

template <typename T>
Tensor<T> Dpl(const Tensor<T>& x, const Tensor<T>& y, const FeatureExtractor<T>& extractor,
              const ChannelWeights<T>& weights);

// Spatially averaged squared difference of the normalised taps, one entry
// per (tap, channel) in tap order. Dpl == sum_c w_c^2 * entry_c.
std::vector<double> ChannelDistances(const FeatureExtractor<float>& extractor,
                                     const Image& x, const Image& y);

void AppendExtractor(FeatureExtractor<float>& extractor,
                     const ChannelWeights<float>& weights, Checkpoint& ckpt);
// Restores an extractor and weights saved with AppendExtractor.
void RestoreExtractor(const Checkpoint& ckpt, FeatureExtractor<float>& extractor,
                      ChannelWeights<float>& weights);

}  // namespace hsc

#endif  // HSC_PERCEPTUAL_H_
