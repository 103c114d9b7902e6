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


#ifndef HSC_MASKING_H_
#define HSC_MASKING_H_

#include <cstdint>
#include <span>
#include <vector>

#include "hsc/image.h"
#include "hsc/tensor.h"

namespace hsc {

enum class SaliencySource { kIngested, kHeuristic, kAllOnes };

// Binary map at latent resolution (image size / 8).
struct SaliencyMask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> grid;  // row-major, values 0 or 1
  SaliencySource source = SaliencySource::kAllOnes;

  static SaliencyMask Filled(int width, int height, uint8_t value,
                             SaliencySource source = SaliencySource::kAllOnes);
  int64_t CountSalient() const;
};

// Max-pools a full-resolution map (nonzero = salient) by `factor`; partial
// cells at the right and bottom edges pool over the pixels they cover.
SaliencyMask PoolSaliency(const GrayImage& gray, int factor = 8,
                          SaliencySource source = SaliencySource::kIngested);

// Resizes a pooled mask to a padded latent grid, replicating the last
// row/column into the padding.
SaliencyMask FitSaliency(const SaliencyMask& mask, int width, int height);

// Center-weighted local contrast of the luma, normalised to its maximum,
// thresholded, then pooled by `factor`. A constant image has no contrast
// and yields the all-ones fallback.
SaliencyMask HeuristicSaliency(const Image& image, double threshold,
                               int factor = 8);

// N x 1 x h x w float tensor of the masks.
template <typename T>
Tensor<T> SaliencyTensor(std::span<const SaliencyMask* const> masks);

template <typename T>
struct LatentSplit {
  Tensor<T> data;        // N x C x h x w
  Tensor<T> importance;  // N x 1 x h x w, clamped to [0, C]
};

// Splits the trailing importance channel off an N x (C+1) x h x w latent.
template <typename T>
LatentSplit<T> ImportanceChannel(const Tensor<T>& latent);

template <typename T>
struct FusedMask {
  Tensor<T> plane;     // N x 1 x h x w
  Tensor<T> expanded;  // N x C x h x w, soft values in [0, 1]
  double lambda1 = 1.0;
  double lambda2 = 1.0;
};

// expanded[k] = clamp(plane - k, 0, 1); differentiable in plane.
template <typename T>
Tensor<T> ExpandMask(const Tensor<T>& plane, int channels);

// plane = lambda1 * C * s + lambda2 * importance. An undefined `saliency`
// means importance only.
template <typename T>
FusedMask<T> FuseAndExpand(const Tensor<T>& importance, const Tensor<T>& saliency,
                           double lambda1, double lambda2, int channels);

// latent * ceil(expanded). The ceiling passes gradient straight through to
// the mask; the latent receives gradient only at kept positions.
template <typename T>
Tensor<T> ApplyMask(const Tensor<T>& latent, const Tensor<T>& expanded);

}  // namespace hsc

#endif  // HSC_MASKING_H_
