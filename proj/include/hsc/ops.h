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

#ifndef HSC_OPS_H_
#define HSC_OPS_H_

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "hsc/tensor.h"

namespace hsc {

// Differentiable primitives. Image-like tensors are NCHW; the context-model
// volumes are NCDHW where D runs over latent channels. Every primitive
// rejects shape mismatches and non-finite outputs with hsc::Error.

template <typename T> Tensor<T> Relu(const Tensor<T>& x);
template <typename T> Tensor<T> LeakyRelu(const Tensor<T>& x, double slope);
template <typename T> Tensor<T> Sigmoid(const Tensor<T>& x);
template <typename T> Tensor<T> Exp(const Tensor<T>& x);
template <typename T> Tensor<T> Log(const Tensor<T>& x);
template <typename T> Tensor<T> Square(const Tensor<T>& x);

// Elementwise with numpy-style broadcasting.
template <typename T> Tensor<T> Add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> Sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> Mul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T> Tensor<T> Scale(const Tensor<T>& x, double s);
template <typename T> Tensor<T> AddScalar(const Tensor<T>& x, double s);

// Gradient passes only where lo < x < hi.
template <typename T> Tensor<T> Clamp(const Tensor<T>& x, double lo, double hi);
// ceil() forward, identity backward.
template <typename T> Tensor<T> CeilSte(const Tensor<T>& x);

template <typename T> Tensor<T> Sum(const Tensor<T>& x);
template <typename T> Tensor<T> Mean(const Tensor<T>& x);
template <typename T> Tensor<T> Mse(const Tensor<T>& a, const Tensor<T>& b);

template <typename T> Tensor<T> MatMul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> Transpose(const Tensor<T>& x);  // rank 2
template <typename T> Tensor<T> Reshape(const Tensor<T>& x, Shape shape);

template <typename T> Tensor<T> Softmax(const Tensor<T>& x, int axis);
template <typename T> Tensor<T> LogSoftmax(const Tensor<T>& x, int axis);
// -sum(target * log(probs)) over `axis`, averaged over remaining positions.
template <typename T>
Tensor<T> CrossEntropy(const Tensor<T>& probs, const Tensor<T>& target,
                       int axis);
// Per-position code length -log2(probs[..., symbol, ...]); the result drops
// `axis`. symbols.size() must equal the product of the remaining dims.
template <typename T>
Tensor<T> NegLog2Gather(const Tensor<T>& probs, std::span<const int32_t> symbols,
                        int axis);

template <typename T>
Tensor<T> Concat(const std::vector<Tensor<T>>& parts, int axis);
template <typename T>
Tensor<T> Slice(const Tensor<T>& x, int axis, int64_t begin, int64_t end);
// Nearest-neighbour upsampling of the last two dims of an NCHW tensor.
template <typename T> Tensor<T> UpsampleNearest(const Tensor<T>& x, int factor);

// x / sqrt(sum_c x^2 + eps) along axis 1.
template <typename T> Tensor<T> ChannelNorm(const Tensor<T>& x, double eps);

// x: N x C x H x W, w: O x C x k x k, b: O or undefined.
template <typename T>
Tensor<T> Conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                 int stride, int padding);
// x: N x Cin x H x W, w: Cin x Cout x k x k. Output edge is
// (in - 1) * stride - 2 * padding + k + output_padding.
template <typename T>
Tensor<T> ConvTranspose2d(const Tensor<T>& x, const Tensor<T>& w,
                          const Tensor<T>& b, int stride, int padding,
                          int output_padding);

// Which (input channel, kernel tap) pairs a 3-D convolution may read.
struct TapMask {
  int kernel = 3;
  int in_channels = 0;
  std::vector<uint8_t> active;  // in_channels * kernel^3, tap-major per channel

  bool at(int c, int kd, int kh, int kw) const {
    return active[((static_cast<size_t>(c) * kernel + kd) * kernel + kh) *
                      kernel + kw] != 0;
  }
  int CountActive() const;
};

// The first `causal_channels` inputs see only raster-order predecessors of
// the output site (plus the site itself when include_center is set); the
// trailing `free_channels` inputs see the whole kernel window.
TapMask CausalTapMask(int causal_channels, int free_channels, int kernel,
                      bool include_center);

// x: N x C x D x H x W, w: O x C x k x k x k, same-size zero padding, stride 1.
template <typename T>
Tensor<T> MaskedConv3d(const Tensor<T>& x, const Tensor<T>& w,
                       const Tensor<T>& b, const TapMask& mask);

// Name-based dispatch over the primitives above, used by the randomized
// gradient suite and anything that needs to treat ops uniformly.
struct OpAttrs {
  int stride = 1;
  int padding = 0;
  int output_padding = 0;
  int axis = 1;
  int factor = 2;
  double slope = 0.1;
  double eps = 1e-10;
  double scalar = 1.0;
  double lo = 0.0;
  double hi = 1.0;
  int64_t begin = 0;
  int64_t end = 0;
  Shape shape;
  TapMask mask;
  std::vector<int32_t> symbols;
};

template <typename T>
Tensor<T> ApplyOp(std::string_view kind, std::span<const Tensor<T>> inputs,
                  const OpAttrs& attrs);

// All op kinds ApplyOp understands.
std::span<const std::string_view> OpKinds();

}  // namespace hsc

#endif  // HSC_OPS_H_
