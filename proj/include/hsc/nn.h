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

#ifndef HSC_NN_H_
#define HSC_NN_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hsc/ops.h"
#include "hsc/rng.h"
#include "hsc/tensor.h"

namespace hsc {

// A trainable leaf with its Adam state.
template <typename T>
struct Parameter {
  Parameter() = default;
  Parameter(std::string name_in, Tensor<T> value_in);

  std::string name;
  Tensor<T> value;
  std::vector<T> adam_m;
  std::vector<T> adam_v;
  int64_t step_count = 0;
};

template <typename T>
using ParamList = std::vector<Parameter<T>*>;

// Uniform He-style initialisation, bound sqrt(6 / fan_in).
template <typename T>
Tensor<T> HeUniform(Shape shape, int64_t fan_in, Rng& rng, double gain = 1.0);

template <typename T>
class Conv2dLayer {
 public:
  Conv2dLayer() = default;
  Conv2dLayer(const std::string& name, int in, int out, int kernel, int stride,
              Rng& rng, double gain = 1.0);
  Tensor<T> operator()(const Tensor<T>& x) const;
  void Collect(ParamList<T>& out);

  Parameter<T> weight, bias;
  int stride = 1;
  int padding = 0;
};

// Upsampling by `stride` with "same"-style geometry: out = in * stride.
template <typename T>
class ConvTranspose2dLayer {
 public:
  ConvTranspose2dLayer() = default;
  ConvTranspose2dLayer(const std::string& name, int in, int out, int kernel,
                       int stride, Rng& rng);
  Tensor<T> operator()(const Tensor<T>& x) const;
  void Collect(ParamList<T>& out);

  Parameter<T> weight, bias;
  int stride = 2;
  int padding = 0;
  int output_padding = 0;
};

// x + conv(relu(conv(x))), 3x3, width preserved.
template <typename T>
class ResidualBlock {
 public:
  ResidualBlock() = default;
  // slope: negative-side slope of the inner activation (0 is a ReLU).
  ResidualBlock(const std::string& name, int channels, Rng& rng, double slope = 0.0);
  Tensor<T> operator()(const Tensor<T>& x) const;
  void Collect(ParamList<T>& out);

  Conv2dLayer<T> first, second;
  double slope = 0.0;
};

// Non-local block: dot-product attention over flattened spatial positions,
// learned output projection, residual add.
template <typename T>
class SelfAttention {
 public:
  SelfAttention() = default;
  SelfAttention(const std::string& name, int channels, Rng& rng);
  Tensor<T> operator()(const Tensor<T>& x) const;
  void Collect(ParamList<T>& out);

  Parameter<T> query, key, value, output;  // 1x1 projections as matrices
  int channels = 0;
  int inner = 0;
};

}  // namespace hsc

#endif  // HSC_NN_H_
