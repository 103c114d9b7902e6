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


#ifndef HSC_QUANTIZER_H_
#define HSC_QUANTIZER_H_

#include <cstdint>
#include <span>
#include <vector>

#include "hsc/rng.h"
#include "hsc/tensor.h"

namespace hsc {

// Scalar centers shared by every element of one latent.
struct Codebook {
  std::vector<double> centers;
  double sigma = 1.0;

  int size() const { return static_cast<int>(centers.size()); }
  // L >= 2, distinct finite centers, sigma > 0.
  void Validate() const;

  // L centers drawn uniformly from [lo, hi], sorted.
  static Codebook Random(int levels, double lo, double hi, Rng& rng);
  template <typename T>
  static Codebook FromTensor(const Tensor<T>& centers, double sigma);
};

struct QuantizedLatent {
  Shape shape;
  std::vector<int32_t> symbols;
  int codebook_id = 0;

  int64_t size() const { return static_cast<int64_t>(symbols.size()); }
};

// Nearest center per element; equidistant elements take the lower index.
template <typename T>
QuantizedLatent QuantizeForward(const Tensor<T>& latent, const Codebook& codebook,
                                int codebook_id = 0);

template <typename T>
Tensor<T> Dequantize(const QuantizedLatent& q, const Codebook& codebook);

// Soft assignment sum_j softmax_j(-sigma |y - c_j|) c_j, differentiable in
// both y and the centers.
template <typename T>
Tensor<T> SoftAssign(const Tensor<T>& y, const Tensor<T>& centers, double sigma);

// Hard centers forward, SoftAssign's gradient backward. When `symbols` is
// given it receives the chosen indices.
template <typename T>
Tensor<T> SoftQuantize(const Tensor<T>& y, const Tensor<T>& centers,
                       double sigma, std::vector<int32_t>* symbols = nullptr);

}  // namespace hsc

#endif  // HSC_QUANTIZER_H_
