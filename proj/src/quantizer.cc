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


#include "hsc/quantizer.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>

#include "hsc/error.h"

namespace hsc {
namespace {

template <typename T>
int32_t Nearest(T y, std::span<const T> centers) {
  int32_t best = 0;
  T best_d = std::abs(y - centers[0]);
  for (size_t j = 1; j < centers.size(); ++j) {
    const T d = std::abs(y - centers[j]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int32_t>(j);
    }
  }
  return best;
}

// Softmax weights over -sigma |y - c_j|, shifted by the minimum distance.
template <typename T>
void SoftWeights(T y, std::span<const T> c, double sigma, std::vector<T>& p) {
  T dmin = std::abs(y - c[0]);
  for (T cj : c) dmin = std::min(dmin, std::abs(y - cj));
  T z = 0;
  for (size_t j = 0; j < c.size(); ++j) {
    p[j] = std::exp(-static_cast<T>(sigma) * (std::abs(y - c[j]) - dmin));
    z += p[j];
  }
  for (T& v : p) v /= z;
}

template <typename T>
T Sign(T v) {
  return static_cast<T>((v > 0) - (v < 0));
}

// Gradient of the soft assignment, shared by SoftAssign and SoftQuantize.
//   yhat = sum_j p_j c_j,  p = softmax(-sigma d),  d_j = |y - c_j|
//   dyhat/dc_k = p_k + (c_k - yhat) p_k sigma s_k      (s_k = sign(y - c_k))
//   dyhat/dy   = -sigma sum_j p_j s_j (c_j - yhat)
template <typename T>
std::function<void(internal::Node<T>&)> SoftBackward(double sigma) {
  return [sigma](internal::Node<T>& self) {
    auto& yn = *self.inputs[0];
    auto& cn = *self.inputs[1];
    const size_t L = cn.value.size();
    std::span<T> gy = yn.requires_grad ? yn.GradBuffer() : std::span<T>();
    std::span<T> gc = cn.requires_grad ? cn.GradBuffer() : std::span<T>();
    std::vector<T> p(L);
    const T s = static_cast<T>(sigma);
    for (size_t i = 0; i < yn.value.size(); ++i) {
      const T g = self.grad[i];
      if (g == 0) continue;
      const T y = yn.value[i];
      SoftWeights<T>(y, cn.value, sigma, p);
      T yhat = 0;
      for (size_t j = 0; j < L; ++j) yhat += p[j] * cn.value[j];
      if (!gy.empty()) {
        T d = 0;
        for (size_t j = 0; j < L; ++j) {
          d += p[j] * Sign(y - cn.value[j]) * (cn.value[j] - yhat);
        }
        gy[i] += g * (-s * d);
      }
      if (!gc.empty()) {
        for (size_t k = 0; k < L; ++k) {
          const T sk = Sign(y - cn.value[k]);
          gc[k] += g * (p[k] + (cn.value[k] - yhat) * p[k] * s * sk);
        }
      }
    }
  };
}

void CheckCenters(const Shape& shape) {
  Check(shape.size() == 1 && shape[0] >= 2, ErrorKind::kShape,
        "quantizer: centers must be a vector of length >= 2, got " +
            ShapeString(shape));
}

}  // namespace

void Codebook::Validate() const {
  Check(centers.size() >= 2, ErrorKind::kUsage, "codebook needs L >= 2");
  Check(sigma > 0 && std::isfinite(sigma), ErrorKind::kUsage,
        "codebook sigma must be positive");
  for (size_t i = 0; i < centers.size(); ++i) {
    Check(std::isfinite(centers[i]), ErrorKind::kNumerical,
          "codebook center is not finite");
    for (size_t j = 0; j < i; ++j) {
      Check(centers[i] != centers[j], ErrorKind::kDegenerate,
            "codebook centers must be distinct");
    }
  }
}

Codebook Codebook::Random(int levels, double lo, double hi, Rng& rng) {
  Codebook cb;
  for (int i = 0; i < levels; ++i) cb.centers.push_back(rng.Uniform(lo, hi));
  std::sort(cb.centers.begin(), cb.centers.end());
  cb.Validate();
  return cb;
}

template <typename T>
Codebook Codebook::FromTensor(const Tensor<T>& centers, double sigma) {
  Codebook cb;
  cb.centers.assign(centers.values().begin(), centers.values().end());
  cb.sigma = sigma;
  cb.Validate();
  return cb;
}

template <typename T>
QuantizedLatent QuantizeForward(const Tensor<T>& latent, const Codebook& codebook,
                                int codebook_id) {
  codebook.Validate();
  Check(AllFinite(latent.values()), ErrorKind::kNumerical,
        "quantize: non-finite latent");
  std::vector<T> c(codebook.centers.begin(), codebook.centers.end());
  QuantizedLatent q;
  q.shape = latent.shape();
  q.codebook_id = codebook_id;
  q.symbols.resize(latent.size());
  auto v = latent.values();
  for (int64_t i = 0; i < latent.size(); ++i) {
    q.symbols[i] = Nearest<T>(v[i], c);
  }
  return q;
}

template <typename T>
Tensor<T> Dequantize(const QuantizedLatent& q, const Codebook& codebook) {
  std::vector<T> v(q.symbols.size());
  for (size_t i = 0; i < v.size(); ++i) {
    const int32_t s = q.symbols[i];
    Check(s >= 0 && s < codebook.size(), ErrorKind::kFormat,
          "dequantize: symbol out of range");
    v[i] = static_cast<T>(codebook.centers[s]);
  }
  return Tensor<T>(q.shape, std::move(v));
}

template <typename T>
Tensor<T> SoftAssign(const Tensor<T>& y, const Tensor<T>& centers, double sigma) {
  CheckCenters(centers.shape());
  Check(sigma > 0, ErrorKind::kUsage, "soft_assign: sigma must be positive");
  const size_t L = centers.size();
  std::vector<T> out(y.size());
  std::vector<T> p(L);
  auto c = centers.values();
  auto yv = y.values();
  for (int64_t i = 0; i < y.size(); ++i) {
    SoftWeights<T>(yv[i], c, sigma, p);
    T acc = 0;
    for (size_t j = 0; j < L; ++j) acc += p[j] * c[j];
    out[i] = acc;
  }
  return MakeOpResult<T>("soft_assign", y.shape(), std::move(out), {y, centers},
                         SoftBackward<T>(sigma));
}

template <typename T>
Tensor<T> SoftQuantize(const Tensor<T>& y, const Tensor<T>& centers,
                       double sigma, std::vector<int32_t>* symbols) {
  CheckCenters(centers.shape());
  Check(sigma > 0, ErrorKind::kUsage, "soft_quantize: sigma must be positive");
  Check(AllFinite(y.values()), ErrorKind::kNumerical,
        "soft_quantize: non-finite latent");
  auto c = centers.values();
  auto yv = y.values();
  std::vector<T> out(y.size());
  if (symbols) symbols->resize(y.size());
  for (int64_t i = 0; i < y.size(); ++i) {
    const int32_t k = Nearest<T>(yv[i], c);
    out[i] = c[k];
    if (symbols) (*symbols)[i] = k;
  }
  return MakeOpResult<T>("soft_quantize", y.shape(), std::move(out),
                         {y, centers}, SoftBackward<T>(sigma));
}

#define HSC_INSTANTIATE_QUANTIZER(T)                                          \
  template Codebook Codebook::FromTensor<T>(const Tensor<T>&, double);        \
  template QuantizedLatent QuantizeForward<T>(const Tensor<T>&,               \
                                              const Codebook&, int);          \
  template Tensor<T> Dequantize<T>(const QuantizedLatent&, const Codebook&);  \
  template Tensor<T> SoftAssign<T>(const Tensor<T>&, const Tensor<T>&,        \
                                   double);                                   \
  template Tensor<T> SoftQuantize<T>(const Tensor<T>&, const Tensor<T>&,      \
                                     double, std::vector<int32_t>*);

HSC_INSTANTIATE_QUANTIZER(float)
HSC_INSTANTIATE_QUANTIZER(double)

}  // namespace hsc
