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


#include "hsc/perceptual.h"

#include <algorithm>

#include "hsc/error.h"
#include "hsc/ops.h"
#include "hsc/optim.h"

namespace hsc {

template <typename T>
FeatureExtractor<T>::FeatureExtractor(const std::vector<int>& widths, Rng& rng)
    : widths_(widths) {
  Check(!widths.empty(), ErrorKind::kUsage, "feature extractor needs a block");
  int in = 3;
  for (size_t i = 0; i < widths.size(); ++i) {
    blocks_.emplace_back("dpl.block" + std::to_string(i), in, widths[i], 3,
                         i == 0 ? 1 : 2, rng);
    in = widths[i];
  }
}

template <typename T>
std::vector<Tensor<T>> FeatureExtractor<T>::Taps(const Tensor<T>& x) const {
  std::vector<Tensor<T>> taps;
  Tensor<T> h = AddScalar(x, -0.5);
  for (const Conv2dLayer<T>& block : blocks_) {
    h = Relu(block(h));
    taps.push_back(h);
  }
  return taps;
}

template <typename T>
void FeatureExtractor<T>::Collect(ParamList<T>& out) {
  for (Conv2dLayer<T>& b : blocks_) b.Collect(out);
}

template <typename T>
template <typename U>
void FeatureExtractor<T>::CopyFrom(const FeatureExtractor<U>& other) {
  widths_ = other.TapChannels();
  blocks_.clear();
  for (const Conv2dLayer<U>& src : other.blocks()) {
    auto convert = [](const Tensor<U>& t) {
      return Tensor<T>(t.shape(), std::vector<T>(t.values().begin(), t.values().end()));
    };
    Conv2dLayer<T> dst;
    dst.weight = Parameter<T>(src.weight.name, convert(src.weight.value));
    dst.bias = Parameter<T>(src.bias.name, convert(src.bias.value));
    dst.stride = src.stride;
    dst.padding = src.padding;
    blocks_.push_back(std::move(dst));
  }
}

void PretrainExtractor(FeatureExtractor<float>& extractor,
                       const std::vector<Image>& images, int steps, uint64_t seed) {
  Check(!images.empty(), ErrorKind::kUsage, "extractor pretraining needs images");
  Rng rng(seed);
  const std::vector<int> widths = extractor.TapChannels();
  // Mirror decoder: one upsampling layer per strided block, then to RGB.
  std::vector<ConvTranspose2dLayer<float>> ups;
  for (size_t i = widths.size() - 1; i >= 1; --i) {
    ups.emplace_back("ae.up" + std::to_string(i), widths[i], widths[i - 1], 4, 2, rng);
  }
  Conv2dLayer<float> to_rgb("ae.rgb", widths[0], 3, 3, 1, rng);
  ParamList<float> params;
  extractor.Collect(params);
  for (auto& u : ups) u.Collect(params);
  to_rgb.Collect(params);

  const int batch = std::min<int>(4, static_cast<int>(images.size()));
  for (int step = 0; step < steps; ++step) {
    std::vector<const Image*> picks;
    for (int b = 0; b < batch; ++b) picks.push_back(&images[rng.Below(images.size())]);
    const TensorF x = ImagesToTensor<float>(picks);
    Tensor<float> h = extractor.Taps(x).back();
    for (size_t i = 0; i < ups.size(); ++i) {
      h = ups[i](h);
      if (i + 1 < ups.size()) h = Relu(h);
    }
    const TensorF recon = AddScalar(to_rgb(Relu(h)), 0.5);
    Mse(recon, x).Backward();
    AdamStep<float>(params, {.lr = 2e-3});
  }
}

template <typename T>
ChannelWeights<T> ChannelWeights<T>::Ones(const std::vector<int>& channels) {
  ChannelWeights w;
  for (int c : channels) w.per_tap.emplace_back(Shape{c}, T(1));
  return w;
}

template <typename T>
ChannelWeights<T> ChannelWeights<T>::Zeros(const std::vector<int>& channels) {
  ChannelWeights w;
  for (int c : channels) w.per_tap.emplace_back(Shape{c}, T(0));
  return w;
}

template <typename T>
std::vector<double> ChannelWeights<T>::Flat() const {
  std::vector<double> out;
  for (const Tensor<T>& t : per_tap) out.insert(out.end(), t.values().begin(), t.values().end());
  return out;
}

template <typename T>
Tensor<T> DplFromTaps(const std::vector<Tensor<T>>& taps_x,
                      const std::vector<Tensor<T>>& taps_y,
                      const ChannelWeights<T>& weights) {
  Check(taps_x.size() == taps_y.size() && taps_x.size() == weights.per_tap.size() &&
            !taps_x.empty(),
        ErrorKind::kShape, "dpl: tap/weight count mismatch");
  const int64_t N = taps_x[0].dim(0);
  Tensor<T> total;
  for (size_t l = 0; l < taps_x.size(); ++l) {
    const Tensor<T>& zx = taps_x[l];
    const Tensor<T>& zy = taps_y[l];
    Check(zx.shape() == zy.shape() && zx.rank() == 4 && zx.dim(0) == N,
          ErrorKind::kShape, "dpl: tap shapes differ");
    const int64_t C = zx.dim(1), HW = zx.dim(2) * zx.dim(3);
    Check(weights.per_tap[l].size() == C, ErrorKind::kShape,
          "dpl: weight vector length does not match tap channels");
    Tensor<T> d = Sub(ChannelNorm(zy, 1e-10), ChannelNorm(zx, 1e-10));
    Tensor<T> wd = Mul(d, Reshape(weights.per_tap[l], Shape{1, C, 1, 1}));
    Tensor<T> per_sample = MatMul(Reshape(Square(wd), Shape{N, C * HW}),
                                  Tensor<T>(Shape{C * HW, 1}, T(1)));
    Tensor<T> term = Scale(per_sample, 1.0 / static_cast<double>(HW));
    total = total.defined() ? Add(total, term) : term;
  }
  return Reshape(total, Shape{N});
}

template <typename T>
Tensor<T> Dpl(const Tensor<T>& x, const Tensor<T>& y, const FeatureExtractor<T>& extractor,
              const ChannelWeights<T>& weights) {
  Check(x.shape() == y.shape(), ErrorKind::kShape, "dpl: image shapes differ");
  return DplFromTaps(extractor.Taps(x), extractor.Taps(y), weights);
}

std::vector<double> ChannelDistances(const FeatureExtractor<float>& extractor,
                                     const Image& x, const Image& y) {
  NoGradGuard ng;
  const Image* xs[] = {&x};
  const Image* ys[] = {&y};
  const auto tx = extractor.Taps(ImagesToTensor<float>(xs));
  const auto ty = extractor.Taps(ImagesToTensor<float>(ys));
  std::vector<double> out;
  for (size_t l = 0; l < tx.size(); ++l) {
    const TensorF zx = ChannelNorm(tx[l], 1e-10), zy = ChannelNorm(ty[l], 1e-10);
    const int64_t C = zx.dim(1), HW = zx.dim(2) * zx.dim(3);
    for (int64_t c = 0; c < C; ++c) {
      double acc = 0;
      for (int64_t i = 0; i < HW; ++i) {
        const double d = static_cast<double>(zy[c * HW + i]) - zx[c * HW + i];
        acc += d * d;
      }
      out.push_back(acc / static_cast<double>(HW));
    }
  }
  return out;
}

void AppendExtractor(FeatureExtractor<float>& extractor,
                     const ChannelWeights<float>& weights, Checkpoint& ckpt) {
  ParamList<float> params;
  extractor.Collect(params);
  AppendParameters<float>(params, ckpt);
  for (size_t l = 0; l < weights.per_tap.size(); ++l) {
    const TensorF& w = weights.per_tap[l];
    ckpt.arrays.push_back({"dpl.weights.tap" + std::to_string(l), w.shape(),
                           std::vector<float>(w.values().begin(), w.values().end())});
  }
}

void RestoreExtractor(const Checkpoint& ckpt, FeatureExtractor<float>& extractor,
                      ChannelWeights<float>& weights) {
  std::vector<int> widths;
  for (int i = 0;; ++i) {
    const NamedArray* a = ckpt.Find("dpl.block" + std::to_string(i) + ".weight");
    if (!a) break;
    Check(a->shape.size() == 4, ErrorKind::kFormat, "extractor weight has wrong rank");
    widths.push_back(static_cast<int>(a->shape[0]));
  }
  Check(!widths.empty(), ErrorKind::kFormat, "checkpoint has no feature extractor");
  Rng rng(0);
  extractor = FeatureExtractor<float>(widths, rng);
  ParamList<float> params;
  extractor.Collect(params);
  RestoreParameters<float>(ckpt, params);
  weights = ChannelWeights<float>();
  for (size_t l = 0; l < widths.size(); ++l) {
    const NamedArray* a = ckpt.Find("dpl.weights.tap" + std::to_string(l));
    Check(a && a->shape == Shape{widths[l]}, ErrorKind::kFormat,
          "checkpoint channel weights missing or mis-shaped");
    weights.per_tap.emplace_back(a->shape, a->values);
  }
}

#define HSC_INSTANTIATE_PERCEPTUAL(T)                                              \
  template class FeatureExtractor<T>;                                              \
  template struct ChannelWeights<T>;                                               \
  template Tensor<T> DplFromTaps<T>(const std::vector<Tensor<T>>&,                 \
                                    const std::vector<Tensor<T>>&,                 \
                                    const ChannelWeights<T>&);                     \
  template Tensor<T> Dpl<T>(const Tensor<T>&, const Tensor<T>&,                    \
                            const FeatureExtractor<T>&, const ChannelWeights<T>&);

HSC_INSTANTIATE_PERCEPTUAL(float)
HSC_INSTANTIATE_PERCEPTUAL(double)
template void FeatureExtractor<double>::CopyFrom<float>(const FeatureExtractor<float>&);
template void FeatureExtractor<float>::CopyFrom<float>(const FeatureExtractor<float>&);

}  // namespace hsc
