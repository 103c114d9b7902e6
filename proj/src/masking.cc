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


#include "hsc/masking.h"

#include <algorithm>
#include <cmath>

#include "hsc/error.h"
#include "hsc/ops.h"

namespace hsc {
namespace {

// Mean over a (2r+1)^2 window, clipped at the borders, via a summed-area
// table.
std::vector<double> BoxMean(const std::vector<double>& v, int w, int h, int r) {
  std::vector<double> sat(static_cast<size_t>(w + 1) * (h + 1), 0.0);
  for (int y = 0; y < h; ++y) {
    double row = 0;
    for (int x = 0; x < w; ++x) {
      row += v[static_cast<size_t>(y) * w + x];
      sat[static_cast<size_t>(y + 1) * (w + 1) + x + 1] =
          sat[static_cast<size_t>(y) * (w + 1) + x + 1] + row;
    }
  }
  std::vector<double> out(v.size());
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - r), y1 = std::min(h, y + r + 1);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - r), x1 = std::min(w, x + r + 1);
      const double s = sat[static_cast<size_t>(y1) * (w + 1) + x1] -
                       sat[static_cast<size_t>(y0) * (w + 1) + x1] -
                       sat[static_cast<size_t>(y1) * (w + 1) + x0] +
                       sat[static_cast<size_t>(y0) * (w + 1) + x0];
      out[static_cast<size_t>(y) * w + x] = s / ((y1 - y0) * (x1 - x0));
    }
  }
  return out;
}

}  // namespace

SaliencyMask SaliencyMask::Filled(int width, int height, uint8_t value,
                                  SaliencySource source) {
  SaliencyMask m;
  m.width = width;
  m.height = height;
  m.grid.assign(static_cast<size_t>(width) * height, value ? 1 : 0);
  m.source = source;
  return m;
}

int64_t SaliencyMask::CountSalient() const {
  return std::count(grid.begin(), grid.end(), uint8_t{1});
}

SaliencyMask PoolSaliency(const GrayImage& gray, int factor, SaliencySource source) {
  Check(factor >= 1, ErrorKind::kUsage, "pool factor must be positive");
  const int w = (gray.width + factor - 1) / factor;
  const int h = (gray.height + factor - 1) / factor;
  SaliencyMask m = SaliencyMask::Filled(w, h, 0, source);
  for (int y = 0; y < gray.height; ++y) {
    for (int x = 0; x < gray.width; ++x) {
      if (gray.pixels[static_cast<size_t>(y) * gray.width + x] != 0) {
        m.grid[static_cast<size_t>(y / factor) * w + x / factor] = 1;
      }
    }
  }
  return m;
}

SaliencyMask FitSaliency(const SaliencyMask& mask, int width, int height) {
  Check(mask.width >= 1 && mask.height >= 1, ErrorKind::kShape, "empty saliency mask");
  Check(mask.width <= width && mask.height <= height, ErrorKind::kShape,
        "saliency mask larger than the latent grid");
  SaliencyMask out = SaliencyMask::Filled(width, height, 0, mask.source);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(y, mask.height - 1);
    for (int x = 0; x < width; ++x) {
      out.grid[static_cast<size_t>(y) * width + x] =
          mask.grid[static_cast<size_t>(sy) * mask.width + std::min(x, mask.width - 1)];
    }
  }
  return out;
}

SaliencyMask HeuristicSaliency(const Image& image, double threshold, int factor) {
  const int w = image.width, h = image.height;
  Check(w > 0 && h > 0, ErrorKind::kShape, "empty image");
  std::vector<double> luma(static_cast<size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      luma[static_cast<size_t>(y) * w + x] = 0.299 * image.at(0, y, x) +
                                             0.587 * image.at(1, y, x) +
                                             0.114 * image.at(2, y, x);
    }
  }
  const int r = std::max(4, std::min(w, h) / 16);
  std::vector<double> local = BoxMean(luma, w, h, r);
  for (size_t i = 0; i < luma.size(); ++i) local[i] = std::abs(luma[i] - local[i]);
  std::vector<double> score = BoxMean(local, w, h, r);

  const double cx = 0.5 * (w - 1), cy = 0.5 * (h - 1);
  double peak = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = cx > 0 ? (x - cx) / cx : 0.0;
      const double dy = cy > 0 ? (y - cy) / cy : 0.0;
      double& s = score[static_cast<size_t>(y) * w + x];
      s *= 1.0 - 0.25 * (dx * dx + dy * dy);  // 0.5 at the corners
      peak = std::max(peak, s);
    }
  }
  const int lw = (w + factor - 1) / factor, lh = (h + factor - 1) / factor;
  if (peak < 1e-9) {
    return SaliencyMask::Filled(lw, lh, 1, SaliencySource::kHeuristic);
  }
  GrayImage binary{w, h, std::vector<uint8_t>(score.size())};
  for (size_t i = 0; i < score.size(); ++i) {
    binary.pixels[i] = score[i] / peak >= threshold ? 255 : 0;
  }
  return PoolSaliency(binary, factor, SaliencySource::kHeuristic);
}

template <typename T>
Tensor<T> SaliencyTensor(std::span<const SaliencyMask* const> masks) {
  Check(!masks.empty(), ErrorKind::kShape, "no saliency masks");
  const int w = masks[0]->width, h = masks[0]->height;
  std::vector<T> v;
  v.reserve(masks.size() * static_cast<size_t>(w) * h);
  for (const SaliencyMask* m : masks) {
    Check(m->width == w && m->height == h, ErrorKind::kShape,
          "saliency masks in a batch must share dimensions");
    for (uint8_t g : m->grid) v.push_back(static_cast<T>(g));
  }
  return Tensor<T>({static_cast<int64_t>(masks.size()), 1, h, w}, std::move(v));
}

template <typename T>
LatentSplit<T> ImportanceChannel(const Tensor<T>& latent) {
  Check(latent.rank() == 4 && latent.dim(1) >= 2, ErrorKind::kShape,
        "importance_channel: need N x (C+1) x h x w with C >= 1, got " +
            ShapeString(latent.shape()));
  const int64_t c = latent.dim(1) - 1;
  LatentSplit<T> out;
  out.data = Slice(latent, 1, 0, c);
  out.importance = Clamp(Slice(latent, 1, c, c + 1), 0.0, static_cast<double>(c));
  return out;
}

template <typename T>
Tensor<T> ExpandMask(const Tensor<T>& plane, int channels) {
  Check(channels >= 1, ErrorKind::kUsage, "mask expansion needs channels >= 1");
  Check(plane.rank() == 4 && plane.dim(1) == 1, ErrorKind::kShape,
        "mask plane must be N x 1 x h x w");
  const int64_t n = plane.dim(0), hw = plane.dim(2) * plane.dim(3);
  Shape shape = {n, channels, plane.dim(2), plane.dim(3)};
  std::vector<T> out(NumElements(shape));
  auto p = plane.values();
  for (int64_t b = 0; b < n; ++b) {
    for (int64_t k = 0; k < channels; ++k) {
      T* dst = out.data() + (b * channels + k) * hw;
      const T* src = p.data() + b * hw;
      for (int64_t i = 0; i < hw; ++i) {
        dst[i] = std::clamp(src[i] - static_cast<T>(k), T(0), T(1));
      }
    }
  }
  return MakeOpResult<T>(
      "expand_mask", shape, std::move(out), {plane},
      [n, channels, hw](internal::Node<T>& self) {
        auto g = self.inputs[0]->GradBuffer();
        const auto& pv = self.inputs[0]->value;
        for (int64_t b = 0; b < n; ++b) {
          for (int64_t i = 0; i < hw; ++i) {
            const T v = pv[b * hw + i];
            // Exactly one channel is on its linear segment, if any.
            const T k = std::floor(v);
            if (v <= 0 || k >= channels || v == k) continue;
            g[b * hw + i] += self.grad[(b * channels + static_cast<int64_t>(k)) * hw + i];
          }
        }
      });
}

template <typename T>
FusedMask<T> FuseAndExpand(const Tensor<T>& importance, const Tensor<T>& saliency,
                           double lambda1, double lambda2, int channels) {
  FusedMask<T> out;
  out.lambda1 = lambda1;
  out.lambda2 = lambda2;
  out.plane = Scale(importance, lambda2);
  if (saliency.defined()) {
    Check(saliency.shape() == importance.shape(), ErrorKind::kShape,
          "saliency " + ShapeString(saliency.shape()) + " does not match importance " +
              ShapeString(importance.shape()));
    out.plane = Add(out.plane, Scale(saliency, lambda1 * channels));
  }
  out.expanded = ExpandMask(out.plane, channels);
  return out;
}

template <typename T>
Tensor<T> ApplyMask(const Tensor<T>& latent, const Tensor<T>& expanded) {
  Check(latent.shape() == expanded.shape(), ErrorKind::kShape,
        "apply_mask: latent " + ShapeString(latent.shape()) + " vs mask " +
            ShapeString(expanded.shape()));
  return Mul(latent, CeilSte(expanded));
}

#define HSC_INSTANTIATE_MASKING(T)                                              \
  template Tensor<T> SaliencyTensor<T>(std::span<const SaliencyMask* const>);   \
  template LatentSplit<T> ImportanceChannel<T>(const Tensor<T>&);               \
  template Tensor<T> ExpandMask<T>(const Tensor<T>&, int);                      \
  template FusedMask<T> FuseAndExpand<T>(const Tensor<T>&, const Tensor<T>&,    \
                                         double, double, int);                  \
  template Tensor<T> ApplyMask<T>(const Tensor<T>&, const Tensor<T>&);

HSC_INSTANTIATE_MASKING(float)
HSC_INSTANTIATE_MASKING(double)

}  // namespace hsc
