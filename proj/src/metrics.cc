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


#include "hsc/metrics.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "hsc/error.h"

namespace hsc {
namespace {

void CheckSame(const Image& x, const Image& y) {
  Check(x.width == y.width && x.height == y.height && !x.pixels.empty(),
        ErrorKind::kShape, "metric: images differ in size or are empty");
}

struct Plane {
  int w = 0, h = 0;
  std::vector<double> v;
  double at(int x, int y) const { return v[static_cast<size_t>(y) * w + x]; }
};

// Luma on the 8-bit scale.
Plane Luma(const Image& img) {
  Plane p{img.width, img.height, std::vector<double>(img.pixel_count())};
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      p.v[static_cast<size_t>(y) * p.w + x] =
          255.0 * (0.299 * img.at(0, y, x) + 0.587 * img.at(1, y, x) +
                   0.114 * img.at(2, y, x));
    }
  }
  return p;
}

Plane Downsample(const Plane& p) {
  Plane out{p.w / 2, p.h / 2, {}};
  out.v.resize(static_cast<size_t>(out.w) * out.h);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      out.v[static_cast<size_t>(y) * out.w + x] =
          0.25 * (p.at(2 * x, 2 * y) + p.at(2 * x + 1, 2 * y) + p.at(2 * x, 2 * y + 1) +
                  p.at(2 * x + 1, 2 * y + 1));
    }
  }
  return out;
}

// Mean luminance and contrast-structure terms over all valid windows.
void SsimTerms(const Plane& a, const Plane& b, const std::vector<double>& kernel,
               int win, double c1, double c2, double* lum, double* cs) {
  const int ow = a.w - win + 1, oh = a.h - win + 1;
  double lsum = 0, csum = 0;
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int j = 0; j < win; ++j) {
        for (int i = 0; i < win; ++i) {
          const double k = kernel[j * win + i];
          const double va = a.at(x + i, y + j), vb = b.at(x + i, y + j);
          ma += k * va;
          mb += k * vb;
          saa += k * va * va;
          sbb += k * vb * vb;
          sab += k * va * vb;
        }
      }
      const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
      lsum += (2 * ma * mb + c1) / (ma * ma + mb * mb + c1);
      csum += (2 * cov + c2) / (va + vb + c2);
    }
  }
  const double n = static_cast<double>(ow) * oh;
  *lum = lsum / n;
  *cs = csum / n;
}

}  // namespace

double Mse8(const Image& x, const Image& y) {
  CheckSame(x, y);
  double acc = 0;
  for (size_t i = 0; i < x.pixels.size(); ++i) {
    const double d = 255.0 * (static_cast<double>(x.pixels[i]) - y.pixels[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(x.pixels.size());
}

double MaskedMse8(const Image& x, const Image& y, std::span<const uint8_t> weight) {
  CheckSame(x, y);
  Check(static_cast<int64_t>(weight.size()) == x.pixel_count(), ErrorKind::kShape,
        "masked mse: weight map size mismatch");
  double acc = 0;
  int64_t n = 0;
  const int64_t plane = x.pixel_count();
  for (int c = 0; c < 3; ++c) {
    for (int64_t i = 0; i < plane; ++i) {
      if (!weight[i]) continue;
      const double d = 255.0 * (static_cast<double>(x.pixels[c * plane + i]) -
                                y.pixels[c * plane + i]);
      acc += d * d;
      ++n;
    }
  }
  Check(n > 0, ErrorKind::kDegenerate, "masked mse: empty region");
  return acc / static_cast<double>(n);
}

double PsnrFromMse8(double mse) {
  if (mse == 0.0) return kPsnrIdentical;
  return 20.0 * std::log10(255.0 / std::sqrt(mse));
}

double Psnr(const Image& x, const Image& y) { return PsnrFromMse8(Mse8(x, y)); }

double MsSsim(const Image& x, const Image& y, const MsSsimOptions& options) {
  CheckSame(x, y);
  const int win = options.window;
  int scales = 0;
  for (int s = 0, m = std::min(x.width, x.height); s < 5 && m >= win; ++s, m /= 2) {
    ++scales;
  }
  Check(scales >= 1, ErrorKind::kShape, "ms_ssim: image smaller than one window");
  double wsum = 0;
  for (int s = 0; s < scales; ++s) wsum += options.exponents[s];

  std::vector<double> kernel(win * win);
  double ksum = 0;
  for (int j = 0; j < win; ++j) {
    for (int i = 0; i < win; ++i) {
      const double dx = i - (win - 1) / 2.0, dy = j - (win - 1) / 2.0;
      kernel[j * win + i] = std::exp(-(dx * dx + dy * dy) / (2 * options.sigma * options.sigma));
      ksum += kernel[j * win + i];
    }
  }
  for (double& k : kernel) k /= ksum;
  const double c1 = std::pow(options.k1 * 255.0, 2);
  const double c2 = std::pow(options.k2 * 255.0, 2);

  Plane a = Luma(x), b = Luma(y);
  double result = 1.0;
  for (int s = 0; s < scales; ++s) {
    double lum = 0, cs = 0;
    SsimTerms(a, b, kernel, win, c1, c2, &lum, &cs);
    const double e = options.exponents[s] / wsum;
    result *= std::pow(std::max(cs, 0.0), e);
    if (s == scales - 1) result *= std::pow(std::max(lum, 0.0), e);
    if (s + 1 < scales) {
      a = Downsample(a);
      b = Downsample(b);
    }
  }
  return std::clamp(result, 0.0, 1.0);
}

}  // namespace hsc
