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


#ifndef HSC_METRICS_H_
#define HSC_METRICS_H_

#include <array>
#include <cstdint>
#include <limits>
#include <span>

#include "hsc/image.h"

namespace hsc {

// Returned by Psnr for identical images.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

// Mean squared error on the 8-bit scale (pixel values times 255).
double Mse8(const Image& x, const Image& y);
// Same, restricted to pixels where weight != 0 (weight is H x W).
double MaskedMse8(const Image& x, const Image& y, std::span<const uint8_t> weight);

double PsnrFromMse8(double mse);
// 20 log10(255 / sqrt(MSE)).
double Psnr(const Image& x, const Image& y);

struct MsSsimOptions {
  // Per-scale exponents from the original multi-scale SSIM evaluation.
  std::array<double, 5> exponents = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

// Multi-scale SSIM on luma. Uses as many of the five scales as fit a
// window (renormalising the exponents); negative contrast-structure terms
// are clamped to zero. Throws kShape when no scale fits.
double MsSsim(const Image& x, const Image& y, const MsSsimOptions& options = {});

}  // namespace hsc

#endif  // HSC_METRICS_H_
