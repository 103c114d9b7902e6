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

#include <cmath>

#include "gtest/gtest.h"
#include "hsc/corpus.h"
#include "hsc/error.h"
#include "hsc/rng.h"

namespace hsc {
namespace {

Image Gray(int size, float v) { return Image(size, size, v); }

Image Noisy(const Image& img, double sigma, uint64_t seed) {
  Rng rng(seed);
  Image out = img;
  for (float& v : out.pixels) v = std::clamp(v + static_cast<float>(sigma * rng.Normal()), 0.0f, 1.0f);
  return out;
}

TEST(MetricsTest, PsnrExamples) {
  const Image a = Gray(8, 0.0f);
  EXPECT_EQ(Psnr(a, a), kPsnrIdentical);
  EXPECT_NEAR(Psnr(a, Gray(8, 1.0f / 255.0f)), 48.1308036, 1e-6);
  EXPECT_NEAR(Psnr(a, Gray(8, 1.0f)), 0.0, 1e-9);
}

TEST(MetricsTest, MaskedMseUsesOnlyMarkedPixels) {
  Image a = Gray(4, 0.0f), b = Gray(4, 0.0f);
  std::vector<uint8_t> w(16, 0);
  b.at(1, 0, 0) = 1.0f;  // outside the mask
  b.at(0, 3, 3) = 2.0f / 255.0f;
  w[15] = 1;
  w[5] = 1;
  EXPECT_NEAR(MaskedMse8(a, b, w), 4.0 / 3.0 / 2.0, 1e-6);
  EXPECT_THROW(MaskedMse8(a, b, std::vector<uint8_t>(16, 0)), Error);
}

TEST(MetricsTest, PsnrRejectsSizeMismatch) {
  EXPECT_THROW(Psnr(Gray(4, 0), Gray(5, 0)), Error);
}

TEST(MetricsTest, MsSsimIdenticalIsOne) {
  Rng rng(1);
  const Image img = SyntheticImage(64, rng).image;
  EXPECT_NEAR(MsSsim(img, img), 1.0, 1e-12);
}

// Flat images have no variance, so every contrast-structure term is one and
// only the luminance term at the coarsest scale survives.
TEST(MetricsTest, MsSsimConstantImagesClosedForm) {
  const double mx = 255.0 * 0.4f, my = 255.0 * 0.6f, c1 = std::pow(0.01 * 255, 2);
  const double l = (2 * mx * my + c1) / (mx * mx + my * my + c1);
  // 176 px fits all five scales (176, 88, 44, 22, 11); the standard
  // exponents sum to 1.0001 and are renormalised too.
  EXPECT_NEAR(MsSsim(Gray(176, 0.4f), Gray(176, 0.6f)), std::pow(l, 0.1333 / 1.0001), 1e-9);
  // 64 px fits three (64, 32, 16); exponents renormalise over those.
  const double e3 = 0.3001 / (0.0448 + 0.2856 + 0.3001);
  EXPECT_NEAR(MsSsim(Gray(64, 0.4f), Gray(64, 0.6f)), std::pow(l, e3), 1e-9);
}

TEST(MetricsTest, MsSsimFallsWithNoise) {
  Rng rng(2);
  const Image img = SyntheticImage(64, rng).image;
  double prev = 1.0;
  for (double sigma : {0.02, 0.05, 0.1, 0.2}) {
    const double s = MsSsim(img, Noisy(img, sigma, 7));
    EXPECT_LT(s, prev) << sigma;
    EXPECT_GE(s, 0.0);
    prev = s;
  }
}

TEST(MetricsTest, MsSsimIsSymmetric) {
  Rng rng(3);
  const Image img = SyntheticImage(64, rng).image;
  const Image other = Noisy(img, 0.1, 9);
  EXPECT_NEAR(MsSsim(img, other), MsSsim(other, img), 1e-12);
}

TEST(MetricsTest, MsSsimInvertedImageIsLow) {
  Rng rng(4);
  const Image img = StationaryTexture(64, 64, rng);
  Image inv = img;
  for (float& v : inv.pixels) v = 1.0f - v;
  EXPECT_LT(MsSsim(img, inv), 0.5);
}

TEST(MetricsTest, MsSsimTooSmallThrows) {
  try {
    MsSsim(Gray(8, 0), Gray(8, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShape);
  }
}

}  // namespace
}  // namespace hsc
