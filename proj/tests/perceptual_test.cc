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

#include <cmath>
#include <numeric>

#include "gradient_suite.h"
#include "gtest/gtest.h"
#include "hsc/corpus.h"
#include "hsc/gradcheck.h"

namespace hsc {
namespace {

TEST(PerceptualTest, UnitVectorExample) {
  // One tap, two channels, one site: the normalised vectors are e0 and e1.
  std::vector<TensorD> tx = {TensorD({1, 2, 1, 1}, {1.0, 0.0})};
  std::vector<TensorD> ty = {TensorD({1, 2, 1, 1}, {0.0, 1.0})};
  const TensorD d = DplFromTaps(tx, ty, ChannelWeights<double>::Ones({2}));
  ASSERT_EQ(d.size(), 1);
  EXPECT_NEAR(d[0], 2.0, 1e-9);
}

TEST(PerceptualTest, WeightsAreSquared) {
  std::vector<TensorD> tx = {TensorD({1, 2, 1, 1}, {1.0, 0.0})};
  std::vector<TensorD> ty = {TensorD({1, 2, 1, 1}, {0.0, 1.0})};
  ChannelWeights<double> w;
  w.per_tap.push_back(TensorD({2}, {3.0, 0.0}));
  EXPECT_NEAR(DplFromTaps(tx, ty, w)[0], 9.0, 1e-8);
}

TEST(PerceptualTest, ZeroForIdenticalInputsAndZeroWeights) {
  Rng rng(1);
  FeatureExtractor<float> ex(DefaultExtractorWidths(), rng);
  const Image a = SyntheticImage(32, rng).image, b = SyntheticImage(32, rng).image;
  const Image* pa[] = {&a};
  const Image* pb[] = {&b};
  const TensorF xa = ImagesToTensor<float>(pa), xb = ImagesToTensor<float>(pb);
  const auto ones = ChannelWeights<float>::Ones(ex.TapChannels());
  EXPECT_EQ(Dpl(xa, xa, ex, ones)[0], 0.0f);
  EXPECT_EQ(Dpl(xa, xb, ex, ChannelWeights<float>::Zeros(ex.TapChannels()))[0], 0.0f);
  EXPECT_GT(Dpl(xa, xb, ex, ones)[0], 0.0f);
}

// Two routes: the batched tensor op and the per-channel decomposition.
TEST(PerceptualTest, ChannelDistancesDecomposeDpl) {
  Rng rng(2);
  FeatureExtractor<float> ex(DefaultExtractorWidths(), rng);
  const Image a = SyntheticImage(32, rng).image, b = SyntheticImage(32, rng).image;
  auto w = ChannelWeights<float>::Ones(ex.TapChannels());
  for (auto& t : w.per_tap) {
    for (float& v : t.mutable_values()) v = static_cast<float>(rng.Uniform(0, 2));
  }
  const std::vector<double> e = ChannelDistances(ex, a, b);
  const std::vector<double> flat = w.Flat();
  ASSERT_EQ(e.size(), flat.size());
  double expect = 0;
  for (size_t c = 0; c < e.size(); ++c) expect += flat[c] * flat[c] * e[c];
  const Image* pa[] = {&a};
  const Image* pb[] = {&b};
  const double got = Dpl(ImagesToTensor<float>(pa), ImagesToTensor<float>(pb), ex, w)[0];
  EXPECT_NEAR(got, expect, 1e-4 * expect);
}

TEST(PerceptualTest, BatchEntriesAreIndependent) {
  Rng rng(3);
  FeatureExtractor<float> ex({4, 6}, rng);
  std::vector<Image> imgs;
  for (int i = 0; i < 4; ++i) imgs.push_back(SyntheticImage(16, rng).image);
  const Image* xs[] = {&imgs[0], &imgs[1]};
  const Image* ys[] = {&imgs[2], &imgs[3]};
  const auto w = ChannelWeights<float>::Ones(ex.TapChannels());
  const TensorF both = Dpl(ImagesToTensor<float>(xs), ImagesToTensor<float>(ys), ex, w);
  for (int i = 0; i < 2; ++i) {
    const Image* x1[] = {xs[i]};
    const Image* y1[] = {ys[i]};
    EXPECT_NEAR(both[i], Dpl(ImagesToTensor<float>(x1), ImagesToTensor<float>(y1), ex, w)[0],
                1e-5);
  }
}

TEST(PerceptualTest, GradientMatchesFiniteDifferences) {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(100 + seed);
    FeatureExtractor<double> ex({3, 4}, rng);
    const TensorD x = testing::RandomTensor({1, 3, 8, 8}, rng, 0, 1);
    const TensorD y = testing::RandomTensor({1, 3, 8, 8}, rng, 0, 1);
    auto w = ChannelWeights<double>::Ones(ex.TapChannels());
    for (auto& t : w.per_tap) {
      for (double& v : t.mutable_values()) v = rng.Uniform(0.5, 1.5);
    }
    ScalarFn fn = [&](std::span<const TensorD> v) {
      ChannelWeights<double> wv{{v[1], v[2]}};
      return Sum(Dpl(x, v[0], ex, wv));
    };
    const GradcheckReport rep = Gradcheck(fn, {y, w.per_tap[0], w.per_tap[1]}, 1e-4, 1e-6);
    EXPECT_TRUE(rep.passed) << "seed " << seed << ": " << rep.detail;
  }
}

TEST(PerceptualTest, CheckpointRoundTrip) {
  Rng rng(4);
  FeatureExtractor<float> ex(DefaultExtractorWidths(), rng);
  auto w = ChannelWeights<float>::Ones(ex.TapChannels());
  w.per_tap[2].mutable_values()[5] = 0.25f;
  Checkpoint ckpt;
  AppendExtractor(ex, w, ckpt);
  FeatureExtractor<float> ex2;
  ChannelWeights<float> w2;
  RestoreExtractor(ParseCheckpoint(SerializeCheckpoint(ckpt)), ex2, w2);
  EXPECT_EQ(ex2.TapChannels(), ex.TapChannels());
  EXPECT_EQ(w2.Flat(), w.Flat());
  const Image a = SyntheticImage(32, rng).image, b = SyntheticImage(32, rng).image;
  EXPECT_EQ(ChannelDistances(ex, a, b), ChannelDistances(ex2, a, b));
}

TEST(PerceptualTest, PretrainingIsDeterministicAndChangesWeights) {
  Rng rng(5);
  std::vector<Image> imgs;
  for (int i = 0; i < 4; ++i) imgs.push_back(SyntheticImage(32, rng).image);
  Rng r1(9), r2(9);
  FeatureExtractor<float> a({4, 6, 8}, r1), b({4, 6, 8}, r2);
  const std::vector<float> before(a.blocks()[0].weight.value.values().begin(),
                                  a.blocks()[0].weight.value.values().end());
  PretrainExtractor(a, imgs, 5, 1);
  PretrainExtractor(b, imgs, 5, 1);
  const auto& va = a.blocks()[0].weight.value.values();
  const auto& vb = b.blocks()[0].weight.value.values();
  EXPECT_TRUE(std::equal(va.begin(), va.end(), vb.begin()));
  EXPECT_FALSE(std::equal(va.begin(), va.end(), before.begin()));
}

}  // namespace
}  // namespace hsc
