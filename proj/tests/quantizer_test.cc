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


#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gradient_suite.h"
#include "gtest/gtest.h"
#include "hsc/gradcheck.h"
#include "hsc/quantizer.h"

namespace hsc {
namespace {

Codebook Centers(std::vector<double> c) {
  Codebook cb;
  cb.centers = std::move(c);
  return cb;
}

int32_t QuantizeOne(double v, const Codebook& cb) {
  return QuantizeForward(TensorD({1}, {v}), cb).symbols[0];
}

TEST(QuantizerTest, NearestCenter) {
  EXPECT_EQ(QuantizeOne(0.4, Centers({-1, 0, 1})), 1);
  EXPECT_EQ(QuantizeOne(-0.6, Centers({-1, 0, 1})), 0);
  EXPECT_EQ(QuantizeOne(7.0, Centers({-1, 0, 1})), 2);
}

TEST(QuantizerTest, ExactCenterMapsToItself) {
  const Codebook cb = Centers({-2, -0.5, 0.25, 1.75});
  for (int j = 0; j < cb.size(); ++j) EXPECT_EQ(QuantizeOne(cb.centers[j], cb), j);
}

TEST(QuantizerTest, TieGoesToLowerIndex) {
  EXPECT_EQ(QuantizeOne(0.5, Centers({0, 1})), 0);
  EXPECT_EQ(QuantizeOne(0.5, Centers({1, 0})), 0);
}

TEST(QuantizerTest, InvalidCodebooksRejected) {
  EXPECT_THROW(Centers({1.0}).Validate(), Error);
  EXPECT_THROW(Centers({1.0, 1.0}).Validate(), Error);
  Codebook cb = Centers({0, 1});
  cb.sigma = 0;
  EXPECT_THROW(cb.Validate(), Error);
}

TEST(QuantizerTest, NonFiniteLatentRejected) {
  TensorD y({2}, {0.0, 0.0});
  y.mutable_values()[1] = std::nan("");
  EXPECT_THROW(QuantizeForward(y, Centers({0, 1})), Error);
}

TEST(QuantizerTest, LargeSigmaSoftMatchesHard) {
  TensorD c({3}, {-1, 0, 1});
  TensorD y = SoftAssign(TensorD({1}, {0.05}), c, 1e3);
  EXPECT_LT(std::abs(y[0] - 0.0), 1e-6);
}

TEST(QuantizerTest, SmallSigmaSymmetric) {
  TensorD c({2}, {-1, 1});
  TensorD y = SoftAssign(TensorD({1}, {0.0}), c, 0.01);
  EXPECT_EQ(y[0], 0.0);
}

TEST(QuantizerTest, HardForwardSoftBackward) {
  TensorD c({3}, {-1, 0, 1});
  c.set_requires_grad(true);
  TensorD y({4}, {-0.8, 0.3, 0.45, 2.0});
  y.set_requires_grad(true);
  std::vector<int32_t> symbols;
  TensorD q = SoftQuantize(y, c, 1.0, &symbols);
  EXPECT_EQ(symbols, (std::vector<int32_t>{0, 1, 1, 2}));
  EXPECT_EQ(q[0], -1.0);
  EXPECT_EQ(q[2], 0.0);
  Sum(q).Backward();

  // The backward pass is the soft assignment's gradient.
  TensorD c2({3}, {-1, 0, 1});
  c2.set_requires_grad(true);
  TensorD y2({4}, {-0.8, 0.3, 0.45, 2.0});
  y2.set_requires_grad(true);
  Sum(SoftAssign(y2, c2, 1.0)).Backward();
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(y.grad()[i], y2.grad()[i]);
  for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(c.grad()[j], c2.grad()[j]);
}

TEST(QuantizerTest, SoftGradientMatchesFiniteDifferences) {
  for (int seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const int L = rng.IntIn(2, 8);
    std::vector<double> cv(L);
    for (double& v : cv) v = rng.Uniform(-2, 2);
    std::vector<TensorD> in = {testing::RandomTensor({rng.IntIn(1, 3), rng.IntIn(1, 5)}, rng, -2.5, 2.5),
                               TensorD({L}, cv)};
    const double sigma = rng.Uniform(0.2, 4.0);
    TensorD proj = testing::RandomTensor(in[0].shape(), rng);
    ScalarFn fn = [&](std::span<const TensorD> v) {
      return Sum(Mul(SoftAssign(v[0], v[1], sigma), proj));
    };
    GradcheckReport rep = Gradcheck(fn, in, 1e-4);
    EXPECT_TRUE(rep.passed) << "seed " << seed << ": " << rep.detail;
  }
}

TEST(QuantizerTest, MismatchShrinksWithSigma) {
  Rng rng(4);
  TensorD y = testing::RandomTensor({500}, rng, -2, 2);
  TensorD c({6}, {-2, -1.2, -0.4, 0.4, 1.2, 2});
  const TensorD hard = SoftQuantize(y, c, 1.0);
  double previous = 1e9;
  for (double sigma : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 64.0}) {
    const TensorD soft = SoftAssign(y, c, sigma);
    double gap = 0;
    for (int64_t i = 0; i < y.size(); ++i) gap += std::abs(soft[i] - hard[i]);
    gap /= y.size();
    EXPECT_LT(gap, previous) << "sigma " << sigma;
    previous = gap;
  }
}

TEST(QuantizerTest, DequantizeIsIdempotent) {
  Rng rng(8);
  Codebook cb = Codebook::Random(6, -2, 2, rng);
  QuantizedLatent q;
  q.shape = {3, 4, 5};
  for (int i = 0; i < 60; ++i) q.symbols.push_back(static_cast<int32_t>(rng.Below(6)));
  EXPECT_EQ(QuantizeForward(Dequantize<double>(q, cb), cb).symbols, q.symbols);
  EXPECT_EQ(QuantizeForward(Dequantize<float>(q, cb), cb).symbols, q.symbols);
}

TEST(QuantizerTest, CenterGradientIgnoresElementOrder) {
  Rng rng(12);
  std::vector<double> v(64);
  for (double& x : v) x = rng.Uniform(-2, 2);
  std::vector<double> shuffled = v;
  std::reverse(shuffled.begin(), shuffled.end());
  std::swap(shuffled[3], shuffled[40]);
  auto center_grad = [](const std::vector<double>& data) {
    TensorD c({4}, {-1.5, -0.5, 0.5, 1.5});
    c.set_requires_grad(true);
    Sum(SoftQuantize(TensorD({64}, data), c, 1.0)).Backward();
    return std::vector<double>(c.grad().begin(), c.grad().end());
  };
  const auto a = center_grad(v), b = center_grad(shuffled);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(a[j], b[j], 1e-12);
}

}  // namespace
}  // namespace hsc
