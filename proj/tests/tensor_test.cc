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


#include <cmath>
#include <string>
#include <vector>

#include "gradient_suite.h"
#include "gtest/gtest.h"
#include "hsc/checkpoint.h"
#include "hsc/gradcheck.h"
#include "hsc/nn.h"
#include "hsc/ops.h"
#include "hsc/optim.h"

namespace hsc {
namespace {

TEST(TensorTest, ReluForwardBackward) {
  TensorD x({3}, {-1.0, 0.0, 2.0});
  x.set_requires_grad(true);
  TensorD y = Relu(x);
  EXPECT_EQ(std::vector<double>(y.values().begin(), y.values().end()),
            (std::vector<double>{0, 0, 2}));
  std::vector<double> seed = {1, 1, 1};
  y.Backward(seed);
  EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()),
            (std::vector<double>{0, 0, 1}));
}

TEST(TensorTest, ChannelNormOneHot) {
  TensorD x({1, 3, 1, 1}, {3.0, 0.0, 0.0});
  TensorD y = ChannelNorm(x, 1e-10);
  EXPECT_NEAR(y[0], 1.0, 1e-9);
  EXPECT_EQ(y[1], 0.0);
  EXPECT_EQ(y[2], 0.0);
}

TEST(TensorTest, ShapeMismatchRejected) {
  TensorD a({2, 3}), b({3, 2});
  try {
    Add(a, b);
    FAIL() << "expected error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShape);
  }
  EXPECT_THROW(MatMul(a, a), Error);
}

TEST(TensorTest, NonFiniteOutputRejected) {
  TensorD x({2}, {0.0, 1.0});
  try {
    Log(x);
    FAIL() << "expected error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumerical);
  }
}

TEST(TensorTest, UnknownOpKindRejected) {
  std::vector<TensorD> in = {TensorD({1}, 1.0)};
  try {
    ApplyOp<double>("frobnicate", in, OpAttrs{});
    FAIL() << "expected error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUsage);
  }
}

TEST(TensorTest, SecondBackwardRejected) {
  TensorD x({2}, {1.0, 2.0});
  x.set_requires_grad(true);
  TensorD y = Sum(Square(x));
  y.Backward();
  EXPECT_DOUBLE_EQ(x.grad()[1], 4.0);
  EXPECT_THROW(y.Backward(), Error);
  // The first accumulation is untouched.
  EXPECT_DOUBLE_EQ(x.grad()[1], 4.0);
}

TEST(TensorTest, ForwardIsDeterministic) {
  Rng a(7), b(7);
  TensorD xa = testing::RandomTensor({1, 2, 6, 6}, a);
  TensorD wa = testing::RandomTensor({3, 2, 3, 3}, a);
  TensorD xb = testing::RandomTensor({1, 2, 6, 6}, b);
  TensorD wb = testing::RandomTensor({3, 2, 3, 3}, b);
  TensorD ya = Conv2d(xa, wa, TensorD(), 2, 1);
  TensorD yb = Conv2d(xb, wb, TensorD(), 2, 1);
  ASSERT_EQ(ya.shape(), yb.shape());
  for (int64_t i = 0; i < ya.size(); ++i) EXPECT_EQ(ya[i], yb[i]);
}

TEST(TensorTest, TransposedConvShape) {
  TensorD x({1, 2, 4, 5});
  TensorD w({2, 3, 5, 5});
  TensorD y = ConvTranspose2d(x, w, TensorD(), 2, 2, 1);
  EXPECT_EQ(y.shape(), (Shape{1, 3, 8, 10}));
}

TEST(GradcheckTest, Conv2dExample) {
  Rng rng(11);
  std::vector<TensorD> in = {testing::RandomTensor({1, 2, 5, 5}, rng),
                             testing::RandomTensor({2, 2, 3, 3}, rng)};
  ScalarFn fn = [](std::span<const TensorD> v) {
    return Sum(Square(Conv2d(v[0], v[1], TensorD(), 1, 1)));
  };
  GradcheckReport rep = Gradcheck(fn, in, 1e-4);
  EXPECT_TRUE(rep.passed) << rep.detail;
  EXPECT_LT(rep.worst, 1e-4);
}

TEST(GradcheckTest, SumReluPositive) {
  Rng rng(3);
  std::vector<TensorD> in = {testing::RandomTensor({4, 4}, rng, 0.1, 1.0)};
  ScalarFn fn = [](std::span<const TensorD> v) { return Sum(Relu(v[0])); };
  GradcheckReport rep = Gradcheck(fn, in, 1e-6);
  EXPECT_TRUE(rep.passed) << rep.detail;
}

TEST(GradcheckTest, ShrinksStepAcrossKink) {
  // 5e-7 sits inside the first two probes but not the third.
  ScalarFn fn = [](std::span<const TensorD> v) { return Sum(Relu(v[0])); };
  GradcheckReport rep = Gradcheck(fn, {TensorD({1}, {5e-7})}, 1e-6);
  EXPECT_TRUE(rep.passed) << rep.detail;
  EXPECT_EQ(rep.refined, 2);

  // A gradient that is wrong everywhere is not excused as a kink.
  ScalarFn wrong = [](std::span<const TensorD> v) {
    TensorD frozen({1}, {v[0].values()[0]});
    return Sum(Add(Scale(v[0], 0.5), Scale(frozen, 0.5)));
  };
  rep = Gradcheck(wrong, {TensorD({1}, {0.3})}, 1e-4);
  EXPECT_FALSE(rep.passed);
  EXPECT_EQ(rep.refined, 0);
}

TEST(GradcheckTest, MseOfConv) {
  Rng rng(5);
  std::vector<TensorD> in = {testing::RandomTensor({1, 2, 6, 6}, rng),
                             testing::RandomTensor({3, 2, 3, 3}, rng)};
  TensorD target = testing::RandomTensor({1, 3, 6, 6}, rng);
  ScalarFn fn = [&](std::span<const TensorD> v) {
    return Mse(Conv2d(v[0], v[1], TensorD(), 1, 1), target);
  };
  EXPECT_TRUE(Gradcheck(fn, in, 1e-4).passed);
}

TEST(GradcheckTest, CrossEntropyOfSoftmax) {
  Rng rng(9);
  std::vector<TensorD> in = {testing::RandomTensor({4, 5}, rng, -2, 2)};
  TensorD onehot({4, 5});
  for (int r = 0; r < 4; ++r) onehot.mutable_values()[r * 5 + (r % 5)] = 1.0;
  ScalarFn fn = [&](std::span<const TensorD> v) {
    return CrossEntropy(Softmax(v[0], 1), onehot, 1);
  };
  EXPECT_TRUE(Gradcheck(fn, in, 1e-4).passed);
}

TEST(GradcheckTest, LayersCompose) {
  Rng rng(13);
  Conv2dLayer<double> conv("c", 2, 4, 3, 1, rng);
  SelfAttention<double> attn("a", 4, rng);
  // Give the zero-initialised output projection something to differentiate.
  for (double& v : attn.output.value.mutable_values()) v = rng.Uniform(-0.5, 0.5);
  std::vector<TensorD> in = {testing::RandomTensor({2, 2, 3, 3}, rng)};
  ScalarFn fn = [&](std::span<const TensorD> v) {
    return Sum(Square(attn(Relu(conv(v[0])))));
  };
  GradcheckReport rep = Gradcheck(fn, in, 1e-4);
  EXPECT_TRUE(rep.passed) << rep.detail;
}

// Every primitive, randomized shapes, 50 seeds each.
class PrimitiveSweep : public ::testing::TestWithParam<std::string_view> {};

TEST_P(PrimitiveSweep, MatchesFiniteDifferences) {
  testing::OpSweepResult r = testing::SweepOp(GetParam(), 50, 1e-4);
  EXPECT_EQ(r.failures, 0) << r.first_failure;
  EXPECT_EQ(r.cases, 50);
}

INSTANTIATE_TEST_SUITE_P(AllOps, PrimitiveSweep, ::testing::ValuesIn(OpKinds()),
                         [](const auto& info) {
                           return std::string(info.param);
                         });

TEST(AdamTest, FirstStepMovesByLr) {
  Parameter<double> p("p", TensorD({1}, {1.0}));
  p.value.mutable_grad()[0] = 1.0;
  std::vector<Parameter<double>*> list = {&p};
  AdamStep<double>(list, {.lr = 0.1});
  EXPECT_NEAR(p.value[0], 0.9, 1e-6);
  EXPECT_EQ(p.step_count, 1);
  EXPECT_FALSE(p.value.has_grad() && p.value.grad()[0] != 0.0);
}

TEST(AdamTest, ZeroGradientLeavesValue) {
  Parameter<double> p("p", TensorD({2}, {0.5, -0.5}));
  std::vector<Parameter<double>*> list = {&p};
  AdamStep<double>(list, {});
  EXPECT_EQ(p.value[0], 0.5);
  EXPECT_EQ(p.value[1], -0.5);
  EXPECT_EQ(p.step_count, 1);
}

TEST(AdamTest, ParallelParamsAgree) {
  Parameter<double> a("a", TensorD({3}, {0.1, 0.2, 0.3}));
  Parameter<double> b("b", TensorD({3}, {0.1, 0.2, 0.3}));
  std::vector<Parameter<double>*> list = {&a, &b};
  for (int step = 0; step < 5; ++step) {
    for (auto* p : list) {
      for (int i = 0; i < 3; ++i) p->value.mutable_grad()[i] = 0.5 * i - step;
    }
    AdamStep<double>(list, {});
  }
  for (int i = 0; i < 3; ++i) EXPECT_EQ(a.value[i], b.value[i]);
}

TEST(AdamTest, NonFiniteGradientRejected) {
  Parameter<double> p("p", TensorD({1}, {1.0}));
  p.value.mutable_grad()[0] = std::nan("");
  std::vector<Parameter<double>*> list = {&p};
  EXPECT_THROW(AdamStep<double>(list, {}), Error);
  EXPECT_EQ(p.value[0], 1.0);
}

TEST(CheckpointTest, RoundTrip) {
  Rng rng(1);
  Conv2dLayer<float> conv("enc.conv0", 3, 4, 5, 2, rng);
  ParamList<float> params;
  conv.Collect(params);
  Checkpoint ckpt;
  AppendParameters<float>(params, ckpt);
  ckpt.metadata = "digest=1234";
  std::vector<uint8_t> bytes = SerializeCheckpoint(ckpt);
  ASSERT_GE(bytes.size(), 4u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "HSC1");

  Checkpoint parsed = ParseCheckpoint(bytes);
  EXPECT_EQ(parsed.metadata, "digest=1234");
  Rng other(2);
  Conv2dLayer<float> fresh("enc.conv0", 3, 4, 5, 2, other);
  ParamList<float> fresh_params;
  fresh.Collect(fresh_params);
  RestoreParameters<float>(parsed, fresh_params);
  for (int64_t i = 0; i < conv.weight.value.size(); ++i) {
    EXPECT_EQ(conv.weight.value[i], fresh.weight.value[i]);
  }
  EXPECT_EQ(SerializeCheckpoint(parsed), bytes);
}

TEST(CheckpointTest, TruncatedRejected) {
  Checkpoint ckpt;
  ckpt.arrays.push_back({"w", {2, 2}, {1, 2, 3, 4}});
  std::vector<uint8_t> bytes = SerializeCheckpoint(ckpt);
  bytes.pop_back();
  try {
    ParseCheckpoint(bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFormat);
  }
}

}  // namespace
}  // namespace hsc
