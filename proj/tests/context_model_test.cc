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
#include <cstring>
#include <vector>

#include "gtest/gtest.h"
#include "hsc/context_model.h"
#include "hsc/optim.h"
#include "test_util.h"

namespace hsc {
namespace {

using testing::EvenCenters;
using testing::RandomCond;
using testing::RandomContextModel;
using testing::RandomGrid;

TEST(ContextModelTest, ZeroHeadIsUniform) {
  Rng rng(1);
  ContextModel<float> model("ctx", {.levels = 6}, rng);
  const QuantizedLatent q = RandomGrid({3, 4, 4}, 6, rng);
  const std::vector<double> pmfs = PredictPmfs<float>(model, q, {}, EvenCenters<float>(6));
  for (double p : pmfs) EXPECT_NEAR(p, 1.0 / 6.0, 1e-15);
}

TEST(ContextModelTest, PmfRowsNormalisedAndFloored) {
  ContextModel<float> model = RandomContextModel<float>(16, 0, 3);
  // Sharpen the head so some entries hit the floor.
  Rng rng(2);
  const QuantizedLatent q = RandomGrid({4, 5, 5}, 16, rng);
  const std::vector<double> pmfs = PredictPmfs<float>(model, q, {}, EvenCenters<float>(16));
  for (size_t s = 0; s < pmfs.size() / 16; ++s) {
    double sum = 0;
    for (int j = 0; j < 16; ++j) {
      EXPECT_GE(pmfs[s * 16 + j], kPmfFloor);
      sum += pmfs[s * 16 + j];
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
  std::vector<double> big = {0.0, 200.0, -200.0};
  std::vector<double> out(3);
  FlooredSoftmax(big, out);
  EXPECT_GE(out[2], kPmfFloor);
  EXPECT_NEAR(out[0] + out[1] + out[2], 1.0, 1e-12);
}

TEST(ContextModelTest, CausalityAuditPasses) {
  for (int cond : {0, 2}) {
    ContextModel<float> model = RandomContextModel<float>(6, cond, 10 + cond);
    Rng rng(7);
    CausalityReport r = CausalityAudit(model, 100, rng);
    EXPECT_TRUE(r.passed()) << r.first_violation;
    EXPECT_EQ(r.trials, 100);
  }
}

TEST(ContextModelTest, CausalityAuditCatchesLeak) {
  Rng init(5);
  ContextModelConfig cfg{.levels = 4, .hidden = 6, .layers = 2, .zero_head = false,
                         .leak_center = true};
  ContextModel<float> leaky("ctx", cfg, init);
  Rng rng(9);
  CausalityReport r = CausalityAudit(leaky, 100, rng);
  EXPECT_GT(r.violations, 0);
}

TEST(ContextModelTest, ConditioningIsGlobal) {
  ContextModel<double> model = RandomContextModel<double>(6, 1, 21);
  Rng rng(3);
  const QuantizedLatent q = RandomGrid({3, 4, 4}, 6, rng);
  const int64_t sites = 48;
  std::vector<double> cond = RandomCond<double>(1, sites, rng);
  std::vector<double> moved = cond;
  for (double& v : moved) v += rng.Uniform(0.5, 1.0);
  const auto centers = EvenCenters<double>(6);
  const auto a = PredictPmfs<double>(model, q, cond, centers);
  const auto b = PredictPmfs<double>(model, q, moved, centers);
  for (int64_t s = 0; s < sites; ++s) {
    bool differs = false;
    for (int j = 0; j < 6; ++j) differs |= a[s * 6 + j] != b[s * 6 + j];
    EXPECT_TRUE(differs) << "site " << s;
  }
}

TEST(ContextModelTest, SingleSiteIsThePrior) {
  ContextModel<double> model = RandomContextModel<double>(5, 0, 4);
  QuantizedLatent q{{1, 1, 1}, {3}, 0};
  const auto centers = EvenCenters<double>(5);
  const auto pmf = PredictPmfs<double>(model, q, {}, centers);
  // Only biases reach the single site: replay them by hand.
  std::vector<double> h(model.bias(0).value.values().begin(),
                        model.bias(0).value.values().end());
  for (int l = 1; l < model.num_layers(); ++l) {
    for (double& v : h) v = std::max(v, 0.0);
    const auto w = model.weight(l).value.values();
    const auto b = model.bias(l).value.values();
    const int cin = static_cast<int>(h.size());
    std::vector<double> next(b.begin(), b.end());
    for (size_t o = 0; o < next.size(); ++o) {
      for (int c = 0; c < cin; ++c) next[o] += w[(o * cin + c) * 27 + 13] * h[c];
    }
    h = next;
  }
  std::vector<double> expect(5);
  FlooredSoftmax(h, expect);
  for (int j = 0; j < 5; ++j) EXPECT_NEAR(pmf[j], expect[j], 1e-12);
}

TEST(ContextModelTest, BatchedPathMatchesSiteKernel) {
  for (int cond : {0, 2}) {
    ContextModel<double> model = RandomContextModel<double>(6, cond, 30 + cond);
    Rng rng(cond);
    const QuantizedLatent q = RandomGrid({4, 3, 5}, 6, rng);
    const int64_t sites = 60;
    const auto centers = EvenCenters<double>(6);
    const std::vector<double> c = RandomCond<double>(cond, sites, rng);
    const auto kernel = PredictPmfs<double>(model, q, c, centers);

    std::vector<double> v(sites);
    for (int64_t s = 0; s < sites; ++s) v[s] = centers[q.symbols[s]];
    TensorD cond_t;
    if (cond) cond_t = TensorD({1, cond, 4, 3, 5}, c);
    const TensorD batched = model.Pmfs(TensorD({1, 1, 4, 3, 5}, v), cond_t);
    for (int64_t s = 0; s < sites; ++s) {
      for (int j = 0; j < 6; ++j) EXPECT_NEAR(batched[j * sites + s], kernel[s * 6 + j], 1e-12);
    }
  }
}

TEST(ContextModelTest, SequentialEqualsTeacherForcedBitExact) {
  ContextModel<float> model = RandomContextModel<float>(6, 1, 8);
  Rng rng(11);
  const QuantizedLatent q = RandomGrid({3, 5, 4}, 6, rng);
  const auto centers = EvenCenters<float>(6);
  const std::vector<float> c = RandomCond<float>(1, 60, rng);
  const auto batch = PredictPmfs<float>(model, q, c, centers);
  SiteEvaluator<float> eval(model, 3, 5, 4, c, centers);
  std::vector<double> pmf(6);
  for (int64_t s = 0; s < 60; ++s) {
    eval.NextPmf(pmf);
    EXPECT_EQ(std::memcmp(pmf.data(), &batch[s * 6], 6 * sizeof(double)), 0) << s;
    eval.Commit(q.symbols[s]);
  }
}

TEST(ContextModelTest, RateEstimateExamples) {
  const int N = 37;
  std::vector<double> uniform(N * 6, 1.0 / 6.0);
  std::vector<int32_t> symbols(N);
  for (int i = 0; i < N; ++i) symbols[i] = i % 6;
  EXPECT_NEAR(RateEstimate(uniform, 6, symbols), N * std::log2(6.0), 1e-9);
  std::vector<double> zero_w(N, 0.0);
  EXPECT_EQ(RateEstimate(uniform, 6, symbols, zero_w), 0.0);

  const double eps = 1e-6;
  std::vector<double> sharp(N * 6, eps / 5);
  for (int i = 0; i < N; ++i) sharp[i * 6 + symbols[i]] = 1 - eps;
  EXPECT_NEAR(RateEstimate(sharp, 6, symbols), N * -std::log2(1 - eps), 1e-9);
  EXPECT_THROW(RateEstimate(uniform, 6, std::vector<int32_t>(3)), Error);
}

TEST(ContextModelTest, RequiresConditioningIffConfigured) {
  Rng rng(1);
  ContextModel<float> model("ctx", {.levels = 4, .cond_channels = 1}, rng);
  EXPECT_THROW(model.Logits(TensorF({1, 1, 2, 2, 2}), TensorF()), Error);
  EXPECT_THROW(model.Logits(TensorF({1, 1, 2, 2, 2}), TensorF({1, 1, 2, 2, 3})), Error);
}

// Training the model alone on a fixed corpus of structured grids lowers the
// rate epoch over epoch.
TEST(ContextModelTest, RateDecreasesDuringTraining) {
  for (uint64_t seed : {1, 2, 3}) {
    Rng rng(seed);
    ContextModel<float> model("ctx", {.levels = 6, .hidden = 12, .layers = 3}, rng);
    ParamList<float> params;
    model.Collect(params);
    const auto centers = EvenCenters<float>(6);
    std::vector<QuantizedLatent> corpus;
    for (int i = 0; i < 8; ++i) corpus.push_back(testing::SmoothGrid({4, 6, 6}, 6, rng));
    double previous = 1e18;
    for (int epoch = 0; epoch < 4; ++epoch) {
      double total = 0;
      for (const QuantizedLatent& q : corpus) {
        std::vector<float> v(q.size());
        for (int64_t s = 0; s < q.size(); ++s) v[s] = centers[q.symbols[s]];
        TensorF bits = Sum(model.CodeLengths(TensorF({1, 1, 4, 6, 6}, v), TensorF(), q.symbols));
        total += bits.item();
        Scale(bits, 1.0 / q.size()).Backward();
        AdamStep<float>(params, {.lr = 1e-2});
      }
      EXPECT_LT(total, previous) << "seed " << seed << " epoch " << epoch;
      previous = total;
    }
  }
}

}  // namespace
}  // namespace hsc
