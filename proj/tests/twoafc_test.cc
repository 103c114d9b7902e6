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


#include "hsc/twoafc.h"

#include <algorithm>
#include <filesystem>
#include <numeric>

#include "gtest/gtest.h"
#include "hsc/error.h"

namespace hsc {
namespace {

TEST(TwoAfcTest, ScoreExamples) {
  const std::vector<double> f = {0.8, 0.3, 0.6};
  // Picks A, B, tie.
  EXPECT_NEAR(TwoAfcScore(std::vector<double>{1, 2, 5}, std::vector<double>{2, 1, 5}, f),
              (0.8 + 0.7 + 0.5) / 3, 1e-12);
  EXPECT_THROW(TwoAfcScore(std::vector<double>{1}, std::vector<double>{1, 2}, f), Error);
  EXPECT_THROW(TwoAfcScore(std::vector<double>{1}, std::vector<double>{1},
                           std::vector<double>{1.5}),
               Error);
}

TEST(TwoAfcTest, ScoreInvariantUnderMonotoneTransform) {
  Rng rng(1);
  std::vector<double> a(50), b(50), f(50), ta(50), tb(50);
  for (int i = 0; i < 50; ++i) {
    a[i] = rng.Uniform(0, 3);
    b[i] = rng.Uniform(0, 3);
    f[i] = rng.Uniform();
    ta[i] = std::exp(2 * a[i]) + 1;
    tb[i] = std::exp(2 * b[i]) + 1;
  }
  EXPECT_DOUBLE_EQ(TwoAfcScore(a, b, f), TwoAfcScore(ta, tb, f));
}

class SyntheticFit : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    Rng rng(11);
    extractor_ = new FeatureExtractor<float>(DefaultExtractorWidths(), rng);
    Rng data(12);
    train_ = new std::vector<TwoAfcRecord>(SyntheticTwoAfc(*extractor_, 120, kChannel, 32, data));
    held_ = new std::vector<TwoAfcRecord>(SyntheticTwoAfc(*extractor_, 60, kChannel, 32, data));
  }
  static void TearDownTestSuite() {
    delete extractor_;
    delete train_;
    delete held_;
  }
  static constexpr int kChannel = 13;
  static FeatureExtractor<float>* extractor_;
  static std::vector<TwoAfcRecord>* train_;
  static std::vector<TwoAfcRecord>* held_;
};

FeatureExtractor<float>* SyntheticFit::extractor_ = nullptr;
std::vector<TwoAfcRecord>* SyntheticFit::train_ = nullptr;
std::vector<TwoAfcRecord>* SyntheticFit::held_ = nullptr;

TEST_F(SyntheticFit, FittedWeightsFavourKnownChannelAndGeneralise) {
  const ChannelEvidence tr = GatherEvidence(*extractor_, *train_);
  const ChannelEvidence te = GatherEvidence(*extractor_, *held_);
  FitReport rep;
  const ChannelWeights<float> w = FitChannelWeights(tr, {}, &rep);
  const std::vector<double> flat = w.Flat();
  for (double v : flat) EXPECT_GE(v, 0.0);
  // Contribution of each channel to the margins, w_c^2 times its spread.
  std::vector<double> share(flat.size(), 0.0);
  for (size_t r = 0; r < tr.a.size(); ++r) {
    for (size_t c = 0; c < flat.size(); ++c) {
      share[c] += flat[c] * flat[c] * std::abs(tr.b[r][c] - tr.a[r][c]);
    }
  }
  EXPECT_EQ(std::max_element(share.begin(), share.end()) - share.begin(), kChannel);
  EXPECT_GE(rep.final_score, rep.initial_score);

  const auto ones = ChannelWeights<float>::Ones(extractor_->TapChannels());
  const double held_ones = TwoAfcScore(EvidenceDistances(te.a, ones),
                                       EvidenceDistances(te.b, ones), te.fraction_a);
  const double held_fit = TwoAfcScore(EvidenceDistances(te.a, w), EvidenceDistances(te.b, w),
                                      te.fraction_a);
  EXPECT_GE(held_fit, held_ones);
}

TEST(TwoAfcTest, DegenerateSharesRejected) {
  ChannelEvidence ev;
  ev.tap_channels = {2};
  ev.a = {{1, 0}, {0, 1}};
  ev.b = {{0, 1}, {1, 0}};
  ev.fraction_a = {0.5, 0.5};
  try {
    FitChannelWeights(ev);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerate);
  }
  ev.a.resize(1);
  ev.b.resize(1);
  ev.fraction_a = {0.9};
  EXPECT_THROW(FitChannelWeights(ev), Error);
}

TEST(TwoAfcTest, ComboPrefersOracleMetric) {
  Rng rng(3);
  const int n = 200;
  std::vector<std::vector<double>> da(3, std::vector<double>(n)), db = da;
  std::vector<double> f(n);
  for (int r = 0; r < n; ++r) {
    for (int k = 0; k < 3; ++k) {
      da[k][r] = rng.Uniform();
      db[k][r] = rng.Uniform();
    }
    f[r] = 1.0 / (1.0 + std::exp(-8 * (db[1][r] - da[1][r])));
  }
  const LinearCombo combo = FitLinearCombo(da, db, f, 200, 5);
  EXPECT_GT(combo.weights[1], 0.0);
  EXPECT_GT(std::abs(combo.weights[1]), 3 * std::abs(combo.weights[0]));
  EXPECT_GT(std::abs(combo.weights[1]), 3 * std::abs(combo.weights[2]));
  for (int k = 0; k < 3; ++k) EXPECT_GE(combo.score, TwoAfcScore(da[k], db[k], f));
  EXPECT_NEAR(combo.score, TwoAfcScore(CombineDistances(combo, da), CombineDistances(combo, db), f),
              1e-12);
}

TEST(TwoAfcTest, ComboHandlesDuplicateMetric) {
  Rng rng(4);
  const int n = 80;
  std::vector<std::vector<double>> da(2, std::vector<double>(n)), db = da;
  std::vector<double> f(n);
  for (int r = 0; r < n; ++r) {
    da[0][r] = da[1][r] = rng.Uniform();
    db[0][r] = db[1][r] = rng.Uniform();
    f[r] = db[0][r] > da[0][r] ? 0.9 : 0.1;
  }
  const LinearCombo combo = FitLinearCombo(da, db, f, 50, 1);
  EXPECT_TRUE(std::isfinite(combo.weights[0]) && std::isfinite(combo.weights[1]));
  EXPECT_NEAR(combo.score, 0.9, 1e-12);
}

TEST(TwoAfcTest, ComboIsDeterministic) {
  Rng rng(5);
  const int n = 60;
  std::vector<std::vector<double>> da(2, std::vector<double>(n)), db = da;
  std::vector<double> f(n);
  for (int r = 0; r < n; ++r) {
    for (int k = 0; k < 2; ++k) da[k][r] = rng.Uniform(), db[k][r] = rng.Uniform();
    f[r] = rng.Uniform();
  }
  EXPECT_EQ(FitLinearCombo(da, db, f, 30, 8).weights, FitLinearCombo(da, db, f, 30, 8).weights);
}

TEST(TwoAfcTest, DatasetRoundTrip) {
  const std::string dir = ::testing::TempDir() + "/twoafc_rt";
  std::filesystem::remove_all(dir);
  Rng rng(6);
  FeatureExtractor<float> ex({4, 4}, rng);
  std::vector<TwoAfcRecord> recs = SyntheticTwoAfc(ex, 3, 1, 16, rng);
  recs[1].bpp = 0.25;
  recs[2].method_a = "jpeg";
  SaveTwoAfcDataset(dir, recs);
  const std::vector<TwoAfcRecord> back = LoadTwoAfcDataset(dir);
  ASSERT_EQ(back.size(), 3u);
  for (size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].id, recs[i].id);
    EXPECT_EQ(back[i].fraction_a, recs[i].fraction_a);
    EXPECT_EQ(back[i].a.pixels, recs[i].a.pixels);
  }
  EXPECT_EQ(back[1].bpp, 0.25);
  EXPECT_EQ(back[2].method_a, "jpeg");
}

}  // namespace
}  // namespace hsc
