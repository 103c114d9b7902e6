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
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "hsc/bytes.h"
#include "hsc/checkpoint.h"
#include "hsc/codec.h"
#include "hsc/corpus.h"
#include "hsc/trainer.h"

namespace hsc {
namespace {

namespace fs = std::filesystem;

TrainConfig TinyTrainConfig() {
  TrainConfig t;
  CodecConfig& c = t.codec;
  c.c1 = 6;
  c.c2 = 3;
  c.e1_width = 8;
  c.e1_blocks = 1;
  c.e2_width = 6;
  c.e2_blocks = 1;
  c.context_hidden = 6;
  c.context_layers = 2;
  t.epochs = 2;
  t.corpus_size = 12;
  t.image_size = 32;
  t.extractor_steps = 5;
  t.rate_warmup_steps = 1;
  return t;
}

std::string TempDir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hsc_trainer_test_" + name);
  fs::remove_all(p);
  return p.string();
}

std::string ReadText(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorKind KindOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kUsage;
}

TEST(TrainConfigTest, RejectsBadValues) {
  TrainConfig t = TinyTrainConfig();
  t.lr = 0;
  EXPECT_EQ(KindOf([&] { t.Validate(); }), ErrorKind::kUsage);
  t = TinyTrainConfig();
  t.epochs = 0;
  EXPECT_EQ(KindOf([&] { t.Validate(); }), ErrorKind::kUsage);
  t = TinyTrainConfig();
  t.codec.target_bpp = 0;
  EXPECT_EQ(KindOf([&] { t.Validate(); }), ErrorKind::kUsage);
  t = TinyTrainConfig();
  t.rate_warmup_steps = -1;
  EXPECT_EQ(KindOf([&] { t.Validate(); }), ErrorKind::kUsage);
}

TEST(TrainTest, WritesLogAndCheckpoints) {
  const TrainConfig t = TinyTrainConfig();
  const std::string dir = TempDir("outputs");
  TrainResult res = Train(t, PrepareCorpus(t), dir);
  ASSERT_EQ(res.epochs.size(), 2u);
  EXPECT_TRUE(fs::exists(fs::path(dir) / "epoch1.ckpt"));
  EXPECT_TRUE(fs::exists(fs::path(dir) / "epoch2.ckpt"));
  EXPECT_TRUE(fs::exists(fs::path(dir) / "model.ckpt"));

  std::istringstream log(ReadText((fs::path(dir) / "train_log.csv").string()));
  std::string line;
  ASSERT_TRUE(std::getline(log, line));
  EXPECT_EQ(line.rfind("epoch,step,lr,loss,rate_bpp,", 0), 0u);
  int rows = 0;
  while (std::getline(log, line)) ++rows;
  EXPECT_EQ(rows, 2 * 12 / 4);

  // The final checkpoint is the returned model.
  HierarchicalModel back = HierarchicalModel::Load(LoadCheckpoint(
      (fs::path(dir) / "model.ckpt").string()));
  Checkpoint a, b;
  res.model.Save(a);
  back.Save(b);
  EXPECT_EQ(SerializeCheckpoint(a), SerializeCheckpoint(b));
  fs::remove_all(dir);
}

TEST(TrainTest, CheckpointBytesAreReproducible) {
  const TrainConfig t = TinyTrainConfig();
  const std::string d1 = TempDir("rep1"), d2 = TempDir("rep2");
  Train(t, PrepareCorpus(t), d1);
  Train(t, PrepareCorpus(t), d2);
  for (const char* name : {"epoch1.ckpt", "model.ckpt", "train_log.csv"}) {
    EXPECT_EQ(ReadFileBytes((fs::path(d1) / name).string()),
              ReadFileBytes((fs::path(d2) / name).string()))
        << name;
  }
  TrainConfig other = t;
  other.codec.seed = 2;
  const std::string d3 = TempDir("rep3");
  Train(other, PrepareCorpus(other), d3);
  EXPECT_NE(ReadFileBytes((fs::path(d1) / "model.ckpt").string()),
            ReadFileBytes((fs::path(d3) / "model.ckpt").string()));
  fs::remove_all(d1);
  fs::remove_all(d2);
  fs::remove_all(d3);
}

TEST(TrainTest, DivergenceNamesLastGoodCheckpoint) {
  TrainConfig t = TinyTrainConfig();
  t.lr = 1e30;
  const std::string dir = TempDir("diverge");
  try {
    Train(t, PrepareCorpus(t), dir);
    ADD_FAILURE() << "training did not diverge";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumerical);
    EXPECT_NE(std::string(e.what()).find("last good checkpoint"), std::string::npos);
  }
  fs::remove_all(dir);
}

// Without the rate term nothing pushes the mask down, so the trained rate
// ends above a run that is pulled toward a low target.
TEST(TrainTest, AlphaZeroAblationKeepsMoreBits) {
  TrainConfig t = TinyTrainConfig();
  t.epochs = 3;
  t.corpus_size = 24;
  t.decay_every = 10;
  t.codec.target_bpp = 0.05;
  TrainConfig free = t;
  free.codec.alpha = 0;
  const auto corpus = PrepareCorpus(t);
  const double constrained = Train(t, corpus, "").epochs.back().rate_bpp;
  const double unconstrained = Train(free, corpus, "").epochs.back().rate_bpp;
  EXPECT_GT(unconstrained, constrained);
}

TEST(EvaluateTest, ResultsIndependentOfWorkerCount) {
  const TrainConfig t = TinyTrainConfig();
  const HierarchicalModel model(t.codec);
  const std::vector<CorpusImage> eval = GenerateCorpus(5, 32, 3);
  ::setenv("HSC_THREADS", "1", 1);
  std::vector<ImageEval> one;
  const RdPoint p1 = EvaluateSet(model, eval, &one);
  ::setenv("HSC_THREADS", "3", 1);
  std::vector<ImageEval> three;
  const RdPoint p3 = EvaluateSet(model, eval, &three);
  ::unsetenv("HSC_THREADS");
  EXPECT_EQ(p1.bpp, p3.bpp);
  EXPECT_EQ(p1.mse, p3.mse);
  EXPECT_EQ(p1.dpl, p3.dpl);
  ASSERT_EQ(one.size(), three.size());
  for (size_t i = 0; i < one.size(); ++i) EXPECT_EQ(one[i].bpp, three[i].bpp);
  EXPECT_GT(p1.bpp, 0);
  EXPECT_TRUE(std::isfinite(p1.psnr));
}

TEST(RdSweepTest, SingleConfigGivesSingleRowAndReusesCheckpoint) {
  TrainConfig t = TinyTrainConfig();
  t.epochs = 1;
  const std::vector<CorpusImage> eval = GenerateCorpus(3, 32, 5);
  const std::string dir = TempDir("sweep");
  const std::vector<RdPoint> first = RdSweep({t}, eval, dir);
  ASSERT_EQ(first.size(), 1u);
  const std::string csv = ReadText((fs::path(dir) / "rd.csv").string());
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_EQ(csv.rfind("bpp,psnr,ms_ssim,dpl,", 0), 0u);
  // dpl_scale is calibrated during training, so the digest is the trained
  // model's, not the input config's.
  const HierarchicalModel trained =
      HierarchicalModel::Load(LoadCheckpoint((fs::path(dir) / "run0" / "model.ckpt").string()));
  EXPECT_EQ(first[0].digest, trained.config().Digest());

  // A second sweep loads run0/model.ckpt instead of retraining.
  const auto stamp = fs::last_write_time(fs::path(dir) / "run0" / "model.ckpt");
  const std::vector<RdPoint> again = RdSweep({t}, eval, dir);
  EXPECT_EQ(fs::last_write_time(fs::path(dir) / "run0" / "model.ckpt"), stamp);
  EXPECT_EQ(again[0].bpp, first[0].bpp);
  EXPECT_EQ(ReadText((fs::path(dir) / "rd.csv").string()), csv);
  fs::remove_all(dir);
}

TEST(RdSweepTest, FailedRunLeavesFlaggedPartialCsv) {
  TrainConfig good = TinyTrainConfig();
  good.epochs = 1;
  TrainConfig bad = good;
  bad.corpus = "/nonexistent/corpus";
  const std::vector<CorpusImage> eval = GenerateCorpus(2, 32, 5);
  const std::string dir = TempDir("partial");
  EXPECT_THROW(RdSweep({good, bad}, eval, dir), Error);
  const std::string csv = ReadText((fs::path(dir) / "rd.csv").string());
  EXPECT_NE(csv.find("# incomplete: run 1"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace hsc
