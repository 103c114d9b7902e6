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


#ifndef HSC_TRAINER_H_
#define HSC_TRAINER_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hsc/codec.h"
#include "hsc/config.h"
#include "hsc/corpus.h"

namespace hsc {

struct TrainConfig {
  CodecConfig codec;
  double lr = 1e-3;
  int batch_size = 4;
  int epochs = 6;
  int decay_every = 2;  // epochs between step decays
  double decay = 0.1;
  // Steps trained without the rate term. An untrained context model prices
  // every symbol near log2(L), and pushing the mask down from that estimate
  // saturates the importance channel before the decoder can use it.
  int rate_warmup_steps = 150;

  // Corpus: a directory of PPM/PGM pairs, or a generated one when empty.
  std::string corpus;
  int corpus_size = 500;
  int image_size = 64;
  uint64_t corpus_seed = 7;

  // Perceptual metric checkpoint (extractor plus channel weights). When
  // empty the extractor is pretrained on the corpus with unit weights.
  std::string metric;
  int extractor_steps = 150;
  // Sets codec.dpl_scale so dpl matches pixel mse on lightly noised
  // corpus images.
  bool auto_dpl_scale = true;

  void Validate() const;
  void Apply(ConfigReader& reader);  // also applies codec keys
};

TrainConfig LoadTrainConfig(const std::string& path);  // empty path: defaults

struct StepLog {
  int epoch = 0;
  int step = 0;
  double lr = 0;
  LossParts parts;
  double loss = 0;
};

struct EpochSummary {
  int epoch = 0;
  double lr = 0;
  double rate_bpp = 0;     // mean mask-weighted training rate
  double entropy_bpp = 0;  // mean unweighted cross-entropy
  double distortion = 0;
  double mse = 0;
  double dpl = 0;
};

struct TrainResult {
  HierarchicalModel model;
  std::vector<EpochSummary> epochs;
};

// Corpus named by the config (loaded or generated).
std::vector<CorpusImage> PrepareCorpus(const TrainConfig& config);

// Runs the full schedule. With a non-empty out_dir, writes
// epoch<N>.ckpt after every epoch, model.ckpt at the end and
// train_log.csv with one row per step. A non-finite loss throws kNumerical
// naming the last good checkpoint.
TrainResult Train(const TrainConfig& config, const std::vector<CorpusImage>& corpus,
                  const std::string& out_dir,
                  const std::function<void(const StepLog&)>& on_step = nullptr);

// Worker count: HSC_THREADS when set, otherwise 1.
int WorkerCount();
// Runs fn(i) for i in [0, n) over WorkerCount() threads. Callers write
// results by index, so output does not depend on the worker count.
void ParallelFor(int n, const std::function<void(int)>& fn);

struct ImageEval {
  double bpp = 0;            // real coded bits / pixels
  double entropy_bpp = 0;    // unweighted cross-entropy estimate
  double weighted_bpp = 0;   // mask-weighted training estimate
  double stage2_share = 0;
  double mse = 0;            // 8-bit scale
  double psnr = 0;
  double ms_ssim = 0;
  double dpl = 0;
};

// Compresses and decompresses one image and measures it. saliency may be
// null (importance-only).
ImageEval EvaluateImage(const HierarchicalModel& model, const Image& image,
                        const SaliencyMask* saliency);

struct RdPoint {
  double bpp = 0;
  double mse = 0;
  double psnr = 0;
  double ms_ssim = 0;
  double dpl = 0;
  uint64_t digest = 0;
};

// Means over the eval set, real bitstreams throughout.
RdPoint EvaluateSet(const HierarchicalModel& model, const std::vector<CorpusImage>& eval,
                    std::vector<ImageEval>* per_image = nullptr);

// Trains (or loads <out_dir>/run<i>/model.ckpt when present) each config,
// evaluates it on `eval` and writes <out_dir>/rd.csv (rows sorted by bpp)
// and <out_dir>/rd.dat for gnuplot. A failing run leaves a partial CSV
// ending in a "# incomplete" line and rethrows.
std::vector<RdPoint> RdSweep(const std::vector<TrainConfig>& configs,
                             const std::vector<CorpusImage>& eval, const std::string& out_dir);

std::string RdCsv(const std::vector<RdPoint>& points);

}  // namespace hsc

#endif  // HSC_TRAINER_H_
