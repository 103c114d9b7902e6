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


#include "hsc/trainer.h"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <thread>

#include "hsc/error.h"
#include "hsc/metrics.h"
#include "hsc/optim.h"

namespace hsc {
namespace {

namespace fs = std::filesystem;

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string Hex(uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
  return buf;
}

SaliencyMask MaskOf(const CorpusImage& ci) {
  if (ci.saliency.pixels.empty()) {
    return SaliencyMask::Filled((ci.image.width + 7) / 8, (ci.image.height + 7) / 8, 0,
                                SaliencySource::kIngested);
  }
  return PoolSaliency(ci.saliency);
}

// Mean pixel mse over mean dpl on lightly noised corpus images.
double AutoDplScale(const FeatureExtractor<float>& ex, const ChannelWeights<float>& w,
                    const std::vector<CorpusImage>& corpus, uint64_t seed) {
  Rng rng(seed ^ 0xD1B54A32D192ED03ull);
  const int n = std::min<int>(32, static_cast<int>(corpus.size()));
  double mse = 0, dpl = 0;
  const std::vector<double> flat = w.Flat();
  for (int i = 0; i < n; ++i) {
    const Image& img = corpus[i].image;
    Image noisy = img;
    for (float& v : noisy.pixels) {
      v = std::clamp(v + static_cast<float>(0.05 * rng.Normal()), 0.0f, 1.0f);
    }
    mse += Mse8(img, noisy) / (255.0 * 255.0);
    const std::vector<double> e = ChannelDistances(ex, img, noisy);
    for (size_t c = 0; c < e.size(); ++c) dpl += flat[c] * flat[c] * e[c];
  }
  Check(dpl > 0, ErrorKind::kDegenerate, "dpl is zero on the corpus; cannot normalise it");
  return mse / dpl;
}

void WriteLogHeader(std::ofstream& log) {
  log << "epoch,step,lr,loss,rate_bpp,entropy_bpp,stage2_bpp,distortion,mse,dpl,aux,kept,clipped\n";
}

void WriteLogRow(std::ofstream& log, const StepLog& s) {
  const LossParts& p = s.parts;
  log << s.epoch << ',' << s.step << ',' << Num(s.lr) << ',' << Num(s.loss) << ','
      << Num(p.rate_bpp) << ',' << Num(p.entropy_bpp) << ',' << Num(p.stage2_bpp) << ','
      << Num(p.distortion) << ',' << Num(p.mse) << ',' << Num(p.dpl) << ',' << Num(p.aux)
      << ',' << Num(p.kept_fraction) << ',' << (p.rate_clipped ? 1 : 0) << '\n';
}

}  // namespace

void TrainConfig::Validate() const {
  codec.Validate();
  Check(lr > 0, ErrorKind::kUsage, "config: lr must be > 0");
  Check(epochs >= 1, ErrorKind::kUsage, "config: epochs must be >= 1");
  Check(batch_size >= 1, ErrorKind::kUsage, "config: batch_size must be >= 1");
  Check(decay_every >= 1 && decay > 0, ErrorKind::kUsage, "config: bad lr decay");
  Check(corpus_size >= 1 && image_size >= 32 && image_size % 32 == 0, ErrorKind::kUsage,
        "config: generated images must be a positive multiple of 32 px");
  Check(rate_warmup_steps >= 0, ErrorKind::kUsage, "config: rate_warmup_steps must be >= 0");
  Check(extractor_steps >= 0, ErrorKind::kUsage, "config: extractor_steps must be >= 0");
}

void TrainConfig::Apply(ConfigReader& r) {
  codec.Apply(r);
  r.Get("lr", lr);
  r.Get("batch_size", batch_size);
  r.Get("epochs", epochs);
  r.Get("decay_every", decay_every);
  r.Get("decay", decay);
  r.Get("corpus", corpus);
  r.Get("corpus_size", corpus_size);
  r.Get("image_size", image_size);
  r.Get("corpus_seed", corpus_seed);
  r.Get("metric", metric);
  r.Get("rate_warmup_steps", rate_warmup_steps);
  r.Get("extractor_steps", extractor_steps);
  r.Get("auto_dpl_scale", auto_dpl_scale);
}

TrainConfig LoadTrainConfig(const std::string& path) {
  TrainConfig c;
  if (!path.empty()) {
    ConfigReader r(LoadKeyValues(path));
    c.Apply(r);
    r.RejectUnknown();
  }
  c.Validate();
  return c;
}

std::vector<CorpusImage> PrepareCorpus(const TrainConfig& config) {
  if (!config.corpus.empty()) {
    std::vector<CorpusImage> c = LoadCorpus(config.corpus);
    Check(!c.empty(), ErrorKind::kIo, "corpus directory has no .ppm files: " + config.corpus);
    return c;
  }
  return GenerateCorpus(config.corpus_size, config.image_size, config.corpus_seed);
}

TrainResult Train(const TrainConfig& config_in, const std::vector<CorpusImage>& corpus,
                  const std::string& out_dir,
                  const std::function<void(const StepLog&)>& on_step) {
  TrainConfig config = config_in;
  config.Validate();
  Check(!corpus.empty(), ErrorKind::kUsage, "train: empty corpus");
  const int W = corpus[0].image.width, H = corpus[0].image.height;
  for (const CorpusImage& ci : corpus) {
    Check(ci.image.width == W && ci.image.height == H, ErrorKind::kShape,
          "train: corpus images must share one size");
  }
  Check(W % 32 == 0 && H % 32 == 0, ErrorKind::kShape,
        "train: corpus image size must be a multiple of 32");

  FeatureExtractor<float> extractor;
  ChannelWeights<float> dpl_weights;
  if (!config.metric.empty()) {
    RestoreExtractor(LoadCheckpoint(config.metric), extractor, dpl_weights);
  } else {
    Rng rng(config.codec.seed ^ 0x5DEECE66Dull);
    extractor = FeatureExtractor<float>(DefaultExtractorWidths(), rng);
    std::vector<Image> imgs;
    for (size_t i = 0; i < std::min<size_t>(corpus.size(), 64); ++i) imgs.push_back(corpus[i].image);
    PretrainExtractor(extractor, imgs, config.extractor_steps, config.codec.seed);
    dpl_weights = ChannelWeights<float>::Ones(extractor.TapChannels());
  }
  if (config.auto_dpl_scale) {
    config.codec.dpl_scale = AutoDplScale(extractor, dpl_weights, corpus, config.codec.seed);
  }

  TrainResult result;
  result.model = HierarchicalModel(config.codec);
  HierarchicalModel& model = result.model;
  model.SetPerceptual(extractor, dpl_weights);
  ParamList<float> params;
  model.Collect(params);

  std::vector<SaliencyMask> masks;
  masks.reserve(corpus.size());
  for (const CorpusImage& ci : corpus) masks.push_back(MaskOf(ci));

  std::ofstream log;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    log.open(fs::path(out_dir) / "train_log.csv");
    Check(log.good(), ErrorKind::kIo, "cannot write training log in " + out_dir);
    WriteLogHeader(log);
  }
  std::string last_good = "(none)";

  Rng order_rng(config.codec.seed ^ 0x2545F4914F6CDD1Dull);
  const int n = static_cast<int>(corpus.size());
  const int batch = std::min(config.batch_size, n);
  const int steps = n / batch;
  int global_step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.lr * std::pow(config.decay, epoch / config.decay_every);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (int i = n - 1; i > 0; --i) {
      std::swap(order[i], order[order_rng.Below(static_cast<uint64_t>(i) + 1)]);
    }
    EpochSummary sum;
    sum.epoch = epoch + 1;
    sum.lr = lr;
    for (int s = 0; s < steps; ++s) {
      std::vector<const Image*> imgs;
      std::vector<const SaliencyMask*> sal;
      for (int b = 0; b < batch; ++b) {
        const int idx = order[s * batch + b];
        imgs.push_back(&corpus[idx].image);
        sal.push_back(&masks[idx]);
      }
      StepLog step;
      step.epoch = epoch + 1;
      step.step = ++global_step;
      step.lr = lr;
      try {
        step.parts = model.TrainingLoss(ImagesToTensor<float>(imgs), SaliencyTensor<float>(sal),
                                        step.step > config.rate_warmup_steps ? 1.0 : 0.0);
        step.loss = step.parts.loss[0];
        Check(std::isfinite(step.loss), ErrorKind::kNumerical, "loss is not finite");
        step.parts.loss.Backward();
        AdamStep<float>(params, {.lr = lr});
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kNumerical) throw;
        Fail(ErrorKind::kNumerical, std::string("training diverged at step ") +
                                        std::to_string(step.step) + ": " + e.what() +
                                        "; last good checkpoint: " + last_good);
      }
      if (log.is_open()) WriteLogRow(log, step);
      if (on_step) on_step(step);
      sum.rate_bpp += step.parts.rate_bpp / steps;
      sum.entropy_bpp += step.parts.entropy_bpp / steps;
      sum.distortion += step.parts.distortion / steps;
      sum.mse += step.parts.mse / steps;
      sum.dpl += step.parts.dpl / steps;
    }
    result.epochs.push_back(sum);
    if (!out_dir.empty()) {
      Checkpoint ckpt;
      model.Save(ckpt);
      const std::string path = (fs::path(out_dir) / ("epoch" + std::to_string(epoch + 1) + ".ckpt")).string();
      SaveCheckpoint(path, ckpt);
      last_good = path;
      log.flush();
    }
  }
  if (!out_dir.empty()) {
    Checkpoint ckpt;
    model.Save(ckpt);
    SaveCheckpoint((fs::path(out_dir) / "model.ckpt").string(), ckpt);
  }
  return result;
}

int WorkerCount() {
  const char* env = std::getenv("HSC_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  Check(end && *end == '\0' && v >= 1 && v <= 256, ErrorKind::kUsage,
        std::string("HSC_THREADS must be an integer in [1, 256], got ") + env);
  return static_cast<int>(v);
}

void ParallelFor(int n, const std::function<void(int)>& fn) {
  const int workers = std::min(WorkerCount(), std::max(n, 1));
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

ImageEval EvaluateImage(const HierarchicalModel& model, const Image& image,
                        const SaliencyMask* saliency) {
  CodecAudit audit;
  const std::vector<uint8_t> bytes = Compress(model, image, saliency, &audit);
  const Image recon = Quantize8(Decompress(model, bytes));
  ImageEval ev;
  const double pixels = static_cast<double>(image.width) * image.height;
  ev.bpp = audit.stream.bpp();
  ev.stage2_share = audit.stream.stage2_share();
  ev.mse = Mse8(image, recon);
  ev.psnr = PsnrFromMse8(ev.mse);
  ev.ms_ssim = MsSsim(image, recon);
  if (model.has_perceptual()) {
    const std::vector<double> e = ChannelDistances(model.extractor(), image, recon);
    const std::vector<double> w = model.dpl_weights().Flat();
    for (size_t c = 0; c < e.size(); ++c) ev.dpl += w[c] * w[c] * e[c];
  }
  // Differentiable estimates through the training path.
  NoGradGuard ng;
  const Image padded = ReflectPad(image, 32);
  const Image* batch[] = {&padded};
  TensorF sal;
  if (saliency) {
    const SaliencyMask fitted = FitSaliency(*saliency, padded.width / 8, padded.height / 8);
    const SaliencyMask* m[] = {&fitted};
    sal = SaliencyTensor<float>(m);
  }
  const LossParts parts = model.TrainingLoss(ImagesToTensor<float>(batch), sal);
  const double scale = static_cast<double>(padded.width) * padded.height / pixels;
  ev.entropy_bpp = parts.entropy_bpp * scale;
  ev.weighted_bpp = parts.rate_bpp * scale;
  return ev;
}

RdPoint EvaluateSet(const HierarchicalModel& model, const std::vector<CorpusImage>& eval,
                    std::vector<ImageEval>* per_image) {
  Check(!eval.empty(), ErrorKind::kUsage, "evaluation set is empty");
  std::vector<ImageEval> evs(eval.size());
  std::vector<SaliencyMask> masks(eval.size());
  for (size_t i = 0; i < eval.size(); ++i) masks[i] = MaskOf(eval[i]);
  ParallelFor(static_cast<int>(eval.size()),
              [&](int i) { evs[i] = EvaluateImage(model, eval[i].image, &masks[i]); });
  RdPoint p;
  for (const ImageEval& e : evs) {
    p.bpp += e.bpp;
    p.mse += e.mse;
    p.ms_ssim += e.ms_ssim;
    p.dpl += e.dpl;
  }
  const double n = static_cast<double>(evs.size());
  p.bpp /= n;
  p.mse /= n;
  p.ms_ssim /= n;
  p.dpl /= n;
  p.psnr = PsnrFromMse8(p.mse);
  p.digest = model.config().Digest();
  if (per_image) *per_image = std::move(evs);
  return p;
}

std::string RdCsv(const std::vector<RdPoint>& points) {
  std::string out = "bpp,psnr,ms_ssim,dpl,mse,digest\n";
  for (const RdPoint& p : points) {
    out += Num(p.bpp) + "," + Num(p.psnr) + "," + Num(p.ms_ssim) + "," + Num(p.dpl) + "," +
           Num(p.mse) + "," + Hex(p.digest) + "\n";
  }
  return out;
}

std::vector<RdPoint> RdSweep(const std::vector<TrainConfig>& configs,
                             const std::vector<CorpusImage>& eval, const std::string& out_dir) {
  Check(!configs.empty(), ErrorKind::kUsage, "sweep: no configs");
  fs::create_directories(out_dir);
  std::vector<RdPoint> points;
  auto write = [&](const std::string& trailer) {
    std::vector<RdPoint> sorted = points;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const RdPoint& a, const RdPoint& b) { return a.bpp < b.bpp; });
    std::ofstream csv(fs::path(out_dir) / "rd.csv");
    csv << RdCsv(sorted) << trailer;
    std::ofstream dat(fs::path(out_dir) / "rd.dat");
    dat << "# bpp psnr ms_ssim dpl mse\n";
    for (const RdPoint& p : sorted) {
      dat << Num(p.bpp) << ' ' << Num(p.psnr) << ' ' << Num(p.ms_ssim) << ' ' << Num(p.dpl)
          << ' ' << Num(p.mse) << '\n';
    }
    dat << trailer;
    Check(csv.good() && dat.good(), ErrorKind::kIo, "cannot write sweep output in " + out_dir);
  };
  for (size_t i = 0; i < configs.size(); ++i) {
    try {
      const std::string run = (fs::path(out_dir) / ("run" + std::to_string(i))).string();
      const fs::path ckpt = fs::path(run) / "model.ckpt";
      HierarchicalModel model;
      if (fs::exists(ckpt)) {
        model = HierarchicalModel::Load(LoadCheckpoint(ckpt.string()));
      } else {
        model = Train(configs[i], PrepareCorpus(configs[i]), run).model;
      }
      points.push_back(EvaluateSet(model, eval));
    } catch (const Error& e) {
      write("# incomplete: run " + std::to_string(i) + " failed: " + e.what() + "\n");
      throw;
    }
  }
  write("");
  std::stable_sort(points.begin(), points.end(),
                   [](const RdPoint& a, const RdPoint& b) { return a.bpp < b.bpp; });
  return points;
}

}  // namespace hsc
