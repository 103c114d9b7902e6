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


// Command-line front end: training, coding, evaluation, sweeps and the
// perceptual-metric tools.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hsc/bytes.h"
#include "hsc/checkpoint.h"
#include "hsc/codec.h"
#include "hsc/config.h"
#include "hsc/corpus.h"
#include "hsc/error.h"
#include "hsc/image.h"
#include "hsc/masking.h"
#include "hsc/metrics.h"
#include "hsc/perceptual.h"
#include "hsc/trainer.h"
#include "hsc/twoafc.h"

namespace hsc {
namespace {

namespace fs = std::filesystem;

int ExitCode(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo:
      return 2;
    case ErrorKind::kFormat:
      return 3;
    case ErrorKind::kNumerical:
      return 4;
    default:
      return 1;
  }
}

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void WriteText(const std::string& path, const std::string& text) {
  WriteFileBytes(path, {reinterpret_cast<const uint8_t*>(text.data()), text.size()});
}

// Options shared by every subcommand. Keys in the --config file fill any
// option not given on the command line; train and sweep read the file as a
// training configuration instead.
struct Common {
  std::string config;
  std::optional<uint64_t> seed;
};

void AddCommon(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "key=value configuration file");
  sub->add_option("--seed", c.seed, "random seed");
}

// Fills unset string options from the config file and rejects keys that
// name no option of this subcommand.
void FillFromConfig(CLI::App* sub, const Common& c,
                    const std::map<std::string, std::string*>& opts) {
  if (c.config.empty()) return;
  for (const auto& [key, value] : LoadKeyValues(c.config)) {
    const auto it = opts.find(key);
    Check(it != opts.end(), ErrorKind::kUsage,
          "config: unknown key '" + key + "' for " + sub->get_name());
    if (sub->get_option("--" + key)->count() == 0) *it->second = value;
  }
}

HierarchicalModel LoadModel(const std::string& path) {
  Check(!path.empty(), ErrorKind::kUsage, "--model is required");
  return HierarchicalModel::Load(LoadCheckpoint(path));
}

TrainConfig TrainConfigFrom(const Common& c) {
  TrainConfig tc = LoadTrainConfig(c.config);
  if (c.seed) tc.codec.seed = *c.seed;
  tc.Validate();
  if (tc.codec.beta == 0) {
    std::fprintf(stderr, "warning: beta = 0, nothing trains the decoders\n");
  }
  return tc;
}

// --saliency: a PGM (nonzero = salient), "heuristic", or "none".
std::optional<SaliencyMask> SaliencyFor(const std::string& spec, const Image& image,
                                        double threshold) {
  if (spec.empty() || spec == "none") return std::nullopt;
  if (spec == "heuristic") return HeuristicSaliency(image, threshold);
  const GrayImage gray = ReadPgm(spec);
  Check(gray.width == image.width && gray.height == image.height, ErrorKind::kUsage,
        "saliency map size differs from the image");
  return PoolSaliency(gray);
}

double ParseDouble(const std::string& s, const std::string& what) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  Fail(ErrorKind::kUsage, what + ": not a number: " + s);
}

std::vector<double> ParseList(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(ParseDouble(item, what));
  Check(!out.empty(), ErrorKind::kUsage, what + " is empty");
  return out;
}

// Extractor and weights from a metric checkpoint, or from a codec checkpoint
// that carries one.
void LoadMetric(const std::string& path, FeatureExtractor<float>& ex,
                ChannelWeights<float>& w) {
  const Checkpoint ckpt = LoadCheckpoint(path);
  RestoreExtractor(ckpt, ex, w);
}

int Run(int argc, char** argv) {
  CLI::App app{"Hierarchical saliency-aware learned image codec"};
  app.require_subcommand(1);
  Common common;

  // train
  std::string train_out;
  CLI::App* train = app.add_subcommand("train", "train a codec");
  AddCommon(train, common);
  train->add_option("--out", train_out, "output directory")->required();

  // compress
  std::string c_model, c_in, c_out, c_sal, c_thr = "0.3";
  CLI::App* compress = app.add_subcommand("compress", "PPM to bitstream");
  AddCommon(compress, common);
  compress->add_option("--model", c_model, "model checkpoint");
  compress->add_option("--in", c_in, "input PPM");
  compress->add_option("--out", c_out, "output .hsc");
  compress->add_option("--saliency", c_sal, "PGM mask, 'heuristic' or 'none'");
  compress->add_option("--threshold", c_thr, "heuristic saliency threshold");

  // decompress
  std::string d_model, d_in, d_out;
  CLI::App* decompress = app.add_subcommand("decompress", "bitstream to PPM");
  AddCommon(decompress, common);
  decompress->add_option("--model", d_model, "model checkpoint");
  decompress->add_option("--in", d_in, "input .hsc");
  decompress->add_option("--out", d_out, "output PPM");

  // eval
  std::string e_model, e_dir, e_ref, e_test, e_metric, e_out;
  CLI::App* eval = app.add_subcommand(
      "eval", "code every PPM in --dir, or compare --ref against --test");
  AddCommon(eval, common);
  eval->add_option("--model", e_model, "model checkpoint (with --dir)");
  eval->add_option("--dir", e_dir, "directory of PPM images, optional PGM masks");
  eval->add_option("--ref", e_ref, "reference PPM");
  eval->add_option("--test", e_test, "distorted PPM");
  eval->add_option("--metric", e_metric, "metric or model checkpoint for dpl");
  eval->add_option("--out", e_out, "CSV path (stdout when empty)");

  // sweep
  std::string s_targets = "0.2,0.4,0.8", s_out, s_eval, s_count = "50", s_eval_seed = "99";
  CLI::App* sweep = app.add_subcommand("sweep", "train one model per target bpp");
  AddCommon(sweep, common);
  sweep->add_option("--targets", s_targets, "comma-separated target bpp values");
  sweep->add_option("--out", s_out, "output directory")->required();
  sweep->add_option("--eval-dir", s_eval, "evaluation images (generated when empty)");
  sweep->add_option("--eval-count", s_count, "generated evaluation images");
  sweep->add_option("--eval-seed", s_eval_seed, "generated evaluation seed");

  // fit-metric
  std::string f_data, f_metric, f_out, f_iters = "400", f_steps = "150";
  CLI::App* fit = app.add_subcommand("fit-metric", "fit dpl channel weights to 2AFC data");
  AddCommon(fit, common);
  fit->add_option("--data", f_data, "2AFC dataset directory");
  fit->add_option("--metric", f_metric, "starting extractor (pretrained when empty)");
  fit->add_option("--out", f_out, "output metric checkpoint");
  fit->add_option("--iterations", f_iters, "optimiser iterations");
  fit->add_option("--extractor-steps", f_steps, "pretraining steps without --metric");

  // score-2afc
  std::string k_data, k_metric, k_out;
  CLI::App* score = app.add_subcommand("score-2afc", "2AFC agreement of the metrics");
  AddCommon(score, common);
  score->add_option("--data", k_data, "2AFC dataset directory");
  score->add_option("--metric", k_metric, "metric or model checkpoint for dpl");
  score->add_option("--out", k_out, "CSV path (stdout when empty)");

  // Generators for the synthetic data sets.
  std::string g_out, g_count = "500", g_size = "64", g_channel = "13";
  CLI::App* corpus = app.add_subcommand("make-corpus", "write a synthetic corpus");
  AddCommon(corpus, common);
  corpus->add_option("--out", g_out, "output directory")->required();
  corpus->add_option("--count", g_count, "images");
  corpus->add_option("--size", g_size, "side length in pixels");
  CLI::App* make2afc = app.add_subcommand("make-2afc", "write a synthetic 2AFC set");
  AddCommon(make2afc, common);
  make2afc->add_option("--out", g_out, "output directory")->required();
  make2afc->add_option("--count", g_count, "records");
  make2afc->add_option("--size", g_size, "side length in pixels");
  make2afc->add_option("--channel", g_channel, "flat index of the rater's channel");
  make2afc->add_option("--metric", f_metric, "extractor checkpoint (pretrained when empty)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  auto to_int = [](const std::string& s, const std::string& what) {
    const double v = ParseDouble(s, what);
    Check(v == static_cast<int>(v), ErrorKind::kUsage, what + " must be an integer");
    return static_cast<int>(v);
  };
  const uint64_t seed = common.seed.value_or(1);

  if (train->parsed()) {
    const TrainConfig tc = TrainConfigFrom(common);
    const TrainResult res = Train(tc, PrepareCorpus(tc), train_out);
    const EpochSummary& last = res.epochs.back();
    std::printf("final epoch: rate %.4f bpp, mse %.6f, dpl %.4f\n", last.rate_bpp, last.mse,
                last.dpl);
    return 0;
  }

  if (compress->parsed()) {
    FillFromConfig(compress, common,
                   {{"model", &c_model}, {"in", &c_in}, {"out", &c_out},
                    {"saliency", &c_sal}, {"threshold", &c_thr}});
    Check(!c_in.empty() && !c_out.empty(), ErrorKind::kUsage, "--in and --out are required");
    const HierarchicalModel model = LoadModel(c_model);
    const Image image = ReadPpm(c_in);
    const std::optional<SaliencyMask> sal =
        SaliencyFor(c_sal, image, ParseDouble(c_thr, "threshold"));
    CodecAudit audit;
    const std::vector<uint8_t> bytes = Compress(model, image, sal ? &*sal : nullptr, &audit);
    WriteFileBytes(c_out, bytes);
    std::printf("%s: %.4f bpp (stage 2 %.1f%%), %zu bytes\n", c_out.c_str(),
                audit.stream.bpp(), 100.0 * audit.stream.stage2_share(), bytes.size());
    return 0;
  }

  if (decompress->parsed()) {
    FillFromConfig(decompress, common, {{"model", &d_model}, {"in", &d_in}, {"out", &d_out}});
    Check(!d_in.empty() && !d_out.empty(), ErrorKind::kUsage, "--in and --out are required");
    const HierarchicalModel model = LoadModel(d_model);
    WritePpm(d_out, Decompress(model, ReadFileBytes(d_in)));
    return 0;
  }

  if (eval->parsed()) {
    FillFromConfig(eval, common,
                   {{"model", &e_model}, {"dir", &e_dir}, {"ref", &e_ref}, {"test", &e_test},
                    {"metric", &e_metric}, {"out", &e_out}});
    std::string csv;
    if (!e_dir.empty()) {
      const HierarchicalModel model = LoadModel(e_model);
      std::vector<std::string> names;
      for (const auto& entry : fs::directory_iterator(e_dir)) {
        if (entry.path().extension() == ".ppm") names.push_back(entry.path().stem().string());
      }
      std::sort(names.begin(), names.end());
      const std::vector<CorpusImage> images = LoadCorpus(e_dir);
      std::vector<ImageEval> per;
      const RdPoint mean = EvaluateSet(model, images, &per);
      csv = "image,bpp,stage2_share,mse,psnr,ms_ssim,dpl\n";
      for (size_t i = 0; i < per.size(); ++i) {
        const ImageEval& e = per[i];
        csv += names[i] + ',' + Num(e.bpp) + ',' + Num(e.stage2_share) + ',' + Num(e.mse) +
               ',' + Num(e.psnr) + ',' + Num(e.ms_ssim) + ',' + Num(e.dpl) + '\n';
      }
      csv += "mean," + Num(mean.bpp) + ",," + Num(mean.mse) + ',' + Num(mean.psnr) + ',' +
             Num(mean.ms_ssim) + ',' + Num(mean.dpl) + '\n';
    } else {
      Check(!e_ref.empty() && !e_test.empty(), ErrorKind::kUsage,
            "eval needs --dir, or --ref and --test");
      const Image ref = ReadPpm(e_ref), test = ReadPpm(e_test);
      const double mse = Mse8(ref, test);
      std::string dpl;
      if (!e_metric.empty()) {
        FeatureExtractor<float> ex;
        ChannelWeights<float> w;
        LoadMetric(e_metric, ex, w);
        const std::vector<double> e = ChannelDistances(ex, ref, test);
        const std::vector<double> flat = w.Flat();
        double d = 0;
        for (size_t c = 0; c < e.size(); ++c) d += flat[c] * flat[c] * e[c];
        dpl = Num(d);
      }
      csv = "mse,psnr,ms_ssim,dpl\n" + Num(mse) + ',' + Num(PsnrFromMse8(mse)) + ',' +
            Num(MsSsim(ref, test)) + ',' + dpl + '\n';
    }
    if (e_out.empty()) {
      std::fputs(csv.c_str(), stdout);
    } else {
      WriteText(e_out, csv);
    }
    return 0;
  }

  if (sweep->parsed()) {
    const TrainConfig base = TrainConfigFrom(common);
    std::vector<TrainConfig> configs;
    for (double t : ParseList(s_targets, "targets")) {
      TrainConfig c = base;
      c.codec.target_bpp = t;
      c.Validate();
      configs.push_back(c);
    }
    const std::vector<CorpusImage> eval_set =
        s_eval.empty()
            ? GenerateCorpus(to_int(s_count, "eval-count"), base.image_size,
                             static_cast<uint64_t>(to_int(s_eval_seed, "eval-seed")))
            : LoadCorpus(s_eval);
    const std::vector<RdPoint> points = RdSweep(configs, eval_set, s_out);
    std::fputs(RdCsv(points).c_str(), stdout);
    return 0;
  }

  if (fit->parsed()) {
    FillFromConfig(fit, common,
                   {{"data", &f_data}, {"metric", &f_metric}, {"out", &f_out},
                    {"iterations", &f_iters}, {"extractor-steps", &f_steps}});
    Check(!f_data.empty() && !f_out.empty(), ErrorKind::kUsage,
          "--data and --out are required");
    const std::vector<TwoAfcRecord> records = LoadTwoAfcDataset(f_data);
    FeatureExtractor<float> ex;
    ChannelWeights<float> start;
    if (!f_metric.empty()) {
      LoadMetric(f_metric, ex, start);
    } else {
      Rng rng(seed);
      ex = FeatureExtractor<float>(DefaultExtractorWidths(), rng);
      std::vector<Image> refs;
      for (const TwoAfcRecord& r : records) refs.push_back(r.reference);
      PretrainExtractor(ex, refs, to_int(f_steps, "extractor-steps"), seed);
    }
    FitOptions opts;
    opts.iterations = to_int(f_iters, "iterations");
    FitReport report;
    ChannelWeights<float> w = FitChannelWeights(GatherEvidence(ex, records), opts, &report);
    Checkpoint ckpt;
    AppendExtractor(ex, w, ckpt);
    SaveCheckpoint(f_out, ckpt);
    std::printf("2afc on fitting set: %.4f (unit weights) -> %.4f (fitted)\n",
                report.initial_score, report.final_score);
    return 0;
  }

  if (score->parsed()) {
    FillFromConfig(score, common, {{"data", &k_data}, {"metric", &k_metric}, {"out", &k_out}});
    Check(!k_data.empty(), ErrorKind::kUsage, "--data is required");
    const std::vector<TwoAfcRecord> records = LoadTwoAfcDataset(k_data);
    Check(!records.empty(), ErrorKind::kUsage, "2AFC dataset is empty");
    std::vector<double> frac;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> dist;
    for (const TwoAfcRecord& r : records) {
      frac.push_back(r.fraction_a);
      dist["mse"].first.push_back(Mse8(r.reference, r.a));
      dist["mse"].second.push_back(Mse8(r.reference, r.b));
      dist["ms_ssim"].first.push_back(1.0 - MsSsim(r.reference, r.a));
      dist["ms_ssim"].second.push_back(1.0 - MsSsim(r.reference, r.b));
    }
    if (!k_metric.empty()) {
      FeatureExtractor<float> ex;
      ChannelWeights<float> w;
      LoadMetric(k_metric, ex, w);
      const ChannelEvidence ev = GatherEvidence(ex, records);
      dist["dpl"] = {EvidenceDistances(ev.a, w), EvidenceDistances(ev.b, w)};
    }
    std::string csv = "metric,score\n";
    for (const auto& [name, d] : dist) {
      csv += name + ',' + Num(TwoAfcScore(d.first, d.second, frac)) + '\n';
    }
    if (k_out.empty()) {
      std::fputs(csv.c_str(), stdout);
    } else {
      WriteText(k_out, csv);
    }
    return 0;
  }

  if (corpus->parsed()) {
    WriteCorpus(g_out, GenerateCorpus(to_int(g_count, "count"), to_int(g_size, "size"), seed));
    return 0;
  }

  if (make2afc->parsed()) {
    FeatureExtractor<float> ex;
    ChannelWeights<float> unused;
    Rng rng(seed);
    if (!f_metric.empty()) {
      LoadMetric(f_metric, ex, unused);
    } else {
      ex = FeatureExtractor<float>(DefaultExtractorWidths(), rng);
      PretrainExtractor(ex, [&] {
        std::vector<Image> imgs;
        for (const CorpusImage& ci : GenerateCorpus(32, to_int(g_size, "size"), seed)) {
          imgs.push_back(ci.image);
        }
        return imgs;
      }(), 150, seed);
    }
    SaveTwoAfcDataset(g_out, SyntheticTwoAfc(ex, to_int(g_count, "count"),
                                             to_int(g_channel, "channel"),
                                             to_int(g_size, "size"), rng));
    return 0;
  }
  return 1;
}

}  // namespace
}  // namespace hsc

int main(int argc, char** argv) {
  try {
    return hsc::Run(argc, argv);
  } catch (const hsc::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return hsc::ExitCode(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
