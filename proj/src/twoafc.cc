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
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "hsc/corpus.h"
#include "hsc/error.h"

namespace hsc {
namespace {

namespace fs = std::filesystem;

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Softplus without overflow.
double Softplus(double x) { return x > 30 ? x : std::log1p(std::exp(x)); }

void CheckFractions(std::span<const double> f) {
  for (double v : f) {
    Check(std::isfinite(v) && v >= 0.0 && v <= 1.0, ErrorKind::kUsage,
          "2afc: human share outside [0, 1]");
  }
}

}  // namespace

std::vector<TwoAfcRecord> LoadTwoAfcDataset(const std::string& dir) {
  Check(fs::is_directory(dir), ErrorKind::kIo, "2afc directory not found: " + dir);
  std::vector<fs::path> sidecars;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".json") sidecars.push_back(e.path());
  }
  std::sort(sidecars.begin(), sidecars.end());
  std::vector<TwoAfcRecord> out;
  for (const fs::path& p : sidecars) {
    std::ifstream in(p);
    Check(in.good(), ErrorKind::kIo, "cannot open " + p.string());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      Fail(ErrorKind::kFormat, p.string() + ": " + e.what());
    }
    TwoAfcRecord r;
    r.id = p.stem().string();
    try {
      r.reference = ReadPpm((fs::path(dir) / j.at("ref").get<std::string>()).string());
      r.a = ReadPpm((fs::path(dir) / j.at("a").get<std::string>()).string());
      r.b = ReadPpm((fs::path(dir) / j.at("b").get<std::string>()).string());
      r.fraction_a = j.at("fraction_a").get<double>();
      r.method_a = j.value("method_a", "");
      r.method_b = j.value("method_b", "");
      r.bpp = j.value("bpp", 0.0);
    } catch (const nlohmann::json::exception& e) {
      Fail(ErrorKind::kFormat, p.string() + ": " + e.what());
    }
    Check(r.fraction_a >= 0.0 && r.fraction_a <= 1.0, ErrorKind::kFormat,
          p.string() + ": fraction_a outside [0, 1]");
    Check(r.a.width == r.reference.width && r.a.height == r.reference.height &&
              r.b.width == r.reference.width && r.b.height == r.reference.height,
          ErrorKind::kShape, p.string() + ": image sizes differ");
    out.push_back(std::move(r));
  }
  return out;
}

void SaveTwoAfcDataset(const std::string& dir, const std::vector<TwoAfcRecord>& records) {
  fs::create_directories(dir);
  for (const TwoAfcRecord& r : records) {
    WritePpm((fs::path(dir) / (r.id + "_ref.ppm")).string(), r.reference);
    WritePpm((fs::path(dir) / (r.id + "_a.ppm")).string(), r.a);
    WritePpm((fs::path(dir) / (r.id + "_b.ppm")).string(), r.b);
    nlohmann::json j = {{"ref", r.id + "_ref.ppm"}, {"a", r.id + "_a.ppm"},
                        {"b", r.id + "_b.ppm"},     {"fraction_a", r.fraction_a},
                        {"method_a", r.method_a},   {"method_b", r.method_b},
                        {"bpp", r.bpp}};
    std::ofstream out(fs::path(dir) / (r.id + ".json"));
    Check(out.good(), ErrorKind::kIo, "cannot write sidecar for " + r.id);
    out << j.dump(2) << "\n";
  }
}

double TwoAfcScore(std::span<const double> dist_a, std::span<const double> dist_b,
                   std::span<const double> fraction_a) {
  Check(dist_a.size() == dist_b.size() && dist_a.size() == fraction_a.size(),
        ErrorKind::kShape, "2afc: length mismatch");
  Check(!dist_a.empty(), ErrorKind::kUsage, "2afc: no records");
  CheckFractions(fraction_a);
  double total = 0;
  for (size_t i = 0; i < dist_a.size(); ++i) {
    if (dist_a[i] < dist_b[i]) {
      total += fraction_a[i];
    } else if (dist_b[i] < dist_a[i]) {
      total += 1.0 - fraction_a[i];
    } else {
      total += 0.5;
    }
  }
  return total / static_cast<double>(dist_a.size());
}

ChannelEvidence GatherEvidence(const FeatureExtractor<float>& extractor,
                               const std::vector<TwoAfcRecord>& records) {
  ChannelEvidence ev;
  ev.tap_channels = extractor.TapChannels();
  for (const TwoAfcRecord& r : records) {
    ev.a.push_back(ChannelDistances(extractor, r.reference, r.a));
    ev.b.push_back(ChannelDistances(extractor, r.reference, r.b));
    ev.fraction_a.push_back(r.fraction_a);
  }
  return ev;
}

std::vector<double> EvidenceDistances(const std::vector<std::vector<double>>& e,
                                      const ChannelWeights<float>& weights) {
  const std::vector<double> w = weights.Flat();
  std::vector<double> out;
  out.reserve(e.size());
  for (const auto& row : e) {
    Check(row.size() == w.size(), ErrorKind::kShape, "evidence/weight length mismatch");
    double d = 0;
    for (size_t c = 0; c < w.size(); ++c) d += w[c] * w[c] * row[c];
    out.push_back(d);
  }
  return out;
}

ChannelWeights<float> FitChannelWeights(const ChannelEvidence& ev, const FitOptions& options,
                                        FitReport* report) {
  const size_t n = ev.a.size();
  Check(n >= 2 && ev.b.size() == n && ev.fraction_a.size() == n, ErrorKind::kUsage,
        "metric fitting needs at least two records");
  CheckFractions(ev.fraction_a);
  Check(std::any_of(ev.fraction_a.begin(), ev.fraction_a.end(),
                    [](double f) { return f != 0.5; }),
        ErrorKind::kDegenerate, "every human share is 0.5; nothing to fit");
  const size_t C = ev.a[0].size();
  Check(static_cast<int>(C) ==
            std::accumulate(ev.tap_channels.begin(), ev.tap_channels.end(), 0),
        ErrorKind::kShape, "evidence width does not match tap channels");

  // margin_rc = e_B - e_A; the predictor sees m_r = sum_c w_c^2 margin_rc.
  std::vector<double> margin(n * C);
  for (size_t r = 0; r < n; ++r) {
    Check(ev.a[r].size() == C && ev.b[r].size() == C, ErrorKind::kShape, "ragged evidence");
    for (size_t c = 0; c < C; ++c) margin[r * C + c] = ev.b[r][c] - ev.a[r][c];
  }

  std::vector<double> w(C, 1.0);
  auto margins = [&](const std::vector<double>& wv) {
    std::vector<double> m(n, 0.0);
    for (size_t r = 0; r < n; ++r) {
      for (size_t c = 0; c < C; ++c) m[r] += wv[c] * wv[c] * margin[r * C + c];
    }
    return m;
  };
  auto score_of = [&](const std::vector<double>& m) {
    const std::vector<double> zero(n, 0.0);
    // Distance A is 0 and B is m: A is picked exactly when m > 0.
    std::vector<double> db(m);
    return TwoAfcScore(zero, db, ev.fraction_a);
  };

  // Start the logistic slope at the inverse spread of the initial margins.
  std::vector<double> m = margins(w);
  double spread = 0;
  for (double v : m) spread += v * v;
  spread = std::sqrt(spread / n);
  double log_s = -std::log(std::max(spread, 1e-12));

  std::vector<double> best_w = w;
  double best_score = score_of(m);
  const double initial = best_score;
  double loss = 0;

  // Adam over (w, log_s), with one second moment shared by all channel
  // weights. Per-channel normalisation would move a channel whose evidence
  // is nearly constant as fast as an informative one.
  std::vector<double> mw(C, 0.0);
  double vw = 0, ms = 0, vs = 0;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (int it = 1; it <= options.iterations; ++it) {
    const double s = std::exp(log_s);
    std::vector<double> gw(C, 0.0);
    double gs = 0;
    loss = 0;
    for (size_t r = 0; r < n; ++r) {
      const double z = s * m[r];
      const double f = ev.fraction_a[r];
      loss += f * Softplus(-z) + (1 - f) * Softplus(z);
      const double dz = (Sigmoid(z) - f) / static_cast<double>(n);
      gs += dz * z;
      for (size_t c = 0; c < C; ++c) gw[c] += dz * s * margin[r * C + c] * 2.0 * w[c];
    }
    loss /= static_cast<double>(n);
    const double c1 = 1 - std::pow(b1, it), c2 = 1 - std::pow(b2, it);
    double g2 = 0;
    for (size_t c = 0; c < C; ++c) g2 += gw[c] * gw[c];
    vw = b2 * vw + (1 - b2) * g2 / static_cast<double>(C);
    for (size_t c = 0; c < C; ++c) {
      mw[c] = b1 * mw[c] + (1 - b1) * gw[c];
      w[c] -= options.lr * (mw[c] / c1) / (std::sqrt(vw / c2) + eps);
      w[c] = std::max(w[c], 0.0);
    }
    ms = b1 * ms + (1 - b1) * gs;
    vs = b2 * vs + (1 - b2) * gs * gs;
    log_s -= options.lr * (ms / c1) / (std::sqrt(vs / c2) + eps);
    m = margins(w);
    if (it % std::max(1, options.select_every) == 0 || it == options.iterations) {
      const double sc = score_of(m);
      if (sc > best_score) {
        best_score = sc;
        best_w = w;
      }
    }
  }

  ChannelWeights<float> out;
  size_t pos = 0;
  for (int ch : ev.tap_channels) {
    std::vector<float> v(ch);
    for (int c = 0; c < ch; ++c) v[c] = static_cast<float>(best_w[pos++]);
    out.per_tap.emplace_back(Shape{ch}, std::move(v));
  }
  if (report) {
    report->initial_score = initial;
    report->final_score = best_score;
    report->final_loss = loss;
  }
  return out;
}

LinearCombo FitLinearCombo(const std::vector<std::vector<double>>& dist_a,
                           const std::vector<std::vector<double>>& dist_b,
                           std::span<const double> fraction_a, int iterations,
                           uint64_t seed) {
  const size_t M = dist_a.size();
  Check(M >= 1 && dist_b.size() == M, ErrorKind::kShape, "combo: metric count mismatch");
  const size_t n = fraction_a.size();
  Check(n >= 2, ErrorKind::kUsage, "combo: need at least two records");
  CheckFractions(fraction_a);
  for (size_t k = 0; k < M; ++k) {
    Check(dist_a[k].size() == n && dist_b[k].size() == n, ErrorKind::kShape,
          "combo: record count mismatch");
  }

  // Per-metric margins, scaled to unit RMS so one metric's units do not
  // dominate the least-squares fit.
  Eigen::MatrixXd X(n, M);
  std::vector<double> scale(M, 1.0);
  for (size_t k = 0; k < M; ++k) {
    double ss = 0;
    for (size_t r = 0; r < n; ++r) ss += std::pow(dist_b[k][r] - dist_a[k][r], 2);
    scale[k] = ss > 0 ? std::sqrt(ss / n) : 1.0;
    for (size_t r = 0; r < n; ++r) X(r, k) = (dist_b[k][r] - dist_a[k][r]) / scale[k];
  }
  Eigen::VectorXd y(n);
  for (size_t r = 0; r < n; ++r) y(r) = 2 * fraction_a[r] - 1;

  auto evaluate = [&](const Eigen::VectorXd& coef) {
    const Eigen::VectorXd pred = X * coef;
    std::vector<double> zero(n, 0.0), m(pred.data(), pred.data() + n);
    return TwoAfcScore(zero, m, fraction_a);
  };
  auto solve = [&](const std::vector<size_t>& rows) {
    Eigen::MatrixXd A(rows.size(), M);
    Eigen::VectorXd b(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      A.row(i) = X.row(rows[i]);
      b(i) = y(rows[i]);
    }
    return Eigen::VectorXd(A.completeOrthogonalDecomposition().solve(b));
  };

  Eigen::VectorXd best = Eigen::VectorXd::Zero(M);
  double best_score = -1;
  int best_inliers = 0;
  auto consider = [&](const Eigen::VectorXd& coef) {
    if (!coef.allFinite()) return;
    const double sc = evaluate(coef);
    if (sc > best_score) {
      best_score = sc;
      best = coef;
      const Eigen::VectorXd pred = X * coef;
      best_inliers = 0;
      for (size_t r = 0; r < n; ++r) best_inliers += (pred(r) * y(r) > 0) ? 1 : 0;
    }
  };

  for (size_t k = 0; k < M; ++k) consider(Eigen::VectorXd::Unit(M, k));
  std::vector<size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  consider(solve(all));

  Rng rng(seed);
  const size_t sample = std::min(n, std::max<size_t>(M + 1, n / 4));
  for (int it = 0; it < iterations; ++it) {
    std::vector<size_t> idx = all;
    for (size_t i = 0; i < sample; ++i) {
      std::swap(idx[i], idx[i + rng.Below(n - i)]);
    }
    idx.resize(sample);
    const Eigen::VectorXd coef = solve(idx);
    const Eigen::VectorXd pred = X * coef;
    std::vector<size_t> inliers;
    for (size_t r = 0; r < n; ++r) {
      if (pred(r) * y(r) > 0) inliers.push_back(r);
    }
    consider(coef);
    if (inliers.size() > M) consider(solve(inliers));
  }

  LinearCombo out;
  out.weights.resize(M);
  for (size_t k = 0; k < M; ++k) out.weights[k] = best(k) / scale[k];
  out.score = best_score;
  out.inliers = best_inliers;
  return out;
}

std::vector<double> CombineDistances(const LinearCombo& combo,
                                     const std::vector<std::vector<double>>& dist) {
  Check(dist.size() == combo.weights.size() && !dist.empty(), ErrorKind::kShape,
        "combo: metric count mismatch");
  std::vector<double> out(dist[0].size(), 0.0);
  for (size_t k = 0; k < dist.size(); ++k) {
    Check(dist[k].size() == out.size(), ErrorKind::kShape, "combo: ragged distances");
    for (size_t r = 0; r < out.size(); ++r) out[r] += combo.weights[k] * dist[k][r];
  }
  return out;
}

namespace {

// Random degradation of strength in roughly [0, 1].
Image Distort(const Image& ref, Rng& rng) {
  Image out = ref;
  const double strength = rng.Uniform(0.1, 1.0);
  switch (rng.IntIn(0, 3)) {
    case 0:  // additive noise
      for (float& v : out.pixels) v += static_cast<float>(0.12 * strength * rng.Normal());
      break;
    case 1: {  // box blur
      const int r = 1 + static_cast<int>(strength * 2.5);
      for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < ref.height; ++y) {
          for (int x = 0; x < ref.width; ++x) {
            double acc = 0;
            int cnt = 0;
            for (int dy = -r; dy <= r; ++dy) {
              for (int dx = -r; dx <= r; ++dx) {
                const int yy = std::clamp(y + dy, 0, ref.height - 1);
                const int xx = std::clamp(x + dx, 0, ref.width - 1);
                acc += ref.at(c, yy, xx);
                ++cnt;
              }
            }
            out.at(c, y, x) = static_cast<float>(acc / cnt);
          }
        }
      }
      break;
    }
    case 2: {  // blocking
      const int b = 2 + static_cast<int>(strength * 6);
      for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < ref.height; ++y) {
          for (int x = 0; x < ref.width; ++x) {
            out.at(c, y, x) = ref.at(c, (y / b) * b, (x / b) * b);
          }
        }
      }
      break;
    }
    default: {  // colour shift
      for (int c = 0; c < 3; ++c) {
        const float shift = static_cast<float>(0.15 * strength * rng.Normal());
        for (int i = 0; i < ref.pixel_count(); ++i) out.pixels[c * ref.pixel_count() + i] += shift;
      }
      break;
    }
  }
  for (float& v : out.pixels) v = std::clamp(v, 0.0f, 1.0f);
  return Quantize8(out);
}

}  // namespace

std::vector<TwoAfcRecord> SyntheticTwoAfc(const FeatureExtractor<float>& extractor,
                                          int count, int known_channel, int size, Rng& rng) {
  const std::vector<int> ch = extractor.TapChannels();
  const int total = std::accumulate(ch.begin(), ch.end(), 0);
  Check(known_channel >= 0 && known_channel < total, ErrorKind::kUsage,
        "synthetic 2afc: channel out of range");
  Check(count >= 2, ErrorKind::kUsage, "synthetic 2afc: need at least two records");
  std::vector<TwoAfcRecord> out;
  std::vector<double> margin;
  for (int i = 0; i < count; ++i) {
    TwoAfcRecord r;
    char id[32];
    std::snprintf(id, sizeof(id), "syn_%04d", i);
    r.id = id;
    r.reference = Quantize8(SyntheticImage(size, rng).image);
    r.a = Distort(r.reference, rng);
    r.b = Distort(r.reference, rng);
    r.method_a = "distort";
    r.method_b = "distort";
    const double ea = ChannelDistances(extractor, r.reference, r.a)[known_channel];
    const double eb = ChannelDistances(extractor, r.reference, r.b)[known_channel];
    margin.push_back(eb - ea);
    out.push_back(std::move(r));
  }
  double spread = 0;
  for (double m : margin) spread += m * m;
  spread = std::sqrt(spread / count);
  if (spread <= 0) spread = 1;
  for (int i = 0; i < count; ++i) {
    // Shares are rounded to whole raters out of 20.
    out[i].fraction_a = std::round(20.0 * Sigmoid(4.0 * margin[i] / spread)) / 20.0;
  }
  return out;
}

}  // namespace hsc
