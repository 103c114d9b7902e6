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


#include "hsc/context_model.h"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "hsc/error.h"

namespace hsc {
namespace {

constexpr int kKernel = 3;
constexpr int kTaps = kKernel * kKernel * kKernel;

int CausalInputs(const ContextModelConfig& c, int layer) {
  return layer == 0 ? 1 : c.hidden;
}

int Outputs(const ContextModelConfig& c, int layer) {
  return layer == c.layers - 1 ? c.levels : c.hidden;
}

}  // namespace

void FlooredSoftmax(std::span<const double> logits, std::span<double> pmf) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (size_t j = 0; j < logits.size(); ++j) {
    pmf[j] = std::exp(logits[j] - mx);
    z += pmf[j];
  }
  const double keep = 1.0 - static_cast<double>(logits.size()) * kPmfFloor;
  for (double& p : pmf) p = keep * (p / z) + kPmfFloor;
}

template <typename T>
ContextModel<T>::ContextModel(const std::string& name,
                              const ContextModelConfig& config, Rng& rng)
    : config_(config) {
  Check(config.levels >= 2, ErrorKind::kUsage, "context model needs L >= 2");
  Check(config.layers >= 1 && config.hidden >= 1 && config.cond_channels >= 0,
        ErrorKind::kUsage, "context model: bad layer geometry");
  for (int l = 0; l < config.layers; ++l) {
    const int cin = CausalInputs(config, l);
    const int cout = Outputs(config, l);
    const bool center = l > 0 || config.leak_center;
    TapMask mask = CausalTapMask(cin, config.cond_channels, kKernel, center);
    const std::string prefix = name + ".layer" + std::to_string(l);
    Tensor<T> w;
    if (l == config.layers - 1 && config.zero_head) {
      w = Tensor<T>({cout, cin + config.cond_channels, kKernel, kKernel, kKernel});
    } else {
      const int64_t fan_in = std::max(1, mask.CountActive());
      w = HeUniform<T>({cout, cin + config.cond_channels, kKernel, kKernel, kKernel},
                       fan_in, rng);
    }
    // Inactive taps are never read; keep them at zero so checkpoints are
    // canonical.
    auto wv = w.mutable_values();
    const int64_t per_out = static_cast<int64_t>(mask.active.size());
    for (int o = 0; o < cout; ++o) {
      for (int64_t i = 0; i < per_out; ++i) {
        if (!mask.active[i]) wv[o * per_out + i] = T(0);
      }
    }
    weights_.emplace_back(prefix + ".weight", std::move(w));
    biases_.emplace_back(prefix + ".bias", Tensor<T>({cout}));
    masks_.push_back(std::move(mask));
  }
}

template <typename T>
Tensor<T> ContextModel<T>::Logits(const Tensor<T>& values, const Tensor<T>& cond) const {
  Check(values.rank() == 5 && values.dim(1) == 1, ErrorKind::kShape,
        "context model: values must be N x 1 x D x H x W, got " +
            ShapeString(values.shape()));
  const bool conditioned = config_.cond_channels > 0;
  Check(conditioned == cond.defined(), ErrorKind::kUsage,
        "context model: conditioning required iff cond_channels > 0");
  if (conditioned) {
    Shape want = values.shape();
    want[1] = config_.cond_channels;
    Check(cond.shape() == want, ErrorKind::kShape,
          "context model: conditioning " + ShapeString(cond.shape()) +
              ", expected " + ShapeString(want));
  }
  Tensor<T> x = values;
  for (int l = 0; l < config_.layers; ++l) {
    Tensor<T> in = conditioned ? Concat<T>({x, cond}, 1) : x;
    x = MaskedConv3d(in, weights_[l].value, biases_[l].value, masks_[l]);
    if (l + 1 < config_.layers) x = Relu(x);
  }
  return x;
}

template <typename T>
Tensor<T> ContextModel<T>::Pmfs(const Tensor<T>& values, const Tensor<T>& cond) const {
  const double keep = 1.0 - config_.levels * kPmfFloor;
  return AddScalar(Scale(Softmax(Logits(values, cond), 1), keep), kPmfFloor);
}

template <typename T>
Tensor<T> ContextModel<T>::CodeLengths(const Tensor<T>& values, const Tensor<T>& cond,
                                       std::span<const int32_t> symbols) const {
  for (int32_t s : symbols) {
    Check(s >= 0 && s < config_.levels, ErrorKind::kShape,
          "context model: symbol out of range");
  }
  return NegLog2Gather(Pmfs(values, cond), symbols, 1);
}

template <typename T>
void ContextModel<T>::Collect(ParamList<T>& out) {
  for (int l = 0; l < config_.layers; ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
}

template <typename T>
SiteEvaluator<T>::SiteEvaluator(const ContextModel<T>& model, int64_t depth,
                                int64_t height, int64_t width,
                                std::span<const T> cond, std::span<const T> centers)
    : model_(&model),
      depth_(depth),
      height_(height),
      width_(width),
      sites_(depth * height * width),
      cond_channels_(model.config().cond_channels),
      centers_(centers.begin(), centers.end()) {
  const ContextModelConfig& cfg = model.config();
  Check(depth >= 0 && height >= 0 && width >= 0, ErrorKind::kShape,
        "site evaluator: negative grid");
  Check(static_cast<int>(centers.size()) == cfg.levels, ErrorKind::kShape,
        "site evaluator: codebook size does not match the model");
  Check(static_cast<int64_t>(cond.size()) == cond_channels_ * sites_,
        ErrorKind::kShape, "site evaluator: conditioning size mismatch");
  cond_.resize(cond.size());
  for (int k = 0; k < cond_channels_; ++k) {
    for (int64_t s = 0; s < sites_; ++s) cond_[s * cond_channels_ + k] = cond[k * sites_ + s];
  }
  for (int l = 0; l < cfg.layers; ++l) {
    const TapMask& mask = model.masks()[l];
    PackedLayer p;
    p.in_causal = CausalInputs(cfg, l);
    p.out = Outputs(cfg, l);
    const int cin = p.in_causal + cond_channels_;
    auto w = model.weight(l).value.values();
    auto at = [&](int o, int c, int t) { return w[(static_cast<int64_t>(o) * cin + c) * kTaps + t]; };
    for (int t = 0; t < kTaps; ++t) {
      if (mask.active[t]) p.causal_taps.push_back(t);  // same pattern for every causal channel
    }
    for (int t : p.causal_taps) {
      for (int c = 0; c < p.in_causal; ++c) {
        for (int o = 0; o < p.out; ++o) p.causal_w.push_back(at(o, c, t));
      }
    }
    for (int t = 0; t < kTaps; ++t) {
      for (int k = 0; k < cond_channels_; ++k) {
        for (int o = 0; o < p.out; ++o) p.cond_w.push_back(at(o, p.in_causal + k, t));
      }
    }
    auto b = model.bias(l).value.values();
    p.bias.assign(b.begin(), b.end());
    layers_.push_back(std::move(p));
  }
  values_.assign(sites_, T(0));
  for (int l = 0; l + 1 < cfg.layers; ++l) acts_.emplace_back(sites_ * cfg.hidden, T(0));
  logits_.resize(cfg.levels);
}

template <typename T>
const T* SiteEvaluator<T>::Input(int layer, int64_t site) const {
  if (layer == 0) return &values_[site];
  return &acts_[layer - 1][site * layers_[layer].in_causal];
}

template <typename T>
void SiteEvaluator<T>::NextPmf(std::span<double> pmf) {
  Check(cursor_ < sites_, ErrorKind::kUsage, "site evaluator: past the last site");
  Check(static_cast<int>(pmf.size()) == model_->config().levels, ErrorKind::kShape,
        "site evaluator: pmf buffer size");
  const int64_t q = cursor_;
  const int64_t d = q / (height_ * width_);
  const int64_t h = (q / width_) % height_;
  const int64_t w = q % width_;
  std::vector<T> acc;
  for (size_t l = 0; l < layers_.size(); ++l) {
    const PackedLayer& p = layers_[l];
    acc.assign(p.bias.begin(), p.bias.end());
    T* a = acc.data();
    const int out = p.out;
    for (size_t ti = 0; ti < p.causal_taps.size(); ++ti) {
      const int t = p.causal_taps[ti];
      const int64_t nd = d + t / 9 - 1, nh = h + (t / 3) % 3 - 1, nw = w + t % 3 - 1;
      if (nd < 0 || nd >= depth_ || nh < 0 || nh >= height_ || nw < 0 || nw >= width_) {
        continue;
      }
      const T* src = Input(static_cast<int>(l), (nd * height_ + nh) * width_ + nw);
      const T* wt = p.causal_w.data() + ti * p.in_causal * out;
      for (int c = 0; c < p.in_causal; ++c) {
        const T x = src[c];
        if (x == T(0)) continue;
        const T* wr = wt + c * out;
        for (int o = 0; o < out; ++o) a[o] += x * wr[o];
      }
    }
    if (cond_channels_ > 0) {
      for (int t = 0; t < kTaps; ++t) {
        const int64_t nd = d + t / 9 - 1, nh = h + (t / 3) % 3 - 1, nw = w + t % 3 - 1;
        if (nd < 0 || nd >= depth_ || nh < 0 || nh >= height_ || nw < 0 || nw >= width_) {
          continue;
        }
        const T* src = &cond_[((nd * height_ + nh) * width_ + nw) * cond_channels_];
        const T* wt = p.cond_w.data() + static_cast<int64_t>(t) * cond_channels_ * out;
        for (int k = 0; k < cond_channels_; ++k) {
          const T x = src[k];
          const T* wr = wt + k * out;
          for (int o = 0; o < out; ++o) a[o] += x * wr[o];
        }
      }
    }
    if (l + 1 < layers_.size()) {
      T* dst = &acts_[l][q * out];
      for (int o = 0; o < out; ++o) dst[o] = a[o] > T(0) ? a[o] : T(0);
    } else {
      std::copy(acc.begin(), acc.end(), logits_.begin());
    }
  }
  std::vector<double> lg(logits_.begin(), logits_.end());
  for (double v : lg) {
    Check(std::isfinite(v), ErrorKind::kNumerical, "context model: non-finite logit");
  }
  FlooredSoftmax(lg, pmf);
  evaluated_ = true;
}

template <typename T>
void SiteEvaluator<T>::Commit(int32_t symbol) {
  Check(evaluated_, ErrorKind::kUsage, "site evaluator: commit before NextPmf");
  Check(symbol >= 0 && symbol < static_cast<int32_t>(centers_.size()),
        ErrorKind::kFormat, "site evaluator: symbol out of range");
  values_[cursor_] = centers_[symbol];
  ++cursor_;
  evaluated_ = false;
}

template <typename T>
std::vector<double> PredictPmfs(const ContextModel<T>& model,
                                const QuantizedLatent& symbols,
                                std::span<const T> cond, std::span<const T> centers) {
  Check(symbols.shape.size() == 3, ErrorKind::kShape,
        "predict_pmfs: symbol grid must be D x H x W");
  SiteEvaluator<T> eval(model, symbols.shape[0], symbols.shape[1], symbols.shape[2],
                        cond, centers);
  const int L = model.config().levels;
  std::vector<double> pmfs(static_cast<size_t>(eval.num_sites()) * L);
  for (int64_t s = 0; s < eval.num_sites(); ++s) {
    eval.NextPmf(std::span<double>(pmfs).subspan(s * L, L));
    eval.Commit(symbols.symbols[s]);
  }
  return pmfs;
}

double RateEstimate(std::span<const double> pmfs, int levels,
                    std::span<const int32_t> symbols, std::span<const double> weights) {
  Check(pmfs.size() == symbols.size() * static_cast<size_t>(levels), ErrorKind::kShape,
        "rate_estimate: pmfs and symbols misaligned");
  Check(weights.empty() || weights.size() == symbols.size(), ErrorKind::kShape,
        "rate_estimate: weights misaligned");
  double bits = 0.0;
  for (size_t i = 0; i < symbols.size(); ++i) {
    const int32_t s = symbols[i];
    Check(s >= 0 && s < levels, ErrorKind::kShape, "rate_estimate: symbol out of range");
    const double p = pmfs[i * levels + s];
    Check(p > 0.0, ErrorKind::kNumerical, "rate_estimate: zero probability");
    const double w = weights.empty() ? 1.0 : weights[i];
    if (w != 0.0) bits += w * -std::log2(p);
  }
  return bits;
}

template <typename T>
CausalityReport CausalityAudit(const ContextModel<T>& model, int trials, Rng& rng,
                               int64_t depth, int64_t height, int64_t width) {
  const ContextModelConfig& cfg = model.config();
  const int L = cfg.levels;
  const int K = cfg.cond_channels;
  const int64_t sites = depth * height * width;
  std::vector<T> centers(L);
  for (int j = 0; j < L; ++j) centers[j] = static_cast<T>(-1.0 + 2.0 * j / (L - 1));

  auto batch_pmfs = [&](const QuantizedLatent& q, const std::vector<T>& cond) {
    NoGradGuard ng;
    std::vector<T> v(sites);
    for (int64_t s = 0; s < sites; ++s) v[s] = centers[q.symbols[s]];
    Tensor<T> values({1, 1, depth, height, width}, std::move(v));
    Tensor<T> c;
    if (K > 0) c = Tensor<T>({1, K, depth, height, width}, cond);
    Tensor<T> p = model.Pmfs(values, c);
    std::vector<T> out(p.values().begin(), p.values().end());
    return out;  // L x sites
  };

  CausalityReport report;
  for (int t = 0; t < trials; ++t) {
    QuantizedLatent q;
    q.shape = {depth, height, width};
    q.symbols.resize(sites);
    for (int32_t& s : q.symbols) s = static_cast<int32_t>(rng.Below(L));
    std::vector<T> cond(static_cast<size_t>(K) * sites);
    for (T& c : cond) c = static_cast<T>(rng.Uniform(-1.0, 1.0));

    const int64_t p = static_cast<int64_t>(rng.Below(sites));
    QuantizedLatent moved = q;
    moved.symbols[p] = (q.symbols[p] + 1 + static_cast<int32_t>(rng.Below(L - 1))) % L;

    const std::vector<double> a = PredictPmfs<T>(model, q, cond, centers);
    const std::vector<double> b = PredictPmfs<T>(model, moved, cond, centers);
    const std::vector<T> ta = batch_pmfs(q, cond);
    const std::vector<T> tb = batch_pmfs(moved, cond);
    bool bad = false;
    std::string where;
    for (int64_t s = 0; s <= p && !bad; ++s) {
      for (int j = 0; j < L; ++j) {
        if (std::memcmp(&a[s * L + j], &b[s * L + j], sizeof(double)) != 0) {
          bad = true;
          where = "site kernel";
        } else if (std::memcmp(&ta[j * sites + s], &tb[j * sites + s], sizeof(T)) != 0) {
          bad = true;
          where = "batched path";
        }
        if (bad) {
          where += ": perturbing site " + std::to_string(p) + " moved the pmf at site " +
                   std::to_string(s);
          break;
        }
      }
    }
    ++report.trials;
    if (bad) {
      ++report.violations;
      if (report.first_violation.empty()) report.first_violation = where;
    }
  }
  return report;
}

#define HSC_INSTANTIATE_CONTEXT(T)                                                \
  template class ContextModel<T>;                                                 \
  template class SiteEvaluator<T>;                                                \
  template std::vector<double> PredictPmfs<T>(const ContextModel<T>&,             \
                                              const QuantizedLatent&,             \
                                              std::span<const T>,                 \
                                              std::span<const T>);                \
  template CausalityReport CausalityAudit<T>(const ContextModel<T>&, int, Rng&,   \
                                             int64_t, int64_t, int64_t);

HSC_INSTANTIATE_CONTEXT(float)
HSC_INSTANTIATE_CONTEXT(double)

}  // namespace hsc
