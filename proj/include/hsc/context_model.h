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


#ifndef HSC_CONTEXT_MODEL_H_
#define HSC_CONTEXT_MODEL_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hsc/nn.h"
#include "hsc/ops.h"
#include "hsc/quantizer.h"
#include "hsc/rng.h"

namespace hsc {

// Probability floor applied to every PMF entry: p' = (1 - L * eps) p + eps.
inline constexpr double kPmfFloor = 1.0 / 65536.0;

struct ContextModelConfig {
  int levels = 6;
  int cond_channels = 0;  // conditioning maps over the symbol volume
  int hidden = 24;
  int layers = 4;
  bool zero_head = true;  // zero output layer, so an untrained model is uniform
  // Lets the first layer see the site it predicts. Only useful as a negative
  // control for the causality audit.
  bool leak_center = false;
};

// Auto-regressive PMF model over a D x H x W symbol volume in raster order
// (D slowest). Masked 3x3x3 convolutions; every layer also reads the
// conditioning maps over the full window.
template <typename T>
class ContextModel {
 public:
  ContextModel() = default;
  ContextModel(const std::string& name, const ContextModelConfig& config, Rng& rng);

  // values: N x 1 x D x H x W dequantized symbols.
  // cond:   N x K x D x H x W, or undefined when cond_channels == 0.
  // Returns N x L x D x H x W logits.
  Tensor<T> Logits(const Tensor<T>& values, const Tensor<T>& cond) const;
  // Floored softmax over axis 1.
  Tensor<T> Pmfs(const Tensor<T>& values, const Tensor<T>& cond) const;
  // -log2 P[symbol] per site, N x D x H x W.
  Tensor<T> CodeLengths(const Tensor<T>& values, const Tensor<T>& cond,
                        std::span<const int32_t> symbols) const;

  void Collect(ParamList<T>& out);
  const ContextModelConfig& config() const { return config_; }
  const std::vector<TapMask>& masks() const { return masks_; }
  const Parameter<T>& weight(int layer) const { return weights_[layer]; }
  const Parameter<T>& bias(int layer) const { return biases_[layer]; }
  int num_layers() const { return static_cast<int>(weights_.size()); }

 private:
  ContextModelConfig config_;
  std::vector<TapMask> masks_;
  std::vector<Parameter<T>> weights_;  // O x C x 3 x 3 x 3
  std::vector<Parameter<T>> biases_;
};

// Floored softmax of one logit vector, computed in double.
void FlooredSoftmax(std::span<const double> logits, std::span<double> pmf);

// Site-at-a-time evaluation of a context model for one symbol volume. Each
// layer's activation at a site is computed once, when the cursor reaches
// it; the encoder and the decoder both drive this class, so they see
// bit-identical PMFs.
template <typename T>
class SiteEvaluator {
 public:
  // cond: K x D x H x W (may be empty when K == 0). centers: the codebook
  // values used to dequantize committed symbols.
  SiteEvaluator(const ContextModel<T>& model, int64_t depth, int64_t height,
                int64_t width, std::span<const T> cond, std::span<const T> centers);

  int64_t num_sites() const { return sites_; }
  int64_t cursor() const { return cursor_; }
  // PMF at the cursor, given the symbols committed so far.
  void NextPmf(std::span<double> pmf);
  // Records the symbol at the cursor and advances.
  void Commit(int32_t symbol);

 private:
  struct PackedLayer {
    int in_causal = 0;
    int out = 0;
    std::vector<int> causal_taps;  // tap indices 0..26 in (d, h, w) order
    std::vector<T> causal_w;       // [tap][c][o]
    std::vector<T> cond_w;         // [27][k][o]
    std::vector<T> bias;
  };

  const T* Input(int layer, int64_t site) const;

  const ContextModel<T>* model_ = nullptr;
  int64_t depth_, height_, width_, sites_;
  int cond_channels_;
  std::vector<T> cond_;  // [site][k]
  std::vector<T> centers_;
  std::vector<PackedLayer> layers_;
  std::vector<T> values_;                 // [site], dequantized symbols
  std::vector<std::vector<T>> acts_;      // per hidden layer, [site][c]
  std::vector<T> logits_;
  int64_t cursor_ = 0;
  bool evaluated_ = false;
};

// PMFs for every site of a fully known volume (teacher forcing), through the
// same site kernel the coder uses. Returns sites x L.
template <typename T>
std::vector<double> PredictPmfs(const ContextModel<T>& model,
                                const QuantizedLatent& symbols,
                                std::span<const T> cond, std::span<const T> centers);

// sum_i w_i * -log2 pmf_i[symbol_i]; weights empty means all ones.
double RateEstimate(std::span<const double> pmfs, int levels,
                    std::span<const int32_t> symbols,
                    std::span<const double> weights = {});

struct CausalityReport {
  int trials = 0;
  int violations = 0;
  std::string first_violation;
  bool passed() const { return violations == 0; }
};

// Perturbs one random site per trial and checks that no PMF at or before
// that site moves, on both the site kernel and the batched training path.
template <typename T>
CausalityReport CausalityAudit(const ContextModel<T>& model, int trials, Rng& rng,
                               int64_t depth = 4, int64_t height = 4,
                               int64_t width = 4);

}  // namespace hsc

#endif  // HSC_CONTEXT_MODEL_H_
