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


#ifndef HSC_TWOAFC_H_
#define HSC_TWOAFC_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hsc/image.h"
#include "hsc/perceptual.h"
#include "hsc/rng.h"

namespace hsc {

// One two-alternative forced choice judgement.
struct TwoAfcRecord {
  std::string id;
  Image reference, a, b;
  double fraction_a = 0.5;  // share of raters who found A closer
  std::string method_a, method_b;
  double bpp = 0.0;
};

// Directory layout: <id>.json sidecars
//   {"ref": "<id>_ref.ppm", "a": ..., "b": ..., "fraction_a": 0.8,
//    "method_a": "...", "method_b": "...", "bpp": 0.4}
// next to the three PPM files. Records load in sidecar-name order.
std::vector<TwoAfcRecord> LoadTwoAfcDataset(const std::string& dir);
void SaveTwoAfcDataset(const std::string& dir, const std::vector<TwoAfcRecord>& records);

// Soft agreement: per record the metric picks the alternative with the
// smaller distance and earns the human share of that pick (0.5 on a tie).
double TwoAfcScore(std::span<const double> dist_a, std::span<const double> dist_b,
                   std::span<const double> fraction_a);

// Per-record channel distances (see ChannelDistances) for both alternatives.
struct ChannelEvidence {
  std::vector<std::vector<double>> a, b;  // record x channel
  std::vector<double> fraction_a;
  std::vector<int> tap_channels;
};

ChannelEvidence GatherEvidence(const FeatureExtractor<float>& extractor,
                               const std::vector<TwoAfcRecord>& records);

struct FitOptions {
  int iterations = 400;
  double lr = 0.05;
  int select_every = 10;
};

struct FitReport {
  double initial_score = 0.0;  // 2AFC on the fitting set with all-ones weights
  double final_score = 0.0;
  double final_loss = 0.0;
};

// Learns non-negative channel weights. A two-distance predictor
// sigmoid(s * (dpl_B - dpl_A)) is fitted to the human shares by
// cross-entropy; weights are clamped at zero after every step, and the
// iterate with the best fitting-set 2AFC score (initialisation included)
// is returned. Throws kDegenerate when every share is 0.5.
ChannelWeights<float> FitChannelWeights(const ChannelEvidence& evidence,
                                        const FitOptions& options = {},
                                        FitReport* report = nullptr);

// dpl per record from channel evidence: sum_c w_c^2 e_c.
std::vector<double> EvidenceDistances(const std::vector<std::vector<double>>& e,
                                      const ChannelWeights<float>& weights);

struct LinearCombo {
  std::vector<double> weights;  // one per metric
  double score = 0.0;           // 2AFC on the fitting records
  int inliers = 0;
};

// RANSAC over record subsets: each draw least-squares fits the weights to
// the signed human margin 2 f - 1 from the per-metric distance margins
// d_B - d_A, refits on the records whose sign it gets right, and is scored
// by the combined metric's 2AFC on all records. Every single metric is also
// a candidate. dist_a/dist_b are metric x record.
LinearCombo FitLinearCombo(const std::vector<std::vector<double>>& dist_a,
                           const std::vector<std::vector<double>>& dist_b,
                           std::span<const double> fraction_a, int iterations,
                           uint64_t seed);

std::vector<double> CombineDistances(const LinearCombo& combo,
                                     const std::vector<std::vector<double>>& dist);

// Synthetic judgements whose raters look only at one feature channel:
// reference textures, two randomly distorted alternatives, and
// fraction_a = sigmoid(gain * (e_B[c] - e_A[c]) / spread) for the known
// flat channel index c.
std::vector<TwoAfcRecord> SyntheticTwoAfc(const FeatureExtractor<float>& extractor,
                                          int count, int known_channel, int size,
                                          Rng& rng);

}  // namespace hsc

#endif  // HSC_TWOAFC_H_
