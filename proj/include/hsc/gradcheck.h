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

#ifndef HSC_GRADCHECK_H_
#define HSC_GRADCHECK_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hsc/tensor.h"

namespace hsc {

struct GradcheckReport {
  std::vector<double> max_rel_error;  // one entry per input
  double worst = 0.0;
  bool passed = false;
  std::string detail;  // first failing coordinate, if any
  int refined = 0;     // probes repeated at a smaller step (kink straddled)
};

using ScalarFn = std::function<TensorD(std::span<const TensorD>)>;

// Compares reverse-mode gradients of a scalar fn against central finite
// differences. The relative error of each coordinate is
//   |analytic - numeric| / max(|analytic|, |numeric|, floor)
// where floor is 1e-3 of the largest analytic magnitude over all inputs (and
// at least 1e-10), so coordinates with vanishing gradients are judged on
// the scale of the whole gradient rather than on round-off.
// A coordinate whose one-sided differences disagree (the probe crosses a
// point of non-differentiability) is re-probed with the step shrunk by 10,
// up to 100x; the last central difference is what gets compared.
GradcheckReport Gradcheck(const ScalarFn& fn, const std::vector<TensorD>& inputs,
                          double tolerance, double step = 1e-5);

}  // namespace hsc

#endif  // HSC_GRADCHECK_H_
