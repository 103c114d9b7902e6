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

#ifndef HSC_OPTIM_H_
#define HSC_OPTIM_H_

#include <span>

#include "hsc/nn.h"

namespace hsc {

struct AdamOptions {
  double lr = 4e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update over every parameter, then zeroes the
// gradients. Parameters that received no gradient are treated as having a
// zero gradient. Throws kNumerical on a non-finite gradient before touching
// any parameter.
template <typename T>
void AdamStep(std::span<Parameter<T>* const> params, const AdamOptions& opts);

template <typename T>
void ZeroGrads(std::span<Parameter<T>* const> params);

}  // namespace hsc

#endif  // HSC_OPTIM_H_
