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

#include "hsc/optim.h"

#include <cmath>

namespace hsc {

template <typename T>
void AdamStep(std::span<Parameter<T>* const> params, const AdamOptions& opts) {
  for (const Parameter<T>* p : params) {
    if (p->value.has_grad() && !AllFinite<T>(p->value.grad())) {
      Fail(ErrorKind::kNumerical, "non-finite gradient for " + p->name);
    }
  }
  for (Parameter<T>* p : params) {
    ++p->step_count;
    if (!p->value.has_grad()) continue;
    const double t = static_cast<double>(p->step_count);
    const double c1 = 1.0 - std::pow(opts.beta1, t);
    const double c2 = 1.0 - std::pow(opts.beta2, t);
    auto w = p->value.mutable_values();
    auto g = p->value.grad();
    for (size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i];
      const double m = opts.beta1 * p->adam_m[i] + (1.0 - opts.beta1) * gi;
      const double v = opts.beta2 * p->adam_v[i] + (1.0 - opts.beta2) * gi * gi;
      p->adam_m[i] = static_cast<T>(m);
      p->adam_v[i] = static_cast<T>(v);
      w[i] = static_cast<T>(w[i] - opts.lr * (m / c1) /
                                       (std::sqrt(v / c2) + opts.eps));
    }
  }
  ZeroGrads(params);
}

template <typename T>
void ZeroGrads(std::span<Parameter<T>* const> params) {
  for (Parameter<T>* p : params) p->value.ZeroGrad();
}

template void AdamStep<float>(std::span<Parameter<float>* const>,
                              const AdamOptions&);
template void AdamStep<double>(std::span<Parameter<double>* const>,
                               const AdamOptions&);
template void ZeroGrads<float>(std::span<Parameter<float>* const>);
template void ZeroGrads<double>(std::span<Parameter<double>* const>);

}  // namespace hsc
