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

// Randomized finite-difference sweep over every differentiable primitive.
// Shared by the unit tests and the acceptance runner.

#ifndef HSC_TESTS_GRADIENT_SUITE_H_
#define HSC_TESTS_GRADIENT_SUITE_H_

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "hsc/gradcheck.h"
#include "hsc/ops.h"
#include "hsc/rng.h"

namespace hsc::testing {

struct OpSweepResult {
  std::string op;
  int cases = 0;
  int failures = 0;
  double worst = 0.0;
  std::string first_failure;
};

inline TensorD RandomTensor(Shape shape, Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::vector<double> v(NumElements(shape));
  for (double& x : v) x = rng.Uniform(lo, hi);
  return TensorD(std::move(shape), std::move(v));
}

// Values bounded away from zero so kinks are not straddled by the probe.
inline TensorD AwayFromZero(Shape shape, Rng& rng) {
  std::vector<double> v(NumElements(shape));
  for (double& x : v) {
    x = rng.Uniform(0.05, 1.0) * (rng.Uniform() < 0.5 ? -1.0 : 1.0);
  }
  return TensorD(std::move(shape), std::move(v));
}

// One randomized case: inputs, attrs, and a fixed projection so the scalar
// objective weights every output element differently.
struct OpCase {
  std::vector<TensorD> inputs;
  OpAttrs attrs;
};

inline OpCase MakeOpCase(std::string_view op, Rng& rng) {
  OpCase c;
  auto dim = [&](int lo, int hi) { return static_cast<int64_t>(rng.IntIn(lo, hi)); };
  if (op == "conv2d") {
    const int64_t n = dim(1, 2), ci = dim(1, 3), co = dim(1, 3), k = 2 * dim(0, 1) + 1;
    c.attrs.stride = rng.IntIn(1, 2);
    c.attrs.padding = rng.IntIn(0, static_cast<int>(k / 2));
    const int64_t h = dim(k, k + 3), w = dim(k, k + 3);
    c.inputs = {RandomTensor({n, ci, h, w}, rng), RandomTensor({co, ci, k, k}, rng),
                RandomTensor({co}, rng)};
  } else if (op == "transposed_conv2d") {
    const int64_t n = dim(1, 2), ci = dim(1, 3), co = dim(1, 3), k = dim(2, 4);
    c.attrs.stride = rng.IntIn(1, 2);
    c.attrs.padding = rng.IntIn(0, static_cast<int>((k - 1) / 2));
    c.attrs.output_padding = rng.IntIn(0, c.attrs.stride - 1);
    c.inputs = {RandomTensor({n, ci, dim(1, 4), dim(1, 4)}, rng),
                RandomTensor({ci, co, k, k}, rng), RandomTensor({co}, rng)};
  } else if (op == "masked_conv3d") {
    const int64_t causal = dim(1, 2), free = dim(0, 1), co = dim(1, 3);
    c.attrs.mask = CausalTapMask(static_cast<int>(causal), static_cast<int>(free),
                                 3, rng.Uniform() < 0.5);
    c.inputs = {RandomTensor({1, causal + free, dim(1, 3), dim(1, 3), dim(1, 3)}, rng),
                RandomTensor({co, causal + free, 3, 3, 3}, rng),
                RandomTensor({co}, rng)};
  } else if (op == "relu" || op == "leaky_relu") {
    c.inputs = {AwayFromZero({dim(1, 3), dim(1, 5)}, rng)};
    c.attrs.slope = rng.Uniform(0.01, 0.3);
  } else if (op == "channel_norm") {
    c.inputs = {RandomTensor({dim(1, 2), dim(2, 4), dim(1, 3), dim(1, 3)}, rng)};
    c.attrs.eps = 1e-10;
  } else if (op == "add" || op == "sub" || op == "mul") {
    Shape a = {dim(1, 3), dim(1, 4)};
    Shape b = a;
    const int mode = rng.IntIn(0, 2);
    if (mode == 1) b = {1, a[1]};
    if (mode == 2) b = {a[0], 1};
    if (rng.Uniform() < 0.5) std::swap(a, b);
    c.inputs = {RandomTensor(a, rng), RandomTensor(b, rng)};
  } else if (op == "scale") {
    c.inputs = {RandomTensor({dim(1, 4), dim(1, 4)}, rng)};
    c.attrs.scalar = rng.Uniform(-2.0, 2.0);
  } else if (op == "matmul") {
    const int64_t m = dim(1, 4), k = dim(1, 4), n = dim(1, 4);
    c.inputs = {RandomTensor({m, k}, rng), RandomTensor({k, n}, rng)};
  } else if (op == "transpose") {
    c.inputs = {RandomTensor({dim(1, 4), dim(1, 4)}, rng)};
  } else if (op == "softmax" || op == "log_softmax") {
    c.inputs = {RandomTensor({dim(1, 3), dim(2, 5), dim(1, 3)}, rng, -2, 2)};
    c.attrs.axis = rng.IntIn(0, 2);
  } else if (op == "cross_entropy") {
    Shape s = {dim(1, 3), dim(2, 5)};
    c.inputs = {RandomTensor(s, rng, 0.1, 1.0), RandomTensor(s, rng, 0.0, 1.0)};
    c.attrs.axis = 1;
  } else if (op == "neg_log2_gather") {
    const int64_t rows = dim(1, 4), L = dim(2, 6);
    c.inputs = {RandomTensor({rows, L}, rng, 0.1, 1.0)};
    c.attrs.axis = 1;
    for (int64_t r = 0; r < rows; ++r) {
      c.attrs.symbols.push_back(static_cast<int32_t>(rng.Below(L)));
    }
  } else if (op == "mse") {
    Shape s = {dim(1, 3), dim(1, 4)};
    c.inputs = {RandomTensor(s, rng), RandomTensor(s, rng)};
  } else if (op == "mean" || op == "sum" || op == "sigmoid" || op == "exp" ||
             op == "square") {
    c.inputs = {RandomTensor({dim(1, 3), dim(1, 4)}, rng)};
  } else if (op == "log") {
    c.inputs = {RandomTensor({dim(1, 3), dim(1, 4)}, rng, 0.5, 2.0)};
  } else if (op == "concat") {
    const int axis = rng.IntIn(0, 1);
    const int parts = rng.IntIn(2, 3);
    Shape base = {dim(1, 3), dim(1, 3)};
    for (int p = 0; p < parts; ++p) {
      Shape s = base;
      s[axis] = dim(1, 3);
      c.inputs.push_back(RandomTensor(s, rng));
    }
    c.attrs.axis = axis;
  } else if (op == "slice") {
    Shape s = {dim(1, 3), dim(2, 5)};
    c.inputs = {RandomTensor(s, rng)};
    c.attrs.axis = 1;
    c.attrs.begin = rng.IntIn(0, static_cast<int>(s[1]) - 1);
    c.attrs.end = rng.IntIn(static_cast<int>(c.attrs.begin) + 1, static_cast<int>(s[1]));
  } else if (op == "upsample_nearest") {
    c.inputs = {RandomTensor({dim(1, 2), dim(1, 2), dim(1, 3), dim(1, 3)}, rng)};
    c.attrs.factor = rng.IntIn(1, 3);
  } else if (op == "reshape") {
    const int64_t a = dim(1, 3), b = dim(1, 4);
    c.inputs = {RandomTensor({a, b}, rng)};
    c.attrs.shape = {b, a};
  } else if (op == "clamp") {
    c.attrs.lo = -0.5;
    c.attrs.hi = 0.5;
    std::vector<double> v(NumElements({dim(1, 3), dim(1, 4)}));
    for (double& x : v) {
      do {
        x = rng.Uniform(-1.0, 1.0);
      } while (std::abs(std::abs(x) - 0.5) < 0.05);
    }
    const int64_t n = static_cast<int64_t>(v.size());
    c.inputs = {TensorD({n}, std::move(v))};
  }
  return c;
}

inline OpSweepResult SweepOp(std::string_view op, int seeds, double tolerance) {
  OpSweepResult result;
  result.op = std::string(op);
  for (int s = 0; s < seeds; ++s) {
    Rng rng(0xC0FFEEull * 131 + static_cast<uint64_t>(s) * 7919 + op.size());
    OpCase c = MakeOpCase(op, rng);
    Rng proj_rng = rng.Fork(17);
    const OpAttrs attrs = c.attrs;
    const std::string kind(op);
    // Fixed random projection of the output to a scalar.
    TensorD probe_out;
    {
      NoGradGuard ng;
      probe_out = ApplyOp<double>(kind, c.inputs, attrs);
    }
    TensorD projection = RandomTensor(probe_out.shape(), proj_rng);
    ScalarFn fn = [&](std::span<const TensorD> in) {
      TensorD y = ApplyOp<double>(kind, in, attrs);
      return Sum(Mul(y, projection));
    };
    GradcheckReport rep = Gradcheck(fn, c.inputs, tolerance);
    ++result.cases;
    result.worst = std::max(result.worst, rep.worst);
    if (!rep.passed) {
      ++result.failures;
      if (result.first_failure.empty()) {
        result.first_failure = "seed " + std::to_string(s) + ": " + rep.detail;
      }
    }
  }
  return result;
}

}  // namespace hsc::testing

#endif  // HSC_TESTS_GRADIENT_SUITE_H_
