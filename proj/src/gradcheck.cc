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

#include "hsc/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hsc {

GradcheckReport Gradcheck(const ScalarFn& fn, const std::vector<TensorD>& inputs,
                          double tolerance, double step) {
  GradcheckReport report;
  std::vector<TensorD> leaves;
  for (const auto& in : inputs) {
    TensorD leaf = in.Detach();
    leaf.set_requires_grad(true);
    leaves.push_back(leaf);
  }
  TensorD out = fn(leaves);
  Check(out.size() == 1, ErrorKind::kShape, "gradcheck: fn must be scalar");
  const double f0 = out.item();
  std::vector<std::vector<double>> analytic(leaves.size());
  if (out.requires_grad()) out.Backward();
  double scale = 0.0;
  for (size_t k = 0; k < leaves.size(); ++k) {
    analytic[k].assign(leaves[k].size(), 0.0);
    if (leaves[k].has_grad()) {
      auto g = leaves[k].grad();
      std::copy(g.begin(), g.end(), analytic[k].begin());
    }
    for (double g : analytic[k]) scale = std::max(scale, std::abs(g));
  }
  const double floor = std::max(1e-10, 1e-3 * scale);

  NoGradGuard no_grad;
  std::vector<TensorD> probe;
  for (const auto& l : leaves) probe.push_back(l.Detach());
  report.max_rel_error.assign(leaves.size(), 0.0);
  for (size_t k = 0; k < probe.size(); ++k) {
    auto v = probe[k].mutable_values();
    for (size_t i = 0; i < v.size(); ++i) {
      const double orig = v[i];
      // When the one-sided slopes disagree the probe straddles a kink (a
      // relu or clamp boundary) and the central difference measures no
      // derivative; shrink the step until they agree.
      double numeric = 0.0;
      bool smooth = false;
      for (double h = step; h >= step * 1e-2 && !smooth; h *= 0.1) {
        v[i] = orig + h;
        const double up = fn(probe).item();
        v[i] = orig - h;
        const double down = fn(probe).item();
        v[i] = orig;
        const double fwd = (up - f0) / h, bwd = (f0 - down) / h;
        numeric = (up - down) / (2.0 * h);
        const double noise = 64 * std::numeric_limits<double>::epsilon() *
                             std::max(std::abs(f0), 1.0) / h;
        smooth = std::abs(fwd - bwd) <=
                 tolerance * std::max({std::abs(fwd), std::abs(bwd), floor}) + noise;
        if (!smooth) ++report.refined;
      }
      const double a = analytic[k][i];
      const double err = std::abs(a - numeric) /
                         std::max({std::abs(a), std::abs(numeric), floor});
      if (err > report.max_rel_error[k]) report.max_rel_error[k] = err;
      if (err > tolerance && report.detail.empty()) {
        std::ostringstream os;
        os << "input " << k << " index " << i << ": analytic " << a
           << " numeric " << numeric;
        report.detail = os.str();
      }
    }
    report.worst = std::max(report.worst, report.max_rel_error[k]);
  }
  report.passed = report.worst < tolerance;
  return report;
}

}  // namespace hsc
