// Copyright 2026 The fgve Authors.
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

#include "fgve/loss.h"

namespace fgve::loss {

double GradCheck(const ProbeFn& f, const Eigen::VectorXd& x, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-4)) {
    throw std::invalid_argument("finite-difference step must lie in [1e-7, 1e-4]");
  }
  const Probe base = f(x);
  if (base.grad.size() != x.size()) {
    throw std::invalid_argument("gradient size does not match the parameter vector");
  }
  double worst = 0;
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + eps;
    const Probe up = f(xp);
    xp(i) = x(i) - eps;
    const Probe down = f(xp);
    xp(i) = x(i);
    if (up.selection != base.selection || down.selection != base.selection) {
      throw BoundaryInstability("perturbing coordinate " + std::to_string(i) +
                                " changes a discrete selection");
    }
    const double numeric = (up.value - down.value) / (2 * eps);
    const double analytic = base.grad(i);
    const double scale = std::max({1.0, std::abs(analytic), std::abs(numeric)});
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
  }
  return worst;
}

}  // namespace fgve::loss
