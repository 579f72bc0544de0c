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

// Randomised finite-difference suites for the losses and the toy model.

#ifndef FGVE_GRADCHECK_H_
#define FGVE_GRADCHECK_H_

#include <cstdint>
#include <string>
#include <vector>

#include "fgve/loss.h"

namespace fgve::gradcheck {

struct SuiteResult {
  std::string name;
  int configs = 0;
  double max_rel_error = 0;
  double threshold = 0;

  bool passed() const { return configs > 0 && max_rel_error <= threshold; }
};

inline constexpr double kLossThreshold = 1e-6;
inline constexpr double kModelThreshold = 1e-5;
inline constexpr double kEps = 1e-5;

// One suite per loss: ke_entailed, ke_neutral, ke_contradiction,
// structural, cls, total. Configurations whose argmax selections sit
// within a small margin of a tie are redrawn.
std::vector<SuiteResult> RunLossSuites(std::uint64_t seed, int configs = 100,
                                       loss::ConfidenceGradient conf =
                                           loss::ConfidenceGradient::kStop);

// Full forward pass + total loss with respect to every model parameter.
SuiteResult RunModelSuite(std::uint64_t seed, int configs = 100);

}  // namespace fgve::gradcheck

#endif  // FGVE_GRADCHECK_H_
