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

// Flat key=value configuration for the synthetic world and the toy model.

#ifndef FGVE_CONFIG_H_
#define FGVE_CONFIG_H_

#include <cstdint>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fgve/loss.h"

namespace fgve {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TrainConfig {
  std::uint64_t seed = 1;

  // World generation.
  int n_samples = 3000;
  double balance_ent = 1.0 / 3;
  double balance_neu = 1.0 / 3;
  double balance_con = 1.0 / 3;
  double eval_fraction = 0.2;
  int n_object_pairs = 8;
  int n_predicate_pairs = 3;
  int max_children = 4;
  int n_distractors = 2;
  double noise_sigma = 0.1;
  double salience = 1.0;

  // Model and optimisation.
  int d = 16;
  int h = 64;
  double init_scale = 1.0;
  double lr = 0.2;
  int epochs = 20;
  int batch_size = 16;
  int max_len = 64;
  double beta_cls = 0.5;
  double beta_ke = 1.0;
  double beta_struc = 1.0;
  bool stop_gradient = true;

  loss::LossWeights weights() const { return {beta_cls, beta_ke, beta_struc}; }
  loss::ConfidenceGradient confidence() const {
    return stop_gradient ? loss::ConfidenceGradient::kStop : loss::ConfidenceGradient::kFlow;
  }

  // Sets one field from its textual value; throws ConfigError for an
  // unknown key or malformed value.
  void Set(const std::string& key, const std::string& value);
  // Throws ConfigError when a field is out of range.
  void Validate() const;
  // Every key, in declaration order.
  static const std::vector<std::string>& Keys();
  std::string Get(const std::string& key) const;
  // key=value lines for every field.
  std::string ToText() const;
};

// Reads "key = value" lines; blank lines and '#' comments are ignored.
// Fields not mentioned keep their current value.
void ReadConfig(std::istream& in, TrainConfig* cfg);
void LoadConfig(const std::string& path, TrainConfig* cfg);

}  // namespace fgve

#endif  // FGVE_CONFIG_H_
