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

// A synthetic scene/hypothesis world. Concepts come in conflicting pairs;
// a scene is a set of present concepts, and a hypothesis is a star-shaped
// AMR whose root predicate is present and whose children are present
// (entailed), conflict with a present concept (contradicted) or neither
// (neutral).
//
// Semantic embedding layout (d >= 2 + object pairs + predicate pairs):
//   [0]        salience (predicates full, objects half)
//   [1]        side within the conflict pair, +1 or -1
//   [2 + p]    pair identity
// plus a small seeded jitter on every coordinate.

#ifndef FGVE_WORLD_H_
#define FGVE_WORLD_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fgve/config.h"
#include "fgve/logic.h"
#include "fgve/penman.h"

namespace fgve::toy {

class InsufficientVocabulary : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct World {
  // Simplified concept names ("dog", "sleep"); objects first.
  std::vector<std::string> concepts;
  std::vector<std::string> written;  // as it appears in PENMAN ("sleep-01")
  std::vector<bool> is_object;
  std::vector<int> conflict;  // involution without fixed points
  std::vector<std::string> roles;
  Eigen::MatrixXd semantic;  // concepts x d
  double noise_sigma = 0;

  int num_concepts() const { return int(concepts.size()); }
  int d() const { return int(semantic.cols()); }
  // -1 when unknown.
  int ConceptId(const std::string& name) const;
};

struct Relation {
  int head = 0;
  std::string role;
  int tail = 0;
  bool operator==(const Relation&) const = default;
};

struct Scene {
  std::vector<int> present;  // sorted concept ids
  std::vector<Relation> relations;
  std::vector<int> tags;     // present concepts, sorted
  std::uint64_t noise_seed = 0;

  bool Has(int cid) const;
};

struct SyntheticSample {
  std::string sample_id;
  std::string hypothesis;
  std::string amr;            // PENMAN as written, with sense suffixes
  SampleLabel sample_label = Label::kEnt;
  Scene scene;
  // By KE index of the simplified graph; empty for the train split.
  std::vector<KeLabel> gold;
};

struct Dataset {
  World world;
  std::vector<SyntheticSample> train;
  std::vector<SyntheticSample> eval;
  std::string config_text;  // TrainConfig::ToText() of the generating config
};

World BuildWorld(const TrainConfig& cfg);

// Scene-derived gold labels for every KE of `graph` (simplified). Nodes:
// present -> ent, conflicting with a present concept -> con, else neu.
// Tuples: the more severe endpoint label when above ent, otherwise ent if
// the relation holds in the scene and neu if it is unverifiable.
std::vector<KeLabel> GoldLabels(const World& world, const Scene& scene,
                                const penman::AmrGraph& graph);

// N(0, noise_sigma^2) per tag and dimension, drawn from the scene's noise
// seed. A region feature is the tag's embedding plus its noise row.
Eigen::MatrixXd RegionNoise(const World& world, const Scene& scene);

// Deterministic under cfg.seed. Class counts are within one sample of
// n_samples * balance; the last eval_fraction of the shuffled samples form
// the eval split, which alone keeps its gold KE labels.
Dataset GenerateDataset(const TrainConfig& cfg);

// world.json, train.jsonl and eval.jsonl under `dir`.
void WriteDataset(const std::string& dir, const Dataset& ds);
Dataset ReadDataset(const std::string& dir);

}  // namespace fgve::toy

#endif  // FGVE_WORLD_H_
