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

// A small KE classifier over linearized hypothesis graphs.
//
// Each KE pools the embeddings of its span tokens with a softmax attention
// against one shared vector w_alpha, looks up the region feature of the tag
// closest (cosine) to its most attended token (that tag's embedding plus
// fixed scene noise), and feeds
// [pooled, region] through a tanh perceptron to three logits. The sample
// logits come from a second perceptron on the mean pooled vector.
// Gradients are written out by hand; the token and tag selections are
// treated as constants.

#ifndef FGVE_TOYMODEL_H_
#define FGVE_TOYMODEL_H_

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "fgve/config.h"
#include "fgve/eval.h"
#include "fgve/ke.h"
#include "fgve/loss.h"
#include "fgve/world.h"

namespace fgve::toy {

class EmptySpan : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class DivergenceDetected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelParams {
  std::vector<std::string> vocab;
  Eigen::MatrixXd E;        // vocab x d
  Eigen::VectorXd w_alpha;  // d
  Eigen::MatrixXd W1;       // h x 2d
  Eigen::VectorXd b1;
  Eigen::MatrixXd W2;       // 3 x h
  Eigen::VectorXd b2;
  Eigen::MatrixXd C1;       // h x d
  Eigen::VectorXd c1;
  Eigen::MatrixXd C2;       // 3 x h
  Eigen::VectorXd c2;

  int d() const { return int(E.cols()); }
  int h() const { return int(W1.rows()); }
  // -1 when absent.
  int TokenId(const std::string& token) const;

  // Same shapes, all zero.
  ModelParams ZerosLike() const;
  Eigen::Index Size() const;
  // Parameter order: E, w_alpha, W1, b1, W2, b2, C1, c1, C2, c2.
  Eigen::VectorXd Flatten() const;
  void Assign(const Eigen::VectorXd& flat);
  // this += scale * other
  void AddScaled(const ModelParams& other, double scale);
  bool AllFinite() const;
};

// Token vocabulary: world concepts, roles and z0..z<max_children>.
// Concept rows of E start at their semantic embedding, w_alpha at the
// salience axis. Other token rows start small, the first head layers and
// their biases draw from N(0, init_scale^2) and the output layers start at
// zero.
ModelParams InitParams(const World& world, const TrainConfig& cfg);

// One sample laid out for the model.
struct PreparedSample {
  std::string sample_id;
  std::string amr;
  SampleLabel label = Label::kEnt;
  std::vector<std::vector<int>> span_tokens;  // per KE, vocab ids in token order
  std::vector<int> tag_tokens;                // vocab id per scene tag
  Eigen::MatrixXd region_noise;               // tags x d
  std::vector<ke::KePair> pairs;
  loss::ActiveMask active;
  std::vector<KeLabel> gold;                  // may be empty
  std::vector<bool> is_node;
};

// Truncated KEs are masked out of the KE and structural losses for neu and
// con samples only; an ent label constrains every KE regardless.
PreparedSample Prepare(const World& world, const ModelParams& params, const SyntheticSample& s,
                       int max_len);

struct KeEmbedding {
  Eigen::VectorXd attention;  // over span positions, sums to 1
  Eigen::VectorXd pooled;     // d
  Eigen::VectorXd region;     // d, zero when there are no tags
  int salient = -1;           // span position
  int tag = -1;               // tag index, -1 without tags
  Eigen::VectorXd features() const;
};

// Throws EmptySpan. region_noise has one row per tag.
KeEmbedding EmbedKe(const ModelParams& params, const std::vector<int>& span,
                    const std::vector<int>& tag_tokens, const Eigen::MatrixXd& region_noise);

struct ForwardResult {
  std::vector<KeEmbedding> kes;
  std::vector<Eigen::VectorXd> ke_hidden;
  loss::LogitsMatrix<double> ke_logits;
  Eigen::VectorXd mean_pooled;
  Eigen::VectorXd cls_hidden;
  loss::Logits<double> cls_logits;

  std::vector<Label> Predicted() const;  // argmax, ties to the lower class
  // Salient positions then tag indices, for finite-difference checks.
  std::vector<int> Selections() const;
};

ForwardResult Forward(const ModelParams& params, const PreparedSample& s);

// Accumulates parameter gradients for upstream logit gradients.
void Backward(const ModelParams& params, const PreparedSample& s, const ForwardResult& f,
              const loss::LogitsMatrix<double>& d_ke, const loss::Logits<double>& d_cls,
              ModelParams* grads);

// Loss terms for one forward pass; y_hat is the current argmax.
loss::SampleTerms<double> Terms(const PreparedSample& s, const ForwardResult& f);

struct EpochRecord {
  int epoch = 0;
  double total = 0;
  loss::Breakdown<double> breakdown;  // means over minibatches
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Plain minibatch SGD on the weighted total loss; throws
// DivergenceDetected on a non-finite loss. Only sample labels are read.
TrainResult Train(const Dataset& ds, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

// Predicted labels (argmax) for each sample in annotation form.
std::vector<eval::AnnotatedSample> PredictKes(const ModelParams& params, const World& world,
                                              const std::vector<SyntheticSample>& samples,
                                              int max_len);
// Gold annotations of the eval split.
std::vector<eval::AnnotatedSample> GoldAnnotations(const std::vector<SyntheticSample>& samples);

struct ToyReport {
  eval::MetricsReport metrics;
  eval::DistributionReport predicted;
  eval::DistributionReport gold;
  double sample_accuracy_derived = 0;  // KE -> sample label
  double sample_accuracy_cls = 0;      // CLS head
  // Copy baselines: every KE takes the gold, or the CLS-predicted, sample label.
  eval::MetricsReport copy_gold;
  eval::MetricsReport copy_cls;
  double best_copy_overall() const;
};

ToyReport EvaluateToy(const ModelParams& params, const World& world,
                      const std::vector<SyntheticSample>& eval_split, int max_len);

// Named-tensor text checkpoint: a vocab block, then for each tensor
// "tensor <name> <rows> <cols>" followed by rows of %.17g values.
void SaveCheckpoint(const std::string& path, const ModelParams& params);
ModelParams LoadCheckpoint(const std::string& path);

}  // namespace fgve::toy

#endif  // FGVE_TOYMODEL_H_
