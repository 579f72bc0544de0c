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

#include "fgve/gradcheck.h"

#include <algorithm>
#include <random>

#include "fgve/toymodel.h"
#include "fgve/world.h"

namespace fgve::gradcheck {

namespace {

using loss::ActiveMask;
using Mat = loss::LogitsMatrix<double>;
using Vec3 = loss::Logits<double>;

constexpr double kMargin = 1e-3;

struct LossConfig {
  Mat z;
  Vec3 cls;
  ActiveMask active;
  std::vector<Label> y_hat;
  std::vector<ke::KePair> pairs;
  SampleLabel label = Label::kEnt;
  loss::LossWeights weights;
};

LossConfig RandomConfig(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_int_distribution<int> nodes_d(1, 4);
  LossConfig c;
  const int nodes = nodes_d(rng);
  const int tuples = nodes > 1 ? std::uniform_int_distribution<int>(0, 4)(rng) : 0;
  const int n = nodes + tuples;
  for (int t = 0; t < tuples; ++t) {
    const int head = std::uniform_int_distribution<int>(0, nodes - 1)(rng);
    int tail = std::uniform_int_distribution<int>(0, nodes - 2)(rng);
    if (tail >= head) ++tail;
    c.pairs.push_back({nodes + t, head});
    c.pairs.push_back({nodes + t, tail});
  }
  c.z.resize(n, 3);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) c.z(i, k) = u(rng);
  }
  for (int k = 0; k < 3; ++k) c.cls(k) = u(rng);
  c.active.resize(n);
  std::bernoulli_distribution on(0.8);
  for (int i = 0; i < n; ++i) c.active[i] = on(rng);
  c.active[std::uniform_int_distribution<int>(0, n - 1)(rng)] = true;
  for (int i = 0; i < n; ++i) c.y_hat.push_back(static_cast<Label>(rng() % 3));
  c.label = static_cast<Label>(rng() % 3);
  std::uniform_real_distribution<double> w(0.0, 1.5);
  c.weights = {w(rng), w(rng), w(rng)};
  return c;
}

// Gap between the best and second-best active log p_c.
double SelectionGap(const Mat& z, const ActiveMask& active, int c) {
  std::vector<double> lp;
  for (int i = 0; i < z.rows(); ++i) {
    if (active[i]) lp.push_back(loss::LogSoftmax<double>(z.row(i).transpose())(c));
  }
  if (lp.size() < 2) return 1.0;
  std::sort(lp.rbegin(), lp.rend());
  return lp[0] - lp[1];
}

Eigen::VectorXd Flatten(const Mat& z) {
  Eigen::VectorXd x(z.size());
  for (int i = 0; i < z.rows(); ++i) x.segment<3>(3 * i) = z.row(i).transpose();
  return x;
}

Mat Unflatten(const Eigen::VectorXd& x, Eigen::Index offset, Eigen::Index rows) {
  Mat z(rows, 3);
  for (Eigen::Index i = 0; i < rows; ++i) z.row(i) = x.segment<3>(offset + 3 * i).transpose();
  return z;
}

template <typename Fn>
SuiteResult RunKeSuite(const std::string& name, std::uint64_t seed, int configs, int select_class,
                       Fn fn) {
  std::mt19937_64 rng(seed);
  SuiteResult r{name, 0, 0, kLossThreshold};
  while (r.configs < configs) {
    const LossConfig c = RandomConfig(rng);
    if (select_class >= 0 && SelectionGap(c.z, c.active, select_class) < kMargin) continue;
    const auto probe = [&](const Eigen::VectorXd& x) {
      const loss::LossOutput<double> out = fn(Unflatten(x, 0, c.z.rows()), c);
      return loss::Probe{out.value, Flatten(out.grads), {out.selected}};
    };
    r.max_rel_error = std::max(r.max_rel_error, loss::GradCheck(probe, Flatten(c.z), kEps));
    ++r.configs;
  }
  return r;
}

}  // namespace

std::vector<SuiteResult> RunLossSuites(std::uint64_t seed, int configs,
                                       loss::ConfidenceGradient conf) {
  std::vector<SuiteResult> results;
  results.push_back(RunKeSuite("ke_entailed", seed, configs, -1, [](const Mat& z, const auto& c) {
    return loss::KeEntailed(z, c.active);
  }));
  results.push_back(RunKeSuite("ke_neutral", seed + 1, configs, int(Label::kNeu),
                               [](const Mat& z, const auto& c) {
                                 return loss::KeNeutral(z, c.active);
                               }));
  results.push_back(RunKeSuite("ke_contradiction", seed + 2, configs, int(Label::kCon),
                               [](const Mat& z, const auto& c) {
                                 return loss::KeContradiction(z, c.active);
                               }));
  results.push_back(RunKeSuite("structural", seed + 3, configs, -1,
                               [conf](const Mat& z, const auto& c) {
                                 // Stopped weights stay at the base point.
                                 const Mat* pinned =
                                     conf == loss::ConfidenceGradient::kStop ? &c.z : nullptr;
                                 return loss::Structural(z, std::span<const Label>(c.y_hat),
                                                         std::span<const ke::KePair>(c.pairs),
                                                         c.active, conf, pinned);
                               }));

  {
    std::mt19937_64 rng(seed + 4);
    SuiteResult r{"cls", 0, 0, kLossThreshold};
    for (; r.configs < configs; ++r.configs) {
      const LossConfig c = RandomConfig(rng);
      const auto probe = [&](const Eigen::VectorXd& x) {
        const auto out = loss::Cls<double>(x, c.label);
        return loss::Probe{out.value, out.grad, {}};
      };
      r.max_rel_error = std::max(r.max_rel_error, loss::GradCheck(probe, c.cls, kEps));
    }
    results.push_back(r);
  }

  {
    std::mt19937_64 rng(seed + 5);
    SuiteResult r{"total", 0, 0, kLossThreshold};
    while (r.configs < configs) {
      const LossConfig c = RandomConfig(rng);
      if (c.label == Label::kNeu && SelectionGap(c.z, c.active, int(Label::kNeu)) < kMargin) continue;
      if (c.label == Label::kCon && SelectionGap(c.z, c.active, int(Label::kCon)) < kMargin) continue;
      const auto probe = [&](const Eigen::VectorXd& x) {
        loss::SampleTerms<double> s;
        s.cls_logits = x.head<3>();
        s.ke_logits = Unflatten(x, 3, c.z.rows());
        s.label = c.label;
        s.y_hat = c.y_hat;
        s.pairs = c.pairs;
        s.active = c.active;
        if (conf == loss::ConfidenceGradient::kStop) s.confidence_logits = c.z;
        const auto out = loss::Total(s, c.weights, conf);
        Eigen::VectorXd g(x.size());
        g.head<3>() = out.cls_grads[0];
        g.tail(x.size() - 3) = Flatten(out.ke_grads[0]);
        const auto ke = loss::KeBranch(s.ke_logits, s.label, s.active);
        return loss::Probe{out.value, g, {ke.selected}};
      };
      Eigen::VectorXd x(3 + c.z.size());
      x.head<3>() = c.cls;
      x.tail(c.z.size()) = Flatten(c.z);
      r.max_rel_error = std::max(r.max_rel_error, loss::GradCheck(probe, x, kEps));
      ++r.configs;
    }
    results.push_back(r);
  }
  return results;
}

SuiteResult RunModelSuite(std::uint64_t seed, int configs) {
  TrainConfig cfg;
  cfg.seed = seed;
  cfg.n_samples = 40;
  cfg.eval_fraction = 0;
  cfg.h = 6;
  cfg.init_scale = 0.5;
  const toy::Dataset ds = toy::GenerateDataset(cfg);

  std::mt19937_64 rng(seed + 6);
  std::uniform_int_distribution<std::size_t> pick(0, ds.train.size() - 1);
  SuiteResult r{"model", 0, 0, kModelThreshold};
  int attempts = 0;
  while (r.configs < configs) {
    if (++attempts > 20 * configs) break;
    // Random parameters everywhere, including the zero-initialised output layers.
    toy::ModelParams params = toy::InitParams(ds.world, cfg);
    Eigen::VectorXd x = params.Flatten();
    std::normal_distribution<double> n(0.0, 0.5);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += n(rng);
    const toy::PreparedSample s = toy::Prepare(ds.world, params, ds.train[pick(rng)], cfg.max_len);
    const loss::LossWeights w = {0.5, 1.0, 1.0};
    toy::ModelParams base = params;
    base.Assign(x);
    const loss::LogitsMatrix<double> pinned = toy::Forward(base, s).ke_logits;

    const auto probe = [&](const Eigen::VectorXd& theta) {
      toy::ModelParams p = params;
      p.Assign(theta);
      const toy::ForwardResult f = toy::Forward(p, s);
      loss::SampleTerms<double> terms = toy::Terms(s, f);
      terms.confidence_logits = pinned;
      const auto out = loss::Total(terms, w);
      toy::ModelParams g = p.ZerosLike();
      toy::Backward(p, s, f, out.ke_grads[0], out.cls_grads[0], &g);
      std::vector<int> sel = f.Selections();
      for (Label l : terms.y_hat) sel.push_back(int(l));
      sel.push_back(loss::KeBranch(terms.ke_logits, terms.label, terms.active).selected);
      return loss::Probe{out.value, g.Flatten(), sel};
    };
    try {
      r.max_rel_error = std::max(r.max_rel_error, loss::GradCheck(probe, x, kEps));
      ++r.configs;
    } catch (const loss::BoundaryInstability&) {
      // Too close to a selection boundary; draw another configuration.
    }
  }
  return r;
}

}  // namespace fgve::gradcheck
