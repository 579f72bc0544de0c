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

// Multi-instance and structural-consistency losses over per-KE logits.
//
// KE logits are stored as an N x 3 matrix, one row per KE, columns ordered
// (ent, neu, con). Every loss returns its value together with the analytic
// gradient with respect to the logits it consumed. The argmax selections of
// the neutral/contradiction branches, the supplied predictions y_hat and the
// sigmoid confidence weights of the structural terms are treated as
// constants unless ConfidenceGradient::kFlow is requested.

#ifndef FGVE_LOSS_H_
#define FGVE_LOSS_H_

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fgve/ke.h"
#include "fgve/logic.h"

namespace fgve::loss {

template <typename Scalar>
using Logits = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using LogitsMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>;

using ActiveMask = std::vector<bool>;

class NonFiniteInput : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};
class NoActiveKe : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class UnlabeledPairMember : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class BoundaryInstability : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LossWeights {
  double cls = 0.5;
  double ke = 1.0;
  double struc = 1.0;
};

enum class ConfidenceGradient { kStop, kFlow };

template <typename Scalar>
struct Breakdown {
  Scalar cls = 0;
  Scalar ke = 0;
  Scalar bu_c = 0;
  Scalar bu_n = 0;
  Scalar td_e = 0;
  Scalar td_n = 0;

  Scalar struc() const { return bu_c + bu_n + td_e + td_n; }
  Scalar Weighted(const LossWeights& w) const {
    return Scalar(w.cls) * cls + Scalar(w.ke) * ke + Scalar(w.struc) * struc();
  }
};

template <typename Scalar>
struct LossOutput {
  Scalar value = 0;
  LogitsMatrix<Scalar> grads;  // same shape as the input logits
  Breakdown<Scalar> breakdown;
  int selected = -1;  // i* of the neutral/contradiction branches
};

// Flat record {"cls","ke","bu_c","bu_n","td_e","td_n","total"}.
template <typename Scalar>
std::map<std::string, double> BreakdownRecord(const Breakdown<Scalar>& b, double total) {
  return {{"cls", double(b.cls)},   {"ke", double(b.ke)},     {"bu_c", double(b.bu_c)},
          {"bu_n", double(b.bu_n)}, {"td_e", double(b.td_e)}, {"td_n", double(b.td_n)},
          {"total", total}};
}

// ---------------------------------------------------------------------------
// Kernels

template <typename Scalar>
Scalar LogSumExp(const Logits<Scalar>& z) {
  const Scalar m = z.maxCoeff();
  return m + std::log((z.array() - m).exp().sum());
}

template <typename Scalar>
Logits<Scalar> LogSoftmax(const Logits<Scalar>& z) {
  if (!z.allFinite()) throw NonFiniteInput("logits must be finite");
  return z.array() - LogSumExp(z);
}

template <typename Scalar>
Logits<Scalar> Softmax(const Logits<Scalar>& z) {
  return LogSoftmax(z).array().exp();
}

template <typename Scalar>
Scalar Sigmoid(Scalar x) {
  return x >= 0 ? Scalar(1) / (Scalar(1) + std::exp(-x))
                : std::exp(x) / (Scalar(1) + std::exp(x));
}

// -log p_c and its gradient softmax(z) - onehot(c).
template <typename Scalar>
Scalar NllWithGrad(const Logits<Scalar>& z, int c, Logits<Scalar>* grad) {
  const Logits<Scalar> lsm = LogSoftmax(z);
  *grad = lsm.array().exp();
  (*grad)(c) -= Scalar(1);
  return -lsm(c);
}

// -log(1 - p_c), evaluated as logsumexp(z) - logsumexp(z without c). The
// gradient is p_c * (onehot(c) - r) with r the softmax over the other two
// classes.
template <typename Scalar>
Scalar NegLogOneMinusWithGrad(const Logits<Scalar>& z, int c, Logits<Scalar>* grad) {
  const Logits<Scalar> lsm = LogSoftmax(z);
  Scalar m = -std::numeric_limits<Scalar>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (k != c) m = std::max(m, z(k));
  }
  Scalar s = 0;
  for (int k = 0; k < 3; ++k) {
    if (k != c) s += std::exp(z(k) - m);
  }
  const Scalar lse_rest = m + std::log(s);
  const Scalar pc = std::exp(lsm(c));
  for (int k = 0; k < 3; ++k) {
    (*grad)(k) = k == c ? pc : -pc * std::exp(z(k) - lse_rest);
  }
  return LogSumExp(z) - lse_rest;
}

namespace internal {

template <typename Scalar>
void CheckInputs(const LogitsMatrix<Scalar>& z, const ActiveMask& active) {
  if (static_cast<std::size_t>(z.rows()) != active.size()) {
    throw std::invalid_argument("active mask size does not match the number of KEs");
  }
  if (!z.allFinite()) throw NonFiniteInput("logits must be finite");
  if (std::none_of(active.begin(), active.end(), [](bool a) { return a; })) {
    throw NoActiveKe("no active KE");
  }
}

// Active KE maximising log p_c; ties resolve to the lowest index.
template <typename Scalar>
int MostConfident(const LogitsMatrix<Scalar>& z, const ActiveMask& active, int c) {
  int best = -1;
  Scalar best_lp = 0;
  for (int i = 0; i < z.rows(); ++i) {
    if (!active[i]) continue;
    const Scalar lp = LogSoftmax<Scalar>(z.row(i).transpose())(c);
    if (best < 0 || lp > best_lp) {
      best = i;
      best_lp = lp;
    }
  }
  return best;
}

}  // namespace internal

// ---------------------------------------------------------------------------
// KE-level multi-instance losses

// Entailed sample: every active KE is pushed towards ent.
template <typename Scalar>
LossOutput<Scalar> KeEntailed(const LogitsMatrix<Scalar>& z, const ActiveMask& active) {
  internal::CheckInputs(z, active);
  LossOutput<Scalar> out;
  out.grads = LogitsMatrix<Scalar>::Zero(z.rows(), 3);
  Logits<Scalar> g;
  for (int i = 0; i < z.rows(); ++i) {
    if (!active[i]) continue;
    out.value += NllWithGrad<Scalar>(z.row(i).transpose(), int(Label::kEnt), &g);
    out.grads.row(i) = g.transpose();
  }
  out.breakdown.ke = out.value;
  return out;
}

// Neutral sample: no active KE may be con, and the KE most confidently neu
// is pushed towards neu.
template <typename Scalar>
LossOutput<Scalar> KeNeutral(const LogitsMatrix<Scalar>& z, const ActiveMask& active) {
  internal::CheckInputs(z, active);
  LossOutput<Scalar> out;
  out.grads = LogitsMatrix<Scalar>::Zero(z.rows(), 3);
  Logits<Scalar> g;
  for (int i = 0; i < z.rows(); ++i) {
    if (!active[i]) continue;
    out.value += NegLogOneMinusWithGrad<Scalar>(z.row(i).transpose(), int(Label::kCon), &g);
    out.grads.row(i) = g.transpose();
  }
  out.selected = internal::MostConfident(z, active, int(Label::kNeu));
  out.value += NllWithGrad<Scalar>(z.row(out.selected).transpose(), int(Label::kNeu), &g);
  out.grads.row(out.selected) += g.transpose();
  out.breakdown.ke = out.value;
  return out;
}

// Contradiction sample: the KE most confidently con is pushed towards con.
template <typename Scalar>
LossOutput<Scalar> KeContradiction(const LogitsMatrix<Scalar>& z, const ActiveMask& active) {
  internal::CheckInputs(z, active);
  LossOutput<Scalar> out;
  out.grads = LogitsMatrix<Scalar>::Zero(z.rows(), 3);
  Logits<Scalar> g;
  out.selected = internal::MostConfident(z, active, int(Label::kCon));
  out.value = NllWithGrad<Scalar>(z.row(out.selected).transpose(), int(Label::kCon), &g);
  out.grads.row(out.selected) = g.transpose();
  out.breakdown.ke = out.value;
  return out;
}

template <typename Scalar>
LossOutput<Scalar> KeBranch(const LogitsMatrix<Scalar>& z, SampleLabel y,
                            const ActiveMask& active) {
  switch (y) {
    case Label::kEnt: return KeEntailed(z, active);
    case Label::kNeu: return KeNeutral(z, active);
    case Label::kCon: return KeContradiction(z, active);
  }
  throw std::invalid_argument("bad sample label");
}

// ---------------------------------------------------------------------------
// Structural losses

// Sum over (tuple parent, node child) pairs with both members active:
//   BU-C  sigma(z_child,con) * -log p_con(parent)       if y_hat_child  = con
//   BU-N  sigma(z_child,neu) * -log(1 - p_ent(parent))  if y_hat_child  = neu
//   TD-E  sigma(z_parent,ent) * -log p_ent(child)       if y_hat_parent = ent
//   TD-N  sigma(z_parent,neu) * -log(1 - p_con(child))  if y_hat_parent = neu
// The returned value is the sum (not the mean) over pairs. When
// `confidence` is given the sigmoid weights are read from it instead of z,
// which pins them for finite-difference checks of the stopped variant.
template <typename Scalar>
LossOutput<Scalar> Structural(const LogitsMatrix<Scalar>& z, std::span<const Label> y_hat,
                              std::span<const ke::KePair> pairs, const ActiveMask& active,
                              ConfidenceGradient conf = ConfidenceGradient::kStop,
                              const LogitsMatrix<Scalar>* confidence = nullptr) {
  if (static_cast<std::size_t>(z.rows()) != active.size()) {
    throw std::invalid_argument("active mask size does not match the number of KEs");
  }
  if (!z.allFinite()) throw NonFiniteInput("logits must be finite");
  if (confidence && (confidence->rows() != z.rows() || !confidence->allFinite())) {
    throw std::invalid_argument("confidence logits must match z and be finite");
  }
  const LogitsMatrix<Scalar>& zw = confidence ? *confidence : z;
  LossOutput<Scalar> out;
  out.grads = LogitsMatrix<Scalar>::Zero(z.rows(), 3);
  Logits<Scalar> g;
  const bool flow = conf == ConfidenceGradient::kFlow && !confidence;

  // One weighted term: weight sigma(z[src, wc]) on loss at row `dst`.
  auto term = [&](int src, int wc, int dst, int target, bool one_minus, Scalar* bucket) {
    const Scalar w = Sigmoid(zw(src, wc));
    const Logits<Scalar> zd = z.row(dst).transpose();
    const Scalar l = one_minus ? NegLogOneMinusWithGrad<Scalar>(zd, target, &g)
                               : NllWithGrad<Scalar>(zd, target, &g);
    *bucket += w * l;
    out.grads.row(dst) += w * g.transpose();
    if (flow) out.grads(src, wc) += w * (Scalar(1) - w) * l;
  };

  for (const ke::KePair& p : pairs) {
    const auto n = static_cast<std::size_t>(z.rows());
    if (p.parent < 0 || p.child < 0 || static_cast<std::size_t>(p.parent) >= n ||
        static_cast<std::size_t>(p.child) >= n) {
      throw UnlabeledPairMember("pair references a KE without logits");
    }
    if (!active[p.parent] || !active[p.child]) continue;
    if (static_cast<std::size_t>(p.parent) >= y_hat.size() ||
        static_cast<std::size_t>(p.child) >= y_hat.size()) {
      throw UnlabeledPairMember("pair member has no predicted label");
    }
    const int ent = int(Label::kEnt), neu = int(Label::kNeu), con = int(Label::kCon);
    const Label yc = y_hat[p.child];
    const Label yp = y_hat[p.parent];
    if (yc == Label::kCon) term(p.child, con, p.parent, con, false, &out.breakdown.bu_c);
    if (yc == Label::kNeu) term(p.child, neu, p.parent, ent, true, &out.breakdown.bu_n);
    if (yp == Label::kEnt) term(p.parent, ent, p.child, ent, false, &out.breakdown.td_e);
    if (yp == Label::kNeu) term(p.parent, neu, p.child, con, true, &out.breakdown.td_n);
  }
  out.value = out.breakdown.struc();
  return out;
}

// Number of pairs the structural loss ranges over.
inline int ActivePairCount(std::span<const ke::KePair> pairs, const ActiveMask& active) {
  int n = 0;
  for (const ke::KePair& p : pairs) {
    if (static_cast<std::size_t>(p.parent) < active.size() &&
        static_cast<std::size_t>(p.child) < active.size() && active[p.parent] &&
        active[p.child]) {
      ++n;
    }
  }
  return n;
}

// ---------------------------------------------------------------------------
// Sample-level loss and the weighted total

template <typename Scalar>
struct ClsOutput {
  Scalar value = 0;
  Logits<Scalar> grad;
};

template <typename Scalar>
ClsOutput<Scalar> Cls(const Logits<Scalar>& sample_logits, SampleLabel y) {
  ClsOutput<Scalar> out;
  out.value = NllWithGrad<Scalar>(sample_logits, int(y), &out.grad);
  return out;
}

template <typename Scalar>
struct SampleTerms {
  Logits<Scalar> cls_logits;
  LogitsMatrix<Scalar> ke_logits;
  SampleLabel label = Label::kEnt;
  std::vector<Label> y_hat;
  std::vector<ke::KePair> pairs;
  ActiveMask active;
  // Optional source of the structural weights; empty means ke_logits.
  LogitsMatrix<Scalar> confidence_logits;
};

template <typename Scalar>
struct BatchLossOutput {
  Scalar value = 0;
  Breakdown<Scalar> breakdown;  // per-sample means for cls/ke, per-pair means for struc
  std::vector<Logits<Scalar>> cls_grads;
  std::vector<LogitsMatrix<Scalar>> ke_grads;
};

// beta_cls * mean_samples(L_CLS) + beta_ke * mean_samples(L_KE)
//   + beta_struc * (sum of structural terms / number of active pairs).
// A sample without active KEs contributes nothing to L_KE but still counts
// in the per-sample mean. Reduction runs in batch order.
template <typename Scalar>
BatchLossOutput<Scalar> BatchTotal(std::span<const SampleTerms<Scalar>> batch,
                                   const LossWeights& w,
                                   ConfidenceGradient conf = ConfidenceGradient::kStop) {
  if (w.cls < 0 || w.ke < 0 || w.struc < 0) {
    throw std::invalid_argument("loss weights must be non-negative");
  }
  BatchLossOutput<Scalar> out;
  if (batch.empty()) return out;
  const Scalar inv_n = Scalar(1) / Scalar(batch.size());
  int total_pairs = 0;
  for (const auto& s : batch) total_pairs += ActivePairCount(s.pairs, s.active);
  const Scalar inv_pairs = total_pairs > 0 ? Scalar(1) / Scalar(total_pairs) : Scalar(0);

  for (const auto& s : batch) {
    const ClsOutput<Scalar> cls = Cls(s.cls_logits, s.label);
    out.breakdown.cls += inv_n * cls.value;
    out.cls_grads.push_back(Scalar(w.cls) * inv_n * cls.grad);

    LogitsMatrix<Scalar> g = LogitsMatrix<Scalar>::Zero(s.ke_logits.rows(), 3);
    if (std::any_of(s.active.begin(), s.active.end(), [](bool a) { return a; })) {
      const LossOutput<Scalar> ke = KeBranch(s.ke_logits, s.label, s.active);
      out.breakdown.ke += inv_n * ke.value;
      g += Scalar(w.ke) * inv_n * ke.grads;
    }
    if (total_pairs > 0 && (w.struc > 0 || !s.y_hat.empty())) {
      const LossOutput<Scalar> st = Structural(s.ke_logits, std::span<const Label>(s.y_hat),
                                               std::span<const ke::KePair>(s.pairs), s.active,
                                               conf,
                                               s.confidence_logits.rows() > 0
                                                   ? &s.confidence_logits
                                                   : nullptr);
      out.breakdown.bu_c += inv_pairs * st.breakdown.bu_c;
      out.breakdown.bu_n += inv_pairs * st.breakdown.bu_n;
      out.breakdown.td_e += inv_pairs * st.breakdown.td_e;
      out.breakdown.td_n += inv_pairs * st.breakdown.td_n;
      g += Scalar(w.struc) * inv_pairs * st.grads;
    }
    out.ke_grads.push_back(std::move(g));
  }
  out.value = out.breakdown.Weighted(w);
  return out;
}

// Single-sample total, a batch of one.
template <typename Scalar>
BatchLossOutput<Scalar> Total(const SampleTerms<Scalar>& sample, const LossWeights& w,
                              ConfidenceGradient conf = ConfidenceGradient::kStop) {
  return BatchTotal<Scalar>(std::span<const SampleTerms<Scalar>>(&sample, 1), w, conf);
}

// ---------------------------------------------------------------------------
// Finite-difference verification

struct Probe {
  double value = 0;
  Eigen::VectorXd grad;
  // Discrete choices made during evaluation (argmax selections, y_hat, ...);
  // a perturbation that changes any of them invalidates the comparison.
  std::vector<int> selection;
};

using ProbeFn = std::function<Probe(const Eigen::VectorXd&)>;

// Largest |analytic - numeric| / max(1, |analytic|, |numeric|) over all
// coordinates, with central differences of step eps in [1e-7, 1e-4].
double GradCheck(const ProbeFn& f, const Eigen::VectorXd& x, double eps);

}  // namespace fgve::loss

#endif  // FGVE_LOSS_H_
