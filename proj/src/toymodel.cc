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

#include "fgve/toymodel.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace fgve::toy {

namespace {

std::mt19937_64 Stream(std::uint64_t seed, std::uint64_t purpose) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(purpose)};
  return std::mt19937_64(seq);
}

template <typename Fn>
void ForEachTensor(ModelParams& p, Fn fn) {
  fn("E", p.E);
  fn("w_alpha", p.w_alpha);
  fn("W1", p.W1);
  fn("b1", p.b1);
  fn("W2", p.W2);
  fn("b2", p.b2);
  fn("C1", p.C1);
  fn("c1", p.c1);
  fn("C2", p.C2);
  fn("c2", p.c2);
}

template <typename Fn>
void ForEachTensor(const ModelParams& p, Fn fn) {
  ForEachTensor(const_cast<ModelParams&>(p), [&](const char* name, auto& t) {
    fn(name, std::as_const(t));
  });
}

void FillNormal(Eigen::Ref<Eigen::MatrixXd> m, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = scale * n(rng);
  }
}

// Variable and role tokens start near the origin, below every concept on
// the salience axis.
constexpr double kTokenScale = 0.1;

int Argmax(const loss::Logits<double>& z) {
  int best = 0;
  for (int c = 1; c < 3; ++c) {
    if (z(c) > z(best)) best = c;
  }
  return best;
}

double Cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double n = a.norm() * b.norm();
  return n > 0 ? a.dot(b) / n : 0.0;
}

}  // namespace

int ModelParams::TokenId(const std::string& token) const {
  const auto it = std::find(vocab.begin(), vocab.end(), token);
  return it == vocab.end() ? -1 : int(it - vocab.begin());
}

ModelParams ModelParams::ZerosLike() const {
  ModelParams z;
  z.vocab = vocab;
  z.E = Eigen::MatrixXd::Zero(E.rows(), E.cols());
  z.w_alpha = Eigen::VectorXd::Zero(w_alpha.size());
  z.W1 = Eigen::MatrixXd::Zero(W1.rows(), W1.cols());
  z.b1 = Eigen::VectorXd::Zero(b1.size());
  z.W2 = Eigen::MatrixXd::Zero(W2.rows(), W2.cols());
  z.b2 = Eigen::VectorXd::Zero(b2.size());
  z.C1 = Eigen::MatrixXd::Zero(C1.rows(), C1.cols());
  z.c1 = Eigen::VectorXd::Zero(c1.size());
  z.C2 = Eigen::MatrixXd::Zero(C2.rows(), C2.cols());
  z.c2 = Eigen::VectorXd::Zero(c2.size());
  return z;
}

Eigen::Index ModelParams::Size() const {
  Eigen::Index n = 0;
  ForEachTensor(*this, [&](const char*, const auto& t) { n += t.size(); });
  return n;
}

Eigen::VectorXd ModelParams::Flatten() const {
  Eigen::VectorXd flat(Size());
  Eigen::Index at = 0;
  ForEachTensor(*this, [&](const char*, const auto& t) {
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      for (Eigen::Index j = 0; j < t.cols(); ++j) flat(at++) = t(i, j);
    }
  });
  return flat;
}

void ModelParams::Assign(const Eigen::VectorXd& flat) {
  if (flat.size() != Size()) throw std::invalid_argument("parameter vector has the wrong size");
  Eigen::Index at = 0;
  ForEachTensor(*this, [&](const char*, auto& t) {
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) = flat(at++);
    }
  });
}

void ModelParams::AddScaled(const ModelParams& other, double scale) {
  E += scale * other.E;
  w_alpha += scale * other.w_alpha;
  W1 += scale * other.W1;
  b1 += scale * other.b1;
  W2 += scale * other.W2;
  b2 += scale * other.b2;
  C1 += scale * other.C1;
  c1 += scale * other.c1;
  C2 += scale * other.C2;
  c2 += scale * other.c2;
}

bool ModelParams::AllFinite() const {
  bool ok = true;
  ForEachTensor(*this, [&](const char*, const auto& t) { ok = ok && t.allFinite(); });
  return ok;
}

ModelParams InitParams(const World& world, const TrainConfig& cfg) {
  if (world.d() != cfg.d) throw ConfigError("config d does not match the world's embeddings");
  ModelParams p;
  p.vocab = world.concepts;
  p.vocab.insert(p.vocab.end(), world.roles.begin(), world.roles.end());
  for (int i = 0; i <= cfg.max_children; ++i) p.vocab.push_back("z" + std::to_string(i));

  std::mt19937_64 rng = Stream(cfg.seed, 4);
  const int d = cfg.d, h = cfg.h, v = int(p.vocab.size());
  p.E.resize(v, d);
  FillNormal(p.E, kTokenScale, rng);
  p.E.topRows(world.num_concepts()) = world.semantic;
  p.w_alpha = Eigen::VectorXd::Zero(d);
  p.w_alpha(0) = 1.0;
  // Each hidden unit starts on a random projection of pooled + region or
  // pooled - region, so agreement between the two halves is visible from
  // the first step.
  p.W1.resize(h, 2 * d);
  FillNormal(p.W1.leftCols(d), cfg.init_scale, rng);
  for (int i = 0; i < h; ++i) {
    p.W1.row(i).tail(d) = (i % 2 == 0 ? 1.0 : -1.0) * p.W1.row(i).head(d);
  }
  p.b1.resize(h);
  FillNormal(p.b1, cfg.init_scale, rng);
  p.W2 = Eigen::MatrixXd::Zero(3, h);
  p.b2 = Eigen::VectorXd::Zero(3);
  p.C1.resize(h, d);
  FillNormal(p.C1, cfg.init_scale, rng);
  p.c1 = Eigen::VectorXd::Zero(h);
  p.C2 = Eigen::MatrixXd::Zero(3, h);
  p.c2 = Eigen::VectorXd::Zero(3);
  return p;
}

PreparedSample Prepare(const World& world, const ModelParams& params, const SyntheticSample& s,
                       int max_len) {
  const penman::AmrGraph g = penman::Simplify(penman::ParsePenman(s.amr));
  const penman::LinearizedAmr lin = penman::LinearizeDfs(g);
  const ke::KeStructure ks = ke::ExtractKes(g);
  const ke::KeTokenMap map = ke::KeTokenSpans(lin, ks);

  PreparedSample p;
  p.sample_id = s.sample_id;
  p.amr = s.amr;
  p.label = s.sample_label;
  p.pairs = ks.pairs;
  p.gold = s.gold;
  for (const auto& k : ks.kes) p.is_node.push_back(k.is_node());
  for (const auto& span : map.spans) {
    std::vector<int> ids;
    for (int t : span) {
      const int id = params.TokenId(lin.tokens[t].text);
      if (id < 0) throw std::invalid_argument("token '" + lin.tokens[t].text + "' not in vocab");
      ids.push_back(id);
    }
    p.span_tokens.push_back(std::move(ids));
  }
  for (int tag : s.scene.tags) {
    const int id = params.TokenId(world.concepts.at(tag));
    if (id < 0) throw std::invalid_argument("tag '" + world.concepts[tag] + "' not in vocab");
    p.tag_tokens.push_back(id);
  }
  p.region_noise = RegionNoise(world, s.scene);
  p.active.assign(ks.kes.size(), true);
  if (s.sample_label != Label::kEnt) {
    for (int k : ke::TruncationMask(map, std::size_t(max_len))) p.active[k] = false;
  }
  return p;
}

Eigen::VectorXd KeEmbedding::features() const {
  Eigen::VectorXd x(pooled.size() + region.size());
  x << pooled, region;
  return x;
}

KeEmbedding EmbedKe(const ModelParams& params, const std::vector<int>& span,
                    const std::vector<int>& tag_tokens, const Eigen::MatrixXd& region_noise) {
  if (span.empty()) throw EmptySpan("KE span has no tokens");
  const int m = int(span.size());
  KeEmbedding e;
  Eigen::VectorXd scores(m);
  for (int j = 0; j < m; ++j) scores(j) = params.E.row(span[j]).dot(params.w_alpha);
  e.attention = (scores.array() - scores.maxCoeff()).exp();
  e.attention /= e.attention.sum();
  e.pooled = Eigen::VectorXd::Zero(params.d());
  for (int j = 0; j < m; ++j) e.pooled += e.attention(j) * params.E.row(span[j]).transpose();
  e.salient = 0;
  for (int j = 1; j < m; ++j) {
    if (e.attention(j) > e.attention(e.salient)) e.salient = j;
  }

  e.region = Eigen::VectorXd::Zero(params.d());
  const Eigen::VectorXd key = params.E.row(span[e.salient]).transpose();
  double best = -2;
  for (std::size_t t = 0; t < tag_tokens.size(); ++t) {
    const double c = Cosine(key, params.E.row(tag_tokens[t]).transpose());
    if (c > best) {
      best = c;
      e.tag = int(t);
    }
  }
  if (e.tag >= 0) {
    e.region = (params.E.row(tag_tokens[e.tag]) + region_noise.row(e.tag)).transpose();
  }
  return e;
}

std::vector<Label> ForwardResult::Predicted() const {
  std::vector<Label> out;
  for (Eigen::Index i = 0; i < ke_logits.rows(); ++i) {
    out.push_back(static_cast<Label>(Argmax(ke_logits.row(i).transpose())));
  }
  return out;
}

std::vector<int> ForwardResult::Selections() const {
  std::vector<int> out;
  for (const auto& k : kes) out.push_back(k.salient);
  for (const auto& k : kes) out.push_back(k.tag);
  return out;
}

ForwardResult Forward(const ModelParams& params, const PreparedSample& s) {
  ForwardResult f;
  const int n = int(s.span_tokens.size());
  f.ke_logits.resize(n, 3);
  f.mean_pooled = Eigen::VectorXd::Zero(params.d());
  for (int i = 0; i < n; ++i) {
    f.kes.push_back(EmbedKe(params, s.span_tokens[i], s.tag_tokens, s.region_noise));
    const Eigen::VectorXd x = f.kes.back().features();
    f.ke_hidden.push_back((params.W1 * x + params.b1).array().tanh().matrix());
    f.ke_logits.row(i) = (params.W2 * f.ke_hidden.back() + params.b2).transpose();
    f.mean_pooled += f.kes.back().pooled;
  }
  if (n > 0) f.mean_pooled /= n;
  f.cls_hidden = (params.C1 * f.mean_pooled + params.c1).array().tanh().matrix();
  f.cls_logits = params.C2 * f.cls_hidden + params.c2;
  return f;
}

void Backward(const ModelParams& params, const PreparedSample& s, const ForwardResult& f,
              const loss::LogitsMatrix<double>& d_ke, const loss::Logits<double>& d_cls,
              ModelParams* g) {
  const int n = int(f.kes.size());
  const int d = params.d();

  // CLS head.
  g->C2.noalias() += d_cls * f.cls_hidden.transpose();
  g->c2 += d_cls;
  const Eigen::VectorXd d_cls_pre =
      ((params.C2.transpose() * d_cls).array() * (1 - f.cls_hidden.array().square())).matrix();
  g->C1.noalias() += d_cls_pre * f.mean_pooled.transpose();
  g->c1 += d_cls_pre;
  const Eigen::VectorXd d_mean = params.C1.transpose() * d_cls_pre;

  for (int i = 0; i < n; ++i) {
    const KeEmbedding& e = f.kes[i];
    const Eigen::Vector3d dz = d_ke.row(i).transpose();
    const Eigen::VectorXd& hid = f.ke_hidden[i];
    g->W2.noalias() += dz * hid.transpose();
    g->b2 += dz;
    const Eigen::VectorXd d_pre =
        ((params.W2.transpose() * dz).array() * (1 - hid.array().square())).matrix();
    g->W1.noalias() += d_pre * e.features().transpose();
    g->b1 += d_pre;
    const Eigen::VectorXd d_x = params.W1.transpose() * d_pre;
    if (e.tag >= 0) g->E.row(s.tag_tokens[e.tag]) += d_x.tail(d).transpose();
    Eigen::VectorXd d_pooled = d_x.head(d) + d_mean / n;

    const std::vector<int>& span = s.span_tokens[i];
    const int m = int(span.size());
    Eigen::VectorXd u(m);
    for (int j = 0; j < m; ++j) u(j) = params.E.row(span[j]).dot(d_pooled);
    const double u_bar = e.attention.dot(u);
    for (int j = 0; j < m; ++j) {
      const double d_score = e.attention(j) * (u(j) - u_bar);
      g->E.row(span[j]) += e.attention(j) * d_pooled.transpose() + d_score * params.w_alpha.transpose();
      g->w_alpha += d_score * params.E.row(span[j]).transpose();
    }
  }
}

loss::SampleTerms<double> Terms(const PreparedSample& s, const ForwardResult& f) {
  loss::SampleTerms<double> t;
  t.cls_logits = f.cls_logits;
  t.ke_logits = f.ke_logits;
  t.label = s.label;
  t.y_hat = f.Predicted();
  t.pairs = s.pairs;
  t.active = s.active;
  return t;
}

TrainResult Train(const Dataset& ds, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.Validate();
  TrainResult r;
  r.params = InitParams(ds.world, cfg);
  ModelParams& params = r.params;

  std::vector<PreparedSample> data;
  data.reserve(ds.train.size());
  for (const SyntheticSample& s : ds.train) {
    SyntheticSample visible = s;
    visible.gold.clear();
    data.push_back(Prepare(ds.world, params, visible, cfg.max_len));
  }

  std::mt19937_64 rng = Stream(cfg.seed, 3);
  std::vector<int> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  const loss::LossWeights w = cfg.weights();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord rec;
    rec.epoch = epoch;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + std::size_t(cfg.batch_size));
      std::vector<ForwardResult> fwd;
      std::vector<loss::SampleTerms<double>> terms;
      for (std::size_t b = start; b < end; ++b) {
        fwd.push_back(Forward(params, data[order[b]]));
        terms.push_back(Terms(data[order[b]], fwd.back()));
      }
      const auto out = loss::BatchTotal<double>(terms, w, cfg.confidence());
      if (!std::isfinite(out.value)) {
        throw DivergenceDetected("non-finite loss at epoch " + std::to_string(epoch));
      }
      ModelParams grads = params.ZerosLike();
      for (std::size_t b = start; b < end; ++b) {
        Backward(params, data[order[b]], fwd[b - start], out.ke_grads[b - start],
                 out.cls_grads[b - start], &grads);
      }
      params.AddScaled(grads, -cfg.lr);
      rec.total += out.value;
      rec.breakdown.cls += out.breakdown.cls;
      rec.breakdown.ke += out.breakdown.ke;
      rec.breakdown.bu_c += out.breakdown.bu_c;
      rec.breakdown.bu_n += out.breakdown.bu_n;
      rec.breakdown.td_e += out.breakdown.td_e;
      rec.breakdown.td_n += out.breakdown.td_n;
      ++batches;
    }
    if (batches > 0) {
      const double inv = 1.0 / batches;
      rec.total *= inv;
      rec.breakdown.cls *= inv;
      rec.breakdown.ke *= inv;
      rec.breakdown.bu_c *= inv;
      rec.breakdown.bu_n *= inv;
      rec.breakdown.td_e *= inv;
      rec.breakdown.td_n *= inv;
    }
    if (!params.AllFinite()) {
      throw DivergenceDetected("non-finite parameters at epoch " + std::to_string(epoch));
    }
    r.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return r;
}

std::vector<eval::AnnotatedSample> PredictKes(const ModelParams& params, const World& world,
                                              const std::vector<SyntheticSample>& samples,
                                              int max_len) {
  std::vector<eval::AnnotatedSample> out;
  for (const SyntheticSample& s : samples) {
    const PreparedSample p = Prepare(world, params, s, max_len);
    const ForwardResult f = Forward(params, p);
    const auto label = static_cast<Label>(Argmax(f.cls_logits));
    eval::AnnotatedSample a = eval::AnnotatedSample::FromAmr(s.sample_id, s.hypothesis, s.amr, label);
    const auto pred = f.Predicted();
    for (std::size_t k = 0; k < pred.size(); ++k) a.labels[k] = ToKeLabel(pred[k]);
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<eval::AnnotatedSample> GoldAnnotations(const std::vector<SyntheticSample>& samples) {
  std::vector<eval::AnnotatedSample> out;
  for (const SyntheticSample& s : samples) {
    eval::AnnotatedSample a =
        eval::AnnotatedSample::FromAmr(s.sample_id, s.hypothesis, s.amr, s.sample_label);
    if (s.gold.size() != a.labels.size()) {
      throw std::invalid_argument("sample " + s.sample_id + " has no gold KE labels");
    }
    for (std::size_t k = 0; k < s.gold.size(); ++k) a.labels[k] = s.gold[k];
    out.push_back(std::move(a));
  }
  return out;
}

double ToyReport::best_copy_overall() const {
  return std::max(copy_gold.acc_overall(), copy_cls.acc_overall());
}

ToyReport EvaluateToy(const ModelParams& params, const World& world,
                      const std::vector<SyntheticSample>& eval_split, int max_len) {
  const auto preds = PredictKes(params, world, eval_split, max_len);
  const auto golds = GoldAnnotations(eval_split);
  ToyReport r;
  r.metrics = eval::KeMetrics(preds, golds);
  r.predicted = eval::Distribution(preds, golds);
  r.gold = eval::Distribution(golds, golds);
  r.sample_accuracy_derived = eval::SampleAccuracy(preds, golds);
  int cls_correct = 0;
  std::vector<eval::AnnotatedSample> relabeled = golds;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    cls_correct += preds[i].sample_label == golds[i].sample_label;
    relabeled[i].sample_label = preds[i].sample_label;
  }
  r.sample_accuracy_cls = golds.empty() ? 1.0 : double(cls_correct) / golds.size();
  r.copy_gold = eval::KeMetrics(eval::CopySampleLabel(golds), golds);
  r.copy_cls = eval::KeMetrics(eval::CopySampleLabel(relabeled), golds);
  return r;
}

void SaveCheckpoint(const std::string& path, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path);
  out << "fgve-checkpoint 1\n";
  out << "vocab " << params.vocab.size() << '\n';
  for (const std::string& t : params.vocab) out << t << '\n';
  char buf[32];
  ForEachTensor(params, [&](const char* name, const auto& t) {
    out << "tensor " << name << ' ' << t.rows() << ' ' << t.cols() << '\n';
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      for (Eigen::Index j = 0; j < t.cols(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", t(i, j));
        out << (j ? " " : "") << buf;
      }
      out << '\n';
    }
  });
}

ModelParams LoadCheckpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  auto fail = [&](const std::string& what) {
    return std::runtime_error("bad checkpoint " + path + ": " + what);
  };
  std::string word;
  int version = 0;
  if (!(in >> word >> version) || word != "fgve-checkpoint" || version != 1) {
    throw fail("missing header");
  }
  std::size_t n = 0;
  if (!(in >> word >> n) || word != "vocab") throw fail("missing vocab");
  ModelParams p;
  p.vocab.resize(n);
  for (std::string& t : p.vocab) in >> t;
  ForEachTensor(p, [&](const char* name, auto& t) {
    std::string tag, got;
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> tag >> got >> rows >> cols) || tag != "tensor" || got != name) {
      throw fail(std::string("expected tensor ") + name);
    }
    using T = std::decay_t<decltype(t)>;
    if constexpr (T::ColsAtCompileTime == 1) {
      if (cols != 1) throw fail(std::string(name) + " must be a column");
      t.resize(rows);
    } else {
      t.resize(rows, cols);
    }
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (!(in >> t(i, j))) throw fail(std::string("short tensor ") + name);
      }
    }
  });
  return p;
}

}  // namespace fgve::toy
