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
#include <filesystem>
#include <random>

#include "doctest.h"
#include "fgve/gradcheck.h"

using namespace fgve;
using namespace fgve::toy;

namespace {

// Three tokens in 2-d: a, b and a copy of a.
ModelParams Tiny() {
  ModelParams p;
  p.vocab = {"a", "b", "c"};
  p.E.resize(3, 2);
  p.E << 1.0, 0.0,
         0.0, 1.0,
         1.0, 0.0;
  p.w_alpha = Eigen::Vector2d(0.3, -0.7);
  return p;
}

TrainConfig SmallConfig(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.seed = seed;
  cfg.n_samples = 120;
  cfg.epochs = 2;
  cfg.h = 8;
  return cfg;
}

Eigen::MatrixXd NoNoise(int tags, int d) { return Eigen::MatrixXd::Zero(tags, d); }

}  // namespace

TEST_CASE("embed_ke") {
  const ModelParams p = Tiny();

  SUBCASE("a single token pools to its own embedding") {
    const KeEmbedding e = EmbedKe(p, {1}, {}, NoNoise(0, 2));
    CHECK(e.attention(0) == 1.0);
    CHECK(e.pooled == p.E.row(1).transpose());
    CHECK(e.tag == -1);
    CHECK(e.region.isZero());
    CHECK(e.features().size() == 4);
  }
  SUBCASE("identical tokens share attention") {
    const KeEmbedding e = EmbedKe(p, {0, 2}, {}, NoNoise(0, 2));
    CHECK(e.attention(0) == doctest::Approx(0.5));
    CHECK(e.attention(1) == doctest::Approx(0.5));
    CHECK(e.salient == 0);  // ties go to the first position
  }
  SUBCASE("retrieval picks the tag closest in cosine") {
    ModelParams q = p;
    q.vocab.push_back("b2");
    q.E.conservativeResize(4, 2);
    q.E.row(3) << 1e-3, 1.0;  // b plus a little noise
    const Eigen::MatrixXd noise = (Eigen::MatrixXd(2, 2) << 0.1, 0.2, 0.3, 0.4).finished();
    const KeEmbedding e = EmbedKe(q, {3}, {0, 1}, noise);
    CHECK(e.tag == 1);
    CHECK(e.region.isApprox(Eigen::Vector2d(0.3, 1.4)));
  }
  SUBCASE("attention sums to one and follows the tokens") {
    ModelParams q = p;
    q.E = Eigen::MatrixXd::Random(3, 2);
    const std::vector<int> span = {0, 1, 2, 1};
    const KeEmbedding e = EmbedKe(q, span, {}, NoNoise(0, 2));
    CHECK(e.attention.sum() == doctest::Approx(1.0).epsilon(1e-15));
    std::vector<int> perm = {3, 1, 0, 2};
    std::vector<int> shuffled;
    for (int i : perm) shuffled.push_back(span[i]);
    const KeEmbedding f = EmbedKe(q, shuffled, {}, NoNoise(0, 2));
    for (int j = 0; j < 4; ++j) CHECK(f.attention(j) == doctest::Approx(e.attention(perm[j])));
    CHECK(f.pooled.isApprox(e.pooled));
  }
  CHECK_THROWS_AS(EmbedKe(p, {}, {}, NoNoise(0, 2)), EmptySpan);
}

TEST_CASE("forward pass") {
  const TrainConfig cfg = SmallConfig(3);
  const Dataset ds = GenerateDataset(cfg);
  ModelParams params = InitParams(ds.world, cfg);
  const SyntheticSample& raw = ds.eval.front();
  const PreparedSample s = Prepare(ds.world, params, raw, cfg.max_len);

  SUBCASE("zero output layers give zero logits") {
    const ForwardResult f = Forward(params, s);
    CHECK(f.ke_logits.isZero());
    CHECK(f.cls_logits.isZero());
    // One KE at zero logits under the default weights: 0.5 ln 3 + ln 3.
    loss::SampleTerms<double> t = Terms(s, f);
    t.ke_logits = t.ke_logits.topRows(1).eval();
    t.active = {true};
    t.pairs.clear();
    t.y_hat = {Label::kEnt};
    t.label = Label::kEnt;
    CHECK(loss::Total(t, loss::LossWeights{}).value ==
          doctest::Approx(1.6479184330021646).epsilon(1e-12));
  }
  SUBCASE("KE order only permutes the KE logits") {
    std::mt19937_64 rng(8);
    Eigen::VectorXd x = params.Flatten();
    std::normal_distribution<double> n(0, 0.5);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += n(rng);
    params.Assign(x);
    const ForwardResult f = Forward(params, s);
    PreparedSample r = s;
    std::reverse(r.span_tokens.begin(), r.span_tokens.end());
    const ForwardResult g = Forward(params, r);
    const int k = int(s.span_tokens.size());
    for (int i = 0; i < k; ++i) CHECK(g.ke_logits.row(i).isApprox(f.ke_logits.row(k - 1 - i)));
    CHECK(g.cls_logits.isApprox(f.cls_logits));
    CHECK(Forward(params, s).ke_logits == f.ke_logits);
  }
  SUBCASE("every KE gets a span and a tag") {
    REQUIRE(s.span_tokens.size() == s.active.size());
    const ForwardResult f = Forward(params, s);
    for (const auto& e : f.kes) CHECK(e.tag >= 0);
    CHECK(s.region_noise.rows() == Eigen::Index(raw.scene.tags.size()));
  }
}

TEST_CASE("truncation masks only neutral and contradiction samples") {
  const TrainConfig cfg = SmallConfig(5);
  const Dataset ds = GenerateDataset(cfg);
  const ModelParams params = InitParams(ds.world, cfg);
  for (const auto& s : ds.eval) {
    const PreparedSample p = Prepare(ds.world, params, s, 3);
    const bool any_off = std::count(p.active.begin(), p.active.end(), false) > 0;
    if (s.sample_label == Label::kEnt) CHECK(!any_off);
    const PreparedSample full = Prepare(ds.world, params, s, 1000);
    CHECK(std::count(full.active.begin(), full.active.end(), false) == 0);
  }
}

TEST_CASE("model gradients match finite differences") {
  const gradcheck::SuiteResult r = gradcheck::RunModelSuite(21, 30);
  INFO("max rel error " << r.max_rel_error);
  CHECK(r.configs == 30);
  CHECK(r.passed());
}

TEST_CASE("training") {
  TrainConfig cfg = SmallConfig(7);
  const Dataset ds = GenerateDataset(cfg);

  SUBCASE("zero learning rate leaves parameters untouched") {
    cfg.lr = 0;
    const TrainResult r = Train(ds, cfg);
    CHECK(r.params.Flatten() == InitParams(ds.world, cfg).Flatten());
    REQUIRE(r.history.size() == 2);
    CHECK(r.history[0].total == r.history[1].total);
  }
  SUBCASE("without KE terms the KE head never moves") {
    cfg.beta_ke = 0;
    cfg.beta_struc = 0;
    const ModelParams init = InitParams(ds.world, cfg);
    const TrainResult r = Train(ds, cfg);
    CHECK(r.params.W1 == init.W1);
    CHECK(r.params.W2 == init.W2);
    CHECK(r.params.b2 == init.b2);
    CHECK(r.params.C2 != init.C2);
    for (const auto& h : r.history) CHECK(h.total == doctest::Approx(0.5 * h.breakdown.cls));
  }
  SUBCASE("same seed, same parameters") {
    const TrainResult a = Train(ds, cfg);
    const TrainResult b = Train(ds, cfg);
    CHECK(a.params.Flatten() == b.params.Flatten());
    cfg.seed = 8;
    CHECK(Train(ds, cfg).params.Flatten() != a.params.Flatten());
  }
  SUBCASE("history callback sees every epoch") {
    int calls = 0;
    Train(ds, cfg, [&](const EpochRecord& rec) { CHECK(rec.epoch == ++calls); });
    CHECK(calls == cfg.epochs);
  }
}

TEST_CASE("evaluation and baselines") {
  const TrainConfig cfg = SmallConfig(9);
  const Dataset ds = GenerateDataset(cfg);
  const ModelParams params = InitParams(ds.world, cfg);
  const ToyReport r = EvaluateToy(params, ds.world, ds.eval, cfg.max_len);
  // Untrained: every logit is zero, so every KE is predicted ent.
  CHECK(r.metrics.acc_ent() == 1.0);
  CHECK(r.metrics.acc_con() == 0.0);
  CHECK(r.metrics.acc_struc() == 1.0);
  CHECK(r.copy_gold.acc_struc() == 1.0);
  CHECK(r.best_copy_overall() >= r.copy_gold.acc_overall());
  CHECK(r.best_copy_overall() >= r.copy_cls.acc_overall());

  const auto gold = GoldAnnotations(ds.eval);
  const auto m = eval::KeMetrics(gold, gold);
  CHECK(m.acc_overall() == 1.0);
  CHECK(m.acc_struc() == 1.0);
}

TEST_CASE("checkpoint round trip") {
  const TrainConfig cfg = SmallConfig(10);
  const Dataset ds = GenerateDataset(cfg);
  const TrainResult r = Train(ds, cfg);
  const auto path = std::filesystem::temp_directory_path() / "fgve_toymodel_test.ckpt";
  SaveCheckpoint(path.string(), r.params);
  const ModelParams back = LoadCheckpoint(path.string());
  CHECK(back.vocab == r.params.vocab);
  CHECK(back.Flatten() == r.params.Flatten());
  std::filesystem::remove(path);
  CHECK_THROWS(LoadCheckpoint(path.string()));
}
