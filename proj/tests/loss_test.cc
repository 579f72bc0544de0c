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

#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "fgve/gradcheck.h"

using namespace fgve;
using namespace fgve::loss;

namespace {

using Mat = LogitsMatrix<double>;
using Vec3 = Logits<double>;

// Reference values evaluated independently in double precision.
constexpr double kLn3 = 1.0986122886681098;
constexpr double kNeutralSingle = 1.5040773967762742;   // ln(3/2) + ln 3
constexpr double kNeutralPair = 0.7576266295089609;     // A=(0,0,0), B=(0,2,0)
constexpr double kConPair = 0.09492295642096085;        // -log(e^3 / (e^3 + 2))
constexpr double kBuC = 0.9676544936894649;             // sigmoid(2) * ln 3
constexpr double kTdE = 1.0465096415944197;             // sigmoid(3) * ln 3
constexpr double kTotalDefault = 1.6479184330021646;    // 0.5 ln 3 + ln 3

Mat Rows(std::initializer_list<std::array<double, 3>> rows) {
  Mat z(rows.size(), 3);
  int i = 0;
  for (const auto& r : rows) {
    z.row(i++) << r[0], r[1], r[2];
  }
  return z;
}

ActiveMask All(int n) { return ActiveMask(n, true); }

Vec3 V(double a, double b, double c) { return Vec3(a, b, c); }

Mat RandomLogits(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-3, 3);
  Mat z(n, 3);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) z(i, k) = u(rng);
  }
  return z;
}

}  // namespace

TEST_CASE("log_softmax") {
  const Vec3 u = LogSoftmax<double>(V(0, 0, 0));
  for (int k = 0; k < 3; ++k) CHECK(u(k) == doctest::Approx(-kLn3).epsilon(1e-15));

  const Vec3 big = LogSoftmax<double>(V(1000, 0, 0));
  CHECK(big.allFinite());
  CHECK(std::abs(big(0)) < 1e-12);

  CHECK(LogSoftmax<double>(V(1, 0, 0))(0) == doctest::Approx(-0.5514447139320511).epsilon(1e-13));

  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    const Vec3 z = RandomLogits(rng, 1).row(0).transpose() * 10.0;
    CHECK(std::abs(LogSoftmax<double>(z).array().exp().sum() - 1.0) < 1e-12);
  }
}

TEST_CASE("non-finite logits are rejected") {
  Mat z = Rows({{0, 0, 0}});
  z(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(KeEntailed(z, All(1)), NonFiniteInput);
  CHECK_THROWS_AS(KeNeutral(z, All(1)), NonFiniteInput);
  CHECK_THROWS_AS(KeContradiction(z, All(1)), NonFiniteInput);
  z(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(Structural(z, std::span<const Label>(), {}, All(1)), NonFiniteInput);
}

TEST_CASE("entailed branch") {
  CHECK(KeEntailed(Rows({{0, 0, 0}}), All(1)).value == doctest::Approx(kLn3).epsilon(1e-12));
  CHECK(KeEntailed(Rows({{0, 0, 0}, {0, 0, 0}}), All(2)).value ==
        doctest::Approx(2 * kLn3).epsilon(1e-12));
  CHECK(KeEntailed(Rows({{10, 0, 0}}), All(1)).value < 1e-4);

  const Mat z = Rows({{0.3, -1, 2}, {1, 1, -0.5}});
  const auto out = KeEntailed(z, All(2));
  for (int i = 0; i < 2; ++i) {
    Vec3 expect = Softmax<double>(z.row(i).transpose());
    expect(0) -= 1;
    CHECK((out.grads.row(i).transpose() - expect).norm() < 1e-14);
  }
  CHECK_THROWS_AS(KeEntailed(z, ActiveMask{false, false}), NoActiveKe);
  // Inactive KEs neither contribute nor receive gradient.
  const auto masked = KeEntailed(z, ActiveMask{true, false});
  CHECK(masked.grads.row(1).isZero());
  CHECK(masked.value == doctest::Approx(-LogSoftmax<double>(z.row(0).transpose())(0)));
}

TEST_CASE("neutral branch") {
  const auto single = KeNeutral(Rows({{0, 0, 0}}), All(1));
  CHECK(single.value == doctest::Approx(kNeutralSingle).epsilon(1e-12));
  CHECK(single.value == doctest::Approx(1.504077).epsilon(1e-6));

  const auto pair = KeNeutral(Rows({{0, 0, 0}, {0, 2, 0}}), All(2));
  CHECK(pair.selected == 1);
  CHECK(pair.value == doctest::Approx(kNeutralPair).epsilon(1e-12));
  CHECK(std::abs(pair.value - 0.7576) < 1e-4);

  // Ties go to the lowest index.
  CHECK(KeNeutral(Rows({{0, 1, 0}, {0, 1, 0}}), All(2)).selected == 0);
  // Selection ranks by probability, not by raw logit.
  CHECK(KeNeutral(Rows({{0, 2, 5}, {0, 1, 0}}), All(2)).selected == 1);

  CHECK(KeNeutral(Rows({{0, 30, -30}, {30, 0, -30}}), All(2)).value < 1e-10);
  CHECK_THROWS_AS(KeNeutral(Rows({{0, 0, 0}}), ActiveMask{false}), NoActiveKe);
}

TEST_CASE("contradiction branch") {
  CHECK(KeContradiction(Rows({{0, 0, 0}}), All(1)).value == doctest::Approx(kLn3).epsilon(1e-12));
  const auto out = KeContradiction(Rows({{0, 0, 0}, {0, 0, 3}}), All(2));
  CHECK(out.selected == 1);
  CHECK(out.value == doctest::Approx(kConPair).epsilon(1e-12));
  CHECK(std::abs(out.value - 0.0949) < 1e-4);
  CHECK(out.grads.row(0).isZero());
  CHECK(KeContradiction(Rows({{0, 0, 40}}), All(1)).value < 1e-12);
  // Inactive KEs are never selected.
  CHECK(KeContradiction(Rows({{0, 0, 9}, {0, 0, 1}}), ActiveMask{false, true}).selected == 1);
}

TEST_CASE("structural terms") {
  const std::vector<ke::KePair> one = {{1, 0}};  // KE 1 is the tuple, KE 0 its node

  SUBCASE("BU-C") {
    const Mat z = Rows({{0, 0, 2}, {0, 0, 0}});
    const std::vector<Label> y = {Label::kCon, Label::kCon};
    const auto out = Structural(z, std::span<const Label>(y), one, All(2));
    CHECK(out.breakdown.bu_c == doctest::Approx(kBuC).epsilon(1e-12));
    CHECK(std::abs(out.breakdown.bu_c - 0.967653) < 1e-4);
    CHECK(out.breakdown.bu_n == 0);
    CHECK(out.breakdown.td_e == 0);
    CHECK(out.breakdown.td_n == 0);
    CHECK(out.value == doctest::Approx(kBuC).epsilon(1e-12));
  }
  SUBCASE("TD-E") {
    const Mat z = Rows({{0, 0, 0}, {3, 0, 0}});
    const std::vector<Label> y = {Label::kEnt, Label::kEnt};
    const auto out = Structural(z, std::span<const Label>(y), one, All(2));
    CHECK(out.breakdown.td_e == doctest::Approx(kTdE).epsilon(1e-12));
    CHECK(std::abs(out.value - 1.046510) < 1e-6);
  }
  SUBCASE("entailed children and con parents give zero") {
    std::mt19937_64 rng(11);
    const Mat z = RandomLogits(rng, 4);
    const std::vector<ke::KePair> pairs = {{2, 0}, {2, 1}, {3, 0}, {3, 1}};
    const std::vector<Label> y = {Label::kEnt, Label::kEnt, Label::kCon, Label::kCon};
    const auto out = Structural(z, std::span<const Label>(y), pairs, All(4));
    CHECK(out.value == 0);
    CHECK(out.grads.isZero());
  }
  SUBCASE("missing predicted label") {
    const Mat z = Rows({{0, 0, 0}, {0, 0, 0}});
    const std::vector<Label> y = {Label::kEnt};
    CHECK_THROWS_AS(Structural(z, std::span<const Label>(y), one, All(2)), UnlabeledPairMember);
  }
}

TEST_CASE("sample-level cross entropy") {
  CHECK(Cls<double>(V(0, 0, 0), Label::kEnt).value == doctest::Approx(kLn3).epsilon(1e-12));
  CHECK(Cls<double>(V(10, 0, 0), Label::kEnt).value < 1e-4);
  const Vec3 z = V(0.2, -1.3, 0.7);
  for (int c = 0; c < 3; ++c) {
    Vec3 expect = Softmax<double>(z);
    expect(c) -= 1;
    CHECK((Cls<double>(z, static_cast<Label>(c)).grad - expect).norm() < 1e-14);
  }
}

TEST_CASE("weighted total") {
  SampleTerms<double> s;
  s.cls_logits = V(0, 0, 0);
  s.ke_logits = Rows({{0, 0, 0}});
  s.label = Label::kEnt;
  s.y_hat = {Label::kEnt};
  s.active = All(1);

  CHECK(Total(s, LossWeights{}).value == doctest::Approx(kTotalDefault).epsilon(1e-12));
  CHECK(std::abs(Total(s, LossWeights{}).value - 1.647918) < 1e-6);
  CHECK(Total(s, LossWeights{0, 0, 0}).value == 0);

  std::mt19937_64 rng(5);
  s.ke_logits = RandomLogits(rng, 5);
  s.cls_logits = RandomLogits(rng, 1).row(0).transpose();
  s.pairs = {{3, 0}, {3, 1}, {4, 1}, {4, 2}};
  s.active = All(5);
  s.y_hat = {Label::kCon, Label::kNeu, Label::kEnt, Label::kEnt, Label::kNeu};
  for (Label y : {Label::kEnt, Label::kNeu, Label::kCon}) {
    s.label = y;
    const double branch = KeBranch(s.ke_logits, y, s.active).value;
    CHECK(Total(s, LossWeights{0, 1, 0}).value == doctest::Approx(branch).epsilon(1e-14));
    // Without the structural weight the predicted labels do not matter.
    SampleTerms<double> other = s;
    other.y_hat.assign(5, Label::kCon);
    CHECK(Total(s, LossWeights{0.5, 1, 0}).value ==
          doctest::Approx(Total(other, LossWeights{0.5, 1, 0}).value).epsilon(1e-14));
    const auto out = Total(s, LossWeights{});
    CHECK(out.value == doctest::Approx(out.breakdown.Weighted(LossWeights{})).epsilon(1e-14));
  }
}

TEST_CASE("batch averaging") {
  SampleTerms<double> a, b;
  a.cls_logits = V(0, 0, 0);
  a.ke_logits = Rows({{0, 0, 2}, {0, 0, 0}});
  a.label = Label::kCon;
  a.y_hat = {Label::kCon, Label::kCon};
  a.pairs = {{1, 0}};
  a.active = All(2);
  b = a;
  b.ke_logits = Rows({{0, 0, 0}, {3, 0, 0}});
  b.y_hat = {Label::kEnt, Label::kEnt};
  b.label = Label::kEnt;
  const std::vector<SampleTerms<double>> batch = {a, b};
  const auto out = BatchTotal<double>(batch, LossWeights{});
  const double cls = (Cls<double>(a.cls_logits, a.label).value +
                      Cls<double>(b.cls_logits, b.label).value) / 2;
  const double ke = (KeBranch(a.ke_logits, a.label, a.active).value +
                     KeBranch(b.ke_logits, b.label, b.active).value) / 2;
  CHECK(out.breakdown.cls == doctest::Approx(cls).epsilon(1e-14));
  CHECK(out.breakdown.ke == doctest::Approx(ke).epsilon(1e-14));
  CHECK(out.breakdown.struc() == doctest::Approx((kBuC + kTdE) / 2).epsilon(1e-12));
}

TEST_CASE("losses are non-negative and gradients additive over KEs") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + int(rng() % 5);
    const Mat z = RandomLogits(rng, n);
    const ActiveMask act = All(n);
    CHECK(KeEntailed(z, act).value >= 0);
    CHECK(KeNeutral(z, act).value >= 0);
    CHECK(KeContradiction(z, act).value >= 0);

    // Entailed loss splits into per-KE pieces.
    double sum = 0;
    for (int i = 0; i < n; ++i) {
      ActiveMask only(n, false);
      only[i] = true;
      const auto part = KeEntailed(z, only);
      sum += part.value;
      CHECK((part.grads.row(i) - KeEntailed(z, act).grads.row(i)).norm() < 1e-14);
    }
    CHECK(sum == doctest::Approx(KeEntailed(z, act).value).epsilon(1e-12));
  }
}

TEST_CASE("permutation equivariance with unique maxima") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 100; ++t) {
    const Mat z = RandomLogits(rng, 4);
    std::vector<int> perm = {2, 0, 3, 1};
    Mat zp(4, 3);
    for (int i = 0; i < 4; ++i) zp.row(i) = z.row(perm[i]);
    for (auto fn : {&KeEntailed<double>, &KeNeutral<double>, &KeContradiction<double>}) {
      const auto a = fn(z, All(4));
      const auto b = fn(zp, All(4));
      CHECK(a.value == doctest::Approx(b.value).epsilon(1e-12));
      for (int i = 0; i < 4; ++i) CHECK((b.grads.row(i) - a.grads.row(perm[i])).norm() < 1e-12);
    }
  }
}

TEST_CASE("finite-difference harness") {
  const ProbeFn quad = [](const Eigen::VectorXd& x) {
    return Probe{0.5 * x.squaredNorm(), x, {}};
  };
  Eigen::VectorXd x(4);
  x << 0.3, -1.2, 2.5, 0.01;
  CHECK(GradCheck(quad, x, 1e-5) <= 1e-8);
  CHECK_THROWS_AS(GradCheck(quad, x, 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(GradCheck(quad, x, 1e-9), std::invalid_argument);

  // A selection that flips under perturbation is reported, not averaged over.
  const ProbeFn kink = [](const Eigen::VectorXd& v) {
    return Probe{std::abs(v(0)), Eigen::VectorXd::Constant(1, v(0) >= 0 ? 1.0 : -1.0),
                 {v(0) >= 0 ? 1 : 0}};
  };
  CHECK_THROWS_AS(GradCheck(kink, Eigen::VectorXd::Zero(1), 1e-5), BoundaryInstability);
}

TEST_CASE("gradient suites, stop-gradient confidences") {
  for (const auto& r : gradcheck::RunLossSuites(101, 100)) {
    INFO(r.name << " max rel error " << r.max_rel_error);
    CHECK(r.configs == 100);
    CHECK(r.passed());
  }
}

TEST_CASE("gradient suites, confidences with gradient") {
  for (const auto& r : gradcheck::RunLossSuites(202, 50, ConfidenceGradient::kFlow)) {
    INFO(r.name << " max rel error " << r.max_rel_error);
    CHECK(r.passed());
  }
}
