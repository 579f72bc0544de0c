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

#include "fgve/logic.h"

#include <algorithm>
#include <random>

#include "doctest.h"

using namespace fgve;
using namespace fgve::logic;

namespace {

constexpr Label kAll[] = {Label::kEnt, Label::kNeu, Label::kCon};

using V = std::vector<Violation>;

}  // namespace

TEST_CASE("check_pair examples") {
  CHECK(CheckPair(Label::kEnt, Label::kEnt).empty());
  CHECK(CheckPair(Label::kCon, Label::kEnt) == V{Violation::kBuC, Violation::kTdE});
  CHECK(CheckPair(Label::kNeu, Label::kCon).empty());
  CHECK(CheckPair(Label::kCon, Label::kNeu) == V{Violation::kBuC, Violation::kTdN});
  CHECK(CheckPair(Label::kNeu, Label::kEnt) == V{Violation::kBuN, Violation::kTdE});
  CHECK_THROWS_AS(CheckPair(KeLabel::kOptOut, KeLabel::kEnt), OptOutInPair);
  CHECK_THROWS_AS(CheckPair(KeLabel::kEnt, KeLabel::kOptOut), OptOutInPair);
}

TEST_CASE("check_pair is consistent exactly when parent severity >= child severity") {
  int consistent = 0;
  for (Label child : kAll) {
    for (Label parent : kAll) {
      const bool ok = CheckPair(child, parent).empty();
      CHECK(ok == (Severity(parent) >= Severity(child)));
      consistent += ok;
    }
  }
  CHECK(consistent == 6);
}

TEST_CASE("structural accuracy") {
  const std::vector<ke::KePair> pairs = {{3, 0}, {3, 1}, {4, 2}};
  std::vector<Label> labels(5, Label::kEnt);
  CHECK(StructuralAccuracy(std::span<const Label>(labels), pairs) == 1.0);
  labels[2] = Label::kCon;  // its parent 4 stays ent
  CHECK(StructuralAccuracy(std::span<const Label>(labels), pairs) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(StructuralAccuracy(std::span<const Label>(labels), {}) == 1.0);

  // Copying one label everywhere never violates anything.
  for (Label l : kAll) {
    std::vector<Label> same(5, l);
    CHECK(StructuralAccuracy(std::span<const Label>(same), pairs) == 1.0);
  }
  std::vector<KeLabel> with_opt(5, KeLabel::kEnt);
  with_opt[0] = KeLabel::kOptOut;
  CHECK_THROWS_AS(StructuralAccuracy(std::span<const KeLabel>(with_opt), pairs), OptOutInPair);
}

TEST_CASE("derive sample label") {
  const std::vector<Label> a = {Label::kEnt, Label::kEnt, Label::kEnt};
  const std::vector<Label> b = {Label::kEnt, Label::kNeu};
  const std::vector<Label> c = {Label::kNeu, Label::kCon, Label::kEnt};
  CHECK(DeriveSampleLabel(std::span<const Label>(a)) == Label::kEnt);
  CHECK(DeriveSampleLabel(std::span<const Label>(b)) == Label::kNeu);
  CHECK(DeriveSampleLabel(std::span<const Label>(c)) == Label::kCon);
  CHECK_THROWS_AS(DeriveSampleLabel(std::span<const Label>()), EmptyLabelSet);
}

TEST_CASE("mil admissibility") {
  using L = std::vector<Label>;
  auto adm = [](Label s, const L& l) { return MilAdmissible(s, std::span<const Label>(l)); };
  CHECK(adm(Label::kEnt, {Label::kEnt, Label::kEnt}));
  CHECK_FALSE(adm(Label::kEnt, {Label::kEnt, Label::kNeu}));
  CHECK_FALSE(adm(Label::kNeu, {Label::kEnt, Label::kEnt}));
  CHECK_FALSE(adm(Label::kCon, {Label::kNeu, Label::kNeu}));
  CHECK_THROWS_AS(adm(Label::kEnt, {}), EmptyLabelSet);
}

// Brute force over every label sequence of length 1..4.
TEST_CASE("derive/admissible round trip over all multisets up to size 4") {
  int cases = 0;
  for (int n = 1; n <= 4; ++n) {
    int total = 1;
    for (int i = 0; i < n; ++i) total *= 3;
    for (int code = 0; code < total; ++code) {
      std::vector<Label> labels;
      int c = code;
      for (int i = 0; i < n; ++i, c /= 3) labels.push_back(static_cast<Label>(c % 3));
      const auto span = std::span<const Label>(labels);
      const SampleLabel derived = DeriveSampleLabel(span);
      CHECK(MilAdmissible(derived, span));
      for (Label other : kAll) {
        if (other != derived) CHECK_FALSE(MilAdmissible(other, span));
      }
      // Independent reading of the three implications.
      const bool any_con = std::count(labels.begin(), labels.end(), Label::kCon) > 0;
      const bool any_neu = std::count(labels.begin(), labels.end(), Label::kNeu) > 0;
      CHECK((derived == Label::kCon) == any_con);
      CHECK((derived == Label::kNeu) == (!any_con && any_neu));

      std::vector<Label> perm = labels;
      std::reverse(perm.begin(), perm.end());
      perm.push_back(labels.front());
      CHECK(DeriveSampleLabel(std::span<const Label>(perm)) == derived);
      if (n == 4) ++cases;
    }
  }
  CHECK(cases == 81);
}

TEST_CASE("zero violations implies severity non-decreasing child to parent") {
  std::mt19937 rng(7);
  const std::vector<ke::KePair> pairs = {{3, 0}, {3, 1}, {4, 1}, {4, 2}};
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Label> l(5);
    for (Label& x : l) x = static_cast<Label>(rng() % 3);
    if (StructuralAccuracy(std::span<const Label>(l), pairs) == 1.0) {
      for (const ke::KePair& p : pairs) CHECK(Severity(l[p.parent]) >= Severity(l[p.child]));
    }
  }
}

TEST_CASE("label text") {
  CHECK(ParseKeLabel("optout") == KeLabel::kOptOut);
  CHECK(ParseLabel("optout") == std::nullopt);
  CHECK(std::string(ToString(Label::kNeu)) == "neu");
  CHECK(JoinViolations({Violation::kBuC, Violation::kTdN}) == "BU-C,TD-N");
}
