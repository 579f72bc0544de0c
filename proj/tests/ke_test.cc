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

#include "fgve/ke.h"

#include <set>

#include "corpus.h"
#include "doctest.h"

using namespace fgve;
using fgve::testing::kSleepDog;
using fgve::testing::kWantGo;

namespace {

struct Prepared {
  penman::AmrGraph graph;
  penman::LinearizedAmr lin;
  ke::KeStructure ks;
  ke::KeTokenMap map;
};

Prepared Prepare(const std::string& text) {
  Prepared p;
  p.graph = penman::Simplify(penman::ParsePenman(text));
  p.lin = penman::LinearizeDfs(p.graph);
  p.ks = ke::ExtractKes(p.graph);
  p.map = ke::KeTokenSpans(p.lin, p.ks);
  return p;
}

std::set<std::string> SpanTexts(const Prepared& p, int ke) {
  std::set<std::string> out;
  for (int i : p.map.spans[ke]) out.insert(p.lin.tokens[i].text);
  return out;
}

}  // namespace

TEST_CASE("extract: sleep/dog") {
  const Prepared p = Prepare(kSleepDog);
  REQUIRE(p.ks.kes.size() == 3);
  CHECK(p.ks.kes[0].is_node());
  CHECK(p.ks.kes[1].is_node());
  CHECK(p.ks.kes[2].is_tuple());
  CHECK(p.ks.pairs.size() == 2);
  const auto ids = ke::KeTextIds(p.graph, p.ks);
  CHECK(ids == std::vector<std::string>{"node:z0", "node:z1", "tuple:z0::ARG0:z1"});
}

TEST_CASE("extract: single node and re-entrancy counts") {
  const Prepared one = Prepare("(z0 / dog)");
  CHECK(one.ks.kes.size() == 1);
  CHECK(one.ks.pairs.empty());

  const Prepared re = Prepare(kWantGo);
  CHECK(re.ks.kes.size() == 6);
  CHECK(re.ks.pairs.size() == 6);
}

TEST_CASE("constant KE ids use the node index") {
  const Prepared p = Prepare("(z0 / child :quant 2)");
  const auto ids = ke::KeTextIds(p.graph, p.ks);
  CHECK(ids == std::vector<std::string>{"node:z0", "node:#1", "tuple:z0::quant:#1"});
}

TEST_CASE("token spans") {
  const Prepared p = Prepare(kSleepDog);
  CHECK(SpanTexts(p, 1) == std::set<std::string>{"z1", "dog"});
  CHECK(p.map.spans[1] == std::vector<int>{5, 6});
  CHECK(SpanTexts(p, 2) == std::set<std::string>{"z0", "sleep", ":ARG0", "z1", "dog"});
  CHECK(p.map.spans[2].size() == 1 + p.map.spans[0].size() + p.map.spans[1].size());

  const Prepared re = Prepare(kWantGo);
  // z1 is mentioned twice: once with its concept, once bare.
  int mentions = 0;
  for (int i : re.map.spans[1]) mentions += re.lin.tokens[i].text == "z1";
  CHECK(mentions == 2);
  CHECK(re.map.spans[1].size() == 3);
}

TEST_CASE("mismatched provenance") {
  const Prepared a = Prepare(kSleepDog);
  const Prepared b = Prepare(kWantGo);
  CHECK_THROWS_AS(ke::KeTokenSpans(a.lin, b.ks), ke::MismatchedProvenance);
}

TEST_CASE("truncation mask") {
  const Prepared p = Prepare(kSleepDog);
  CHECK(ke::TruncationMask(p.map, 9).empty());
  CHECK(ke::TruncationMask(p.map, 100).empty());
  CHECK(ke::TruncationMask(p.map, 0) == std::set<int>{0, 1, 2});
  CHECK(ke::TruncationMask(p.map, 4) == std::set<int>{1, 2});
}

TEST_CASE("corpus-wide structure invariants") {
  for (const std::string& rec : fgve::testing::CorpusRecords()) {
    CAPTURE(rec);
    const Prepared p = Prepare(rec);
    const std::size_t v = p.graph.nodes.size();
    const std::size_t e = p.graph.edges.size();
    CHECK(p.ks.kes.size() == v + e);
    CHECK(p.ks.pairs.size() == 2 * e);

    std::vector<int> pairs_per_tuple(p.ks.kes.size(), 0);
    for (const ke::KePair& pr : p.ks.pairs) {
      CHECK(pr.child < pr.parent);
      const ke::KnowledgeElement& t = p.ks.kes[pr.parent];
      REQUIRE(t.is_tuple());
      CHECK((pr.child == t.head || pr.child == t.tail));
      ++pairs_per_tuple[pr.parent];
    }
    for (const ke::KnowledgeElement& k : p.ks.kes) {
      if (k.is_tuple()) CHECK(pairs_per_tuple[k.id] == 2);
    }

    // Every var/concept/constant token belongs to exactly one node KE.
    std::vector<int> owners(p.lin.tokens.size(), 0);
    for (std::size_t k = 0; k < v; ++k) {
      for (int i : p.map.spans[k]) ++owners[i];
    }
    for (std::size_t i = 0; i < p.lin.tokens.size(); ++i) {
      const auto kind = p.lin.tokens[i].kind;
      const bool content = kind == penman::TokenKind::kVar ||
                           kind == penman::TokenKind::kConcept ||
                           kind == penman::TokenKind::kConstant;
      CHECK(owners[i] == (content ? 1 : 0));
    }

    const auto ids = ke::KeTextIds(p.graph, p.ks);
    CHECK(std::set<std::string>(ids.begin(), ids.end()).size() == ids.size());
  }
}
