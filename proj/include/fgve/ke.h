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

// Knowledge elements: the nodes and (head, role, tail) tuples of an AMR
// graph, the tuple -> endpoint pairs that structural constraints range
// over, and the mapping from each element to its linearized tokens.

#ifndef FGVE_KE_H_
#define FGVE_KE_H_

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "fgve/penman.h"

namespace fgve::ke {

enum class KeKind { kNode, kTuple };

struct KnowledgeElement {
  int id = 0;
  KeKind kind = KeKind::kNode;
  int node = -1;  // kNode only
  int head = -1;  // kTuple only
  int edge = -1;
  int tail = -1;

  bool is_node() const { return kind == KeKind::kNode; }
  bool is_tuple() const { return kind == KeKind::kTuple; }
};

struct KePair {
  int parent = 0;  // tuple KE
  int child = 0;   // node KE
};

// Node KEs take ids [0, |V|) in node order; tuple KEs follow in edge order,
// so a pair's child id is always below its parent id.
struct KeStructure {
  std::vector<KnowledgeElement> kes;
  std::vector<KePair> pairs;
  std::uint64_t source_fingerprint = 0;

  int num_nodes() const;
  int NodeKe(int node) const { return node; }
  // Pair indices whose parent is `tuple_ke`.
  std::vector<int> PairsOfTuple(int tuple_ke) const;
};

KeStructure ExtractKes(const penman::AmrGraph& graph);

// Textual KE id used in annotation and prediction files:
//   "node:<var-or-#index>" and "tuple:<headvar>:<role>:<tailvar-or-#index>".
std::string KeTextId(const penman::AmrGraph& graph, const KnowledgeElement& ke);
std::vector<std::string> KeTextIds(const penman::AmrGraph& graph, const KeStructure& ks);

class MismatchedProvenance : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Sorted token indices per KE. A node KE owns every var mention, its concept
// token and (for constants) the constant token; a tuple KE owns its role
// token plus the spans of both endpoints.
struct KeTokenMap {
  std::vector<std::vector<int>> spans;
};

KeTokenMap KeTokenSpans(const penman::LinearizedAmr& lin, const KeStructure& ks);

// KEs with a token at or beyond `max_len`; these are excluded from the
// KE-level and structural losses.
std::set<int> TruncationMask(const KeTokenMap& map, std::size_t max_len);

}  // namespace fgve::ke

#endif  // FGVE_KE_H_
