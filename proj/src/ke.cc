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

#include <algorithm>

namespace fgve::ke {

int KeStructure::num_nodes() const {
  return static_cast<int>(std::count_if(kes.begin(), kes.end(),
                                        [](const KnowledgeElement& k) { return k.is_node(); }));
}

std::vector<int> KeStructure::PairsOfTuple(int tuple_ke) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].parent == tuple_ke) out.push_back(static_cast<int>(i));
  }
  return out;
}

KeStructure ExtractKes(const penman::AmrGraph& graph) {
  KeStructure ks;
  ks.source_fingerprint = graph.Fingerprint();
  for (const penman::AmrNode& n : graph.nodes) {
    KnowledgeElement k;
    k.id = static_cast<int>(ks.kes.size());
    k.kind = KeKind::kNode;
    k.node = n.id;
    ks.kes.push_back(k);
  }
  for (const penman::AmrEdge& e : graph.edges) {
    KnowledgeElement k;
    k.id = static_cast<int>(ks.kes.size());
    k.kind = KeKind::kTuple;
    k.head = e.head;
    k.edge = e.id;
    k.tail = e.tail;
    ks.kes.push_back(k);
    ks.pairs.push_back({k.id, ks.NodeKe(e.head)});
    ks.pairs.push_back({k.id, ks.NodeKe(e.tail)});
  }
  return ks;
}

std::string KeTextId(const penman::AmrGraph& graph, const KnowledgeElement& ke) {
  if (ke.is_node()) return "node:" + graph.NodeKey(ke.node);
  return "tuple:" + graph.NodeKey(ke.head) + ":" + graph.edges.at(ke.edge).role + ":" +
         graph.NodeKey(ke.tail);
}

std::vector<std::string> KeTextIds(const penman::AmrGraph& graph, const KeStructure& ks) {
  std::vector<std::string> ids;
  ids.reserve(ks.kes.size());
  for (const KnowledgeElement& k : ks.kes) ids.push_back(KeTextId(graph, k));
  return ids;
}

KeTokenMap KeTokenSpans(const penman::LinearizedAmr& lin, const KeStructure& ks) {
  if (lin.source_fingerprint != ks.source_fingerprint) {
    throw MismatchedProvenance("linearization and KE structure come from different graphs");
  }
  const int num_nodes = ks.num_nodes();
  std::vector<std::vector<int>> node_spans(num_nodes);
  std::vector<int> role_token(ks.kes.size() - num_nodes, -1);
  for (std::size_t i = 0; i < lin.tokens.size(); ++i) {
    const penman::Token& t = lin.tokens[i];
    switch (t.kind) {
      case penman::TokenKind::kVar:
      case penman::TokenKind::kConcept:
      case penman::TokenKind::kConstant:
        node_spans.at(t.origin).push_back(static_cast<int>(i));
        break;
      case penman::TokenKind::kRole:
        role_token.at(t.origin) = static_cast<int>(i);
        break;
      default:
        break;
    }
  }

  KeTokenMap map;
  map.spans.resize(ks.kes.size());
  for (const KnowledgeElement& k : ks.kes) {
    std::vector<int>& span = map.spans[k.id];
    if (k.is_node()) {
      span = node_spans[k.node];
    } else {
      span.push_back(role_token.at(k.edge));
      span.insert(span.end(), node_spans[k.head].begin(), node_spans[k.head].end());
      span.insert(span.end(), node_spans[k.tail].begin(), node_spans[k.tail].end());
      std::sort(span.begin(), span.end());
    }
  }
  return map;
}

std::set<int> TruncationMask(const KeTokenMap& map, std::size_t max_len) {
  std::set<int> masked;
  for (std::size_t k = 0; k < map.spans.size(); ++k) {
    const auto& span = map.spans[k];
    if (!span.empty() && static_cast<std::size_t>(span.back()) >= max_len) {
      masked.insert(static_cast<int>(k));
    }
  }
  return masked;
}

}  // namespace fgve::ke
