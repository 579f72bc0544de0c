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

// PENMAN-notation AMR graphs: parsing, simplification, depth-first
// linearization with token provenance, and canonical rendering.

#ifndef FGVE_PENMAN_H_
#define FGVE_PENMAN_H_

#include <cstdint>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fgve::penman {

struct AmrNode {
  int id = 0;
  std::optional<std::string> var;  // absent iff is_constant
  std::string concept_name;
  bool is_constant = false;
};

struct AmrEdge {
  int id = 0;
  int head = 0;
  std::string role;  // always starts with ':'
  int tail = 0;
};

// Nodes and edges are numbered in source (pre-)order. For a parsed graph
// every non-root node is the tail of at least one edge, so a directed walk
// from the root reaches every node.
struct AmrGraph {
  std::vector<AmrNode> nodes;
  std::vector<AmrEdge> edges;
  int root = 0;

  // Outgoing edge ids of `node` in source order.
  std::vector<int> OutEdges(int node) const;
  // Stable content hash; two graphs with identical nodes, edges and root
  // share a fingerprint.
  std::uint64_t Fingerprint() const;
  // "z0" for variable nodes, "#3" for constants.
  std::string NodeKey(int node) const;
};

enum class ParseErrorKind {
  kUnbalancedParens,
  kDuplicateVariable,
  kUndefinedVariableReference,
  kEmptyConcept,
  kSelfLoop,
  kDuplicateEdge,
  kUnexpectedToken,
};

const char* ToString(ParseErrorKind kind);

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, std::size_t position, const std::string& detail);

  ParseErrorKind kind() const { return kind_; }
  // Byte offset of the offending token in the input text.
  std::size_t position() const { return position_; }

 private:
  ParseErrorKind kind_;
  std::size_t position_;
};

// Parses one PENMAN expression. Whitespace (including newlines) separates
// tokens; alignment markers ("~e.3") and :wiki relations are dropped.
// A bare symbol target resolves to the node carrying that variable if one
// exists anywhere in the expression; otherwise symbols shaped like a
// variable (a lowercase letter plus optional digits) are an undefined
// reference and everything else becomes a constant node.
AmrGraph ParsePenman(std::string_view text);

// Role and concept normalisation: ":opN" -> ":op", ":sntN" -> ":snt", and a
// trailing "-NN" sense suffix removed from non-constant concepts.
// Idempotent; node and edge numbering is preserved.
AmrGraph Simplify(const AmrGraph& graph);
std::string SimplifyRole(std::string_view role);
std::string SimplifyConcept(std::string_view text);

// Canonical PENMAN text. A node is written in full at its first depth-first
// visit and as a bare variable afterwards; constants are written bare.
std::string RenderPenman(const AmrGraph& graph);

enum class TokenKind { kOpenParen, kCloseParen, kVar, kConcept, kRole, kConstant };

const char* ToString(TokenKind kind);

struct Token {
  std::string text;
  TokenKind kind = TokenKind::kOpenParen;
  // Node id for parens/var/concept/constant tokens, edge id for roles.
  int origin = 0;
};

struct LinearizedAmr {
  std::vector<Token> tokens;
  std::uint64_t source_fingerprint = 0;

  // Tokens joined by single spaces.
  std::string Text() const;
};

// Depth-first linearization from the root, children in source order. The
// "/" separator is never emitted; a re-entrant reference emits only the
// variable token.
LinearizedAmr LinearizeDfs(const AmrGraph& graph);

// Equality up to node/edge renumbering: same root, the same multiset of
// (variable, concept) and constant nodes, and the same multiset of edge
// triples with constants compared by value.
bool Isomorphic(const AmrGraph& a, const AmrGraph& b);

// Line-oriented dump: a node table followed by "head role tail" triples.
std::string DumpGraph(const AmrGraph& graph);

// Splits a stream into PENMAN records separated by blank lines. Lines that
// start with '#' (metadata such as "# ::snt") are skipped.
std::vector<std::string> ReadRecords(std::istream& in);

}  // namespace fgve::penman

#endif  // FGVE_PENMAN_H_
