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

#include "fgve/penman.h"

#include <algorithm>
#include <cctype>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

namespace fgve::penman {

namespace {

enum class LexKind { kOpen, kClose, kSlash, kRole, kString, kSymbol, kEnd };

struct Lexeme {
  LexKind kind;
  std::string text;
  std::size_t pos;
};

bool IsDelimiter(char c) {
  return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' ||
         c == '/';
}

// Drops a trailing alignment marker such as "~e.3" or "~3,4".
std::string StripAlignment(std::string s) {
  const auto tilde = s.rfind('~');
  if (tilde != std::string::npos && tilde > 0) s.erase(tilde);
  return s;
}

std::vector<Lexeme> Lex(std::string_view text) {
  std::vector<Lexeme> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '(') {
      out.push_back({LexKind::kOpen, "(", i++});
    } else if (c == ')') {
      out.push_back({LexKind::kClose, ")", i++});
    } else if (c == '/') {
      out.push_back({LexKind::kSlash, "/", i++});
    } else if (c == '"') {
      const std::size_t start = i++;
      while (i < text.size() && text[i] != '"') {
        if (text[i] == '\\' && i + 1 < text.size()) ++i;
        ++i;
      }
      if (i >= text.size()) {
        throw ParseError(ParseErrorKind::kUnexpectedToken, start,
                         "unterminated string literal");
      }
      ++i;
      std::string s(text.substr(start, i - start));
      // Alignment suffix after a closing quote.
      if (i < text.size() && text[i] == '~') {
        while (i < text.size() && !IsDelimiter(text[i])) ++i;
      }
      out.push_back({LexKind::kString, std::move(s), start});
    } else {
      const std::size_t start = i;
      while (i < text.size() && !IsDelimiter(text[i])) ++i;
      std::string s(text.substr(start, i - start));
      const LexKind kind = s[0] == ':' ? LexKind::kRole : LexKind::kSymbol;
      if (kind == LexKind::kSymbol) s = StripAlignment(std::move(s));
      out.push_back({kind, std::move(s), start});
    }
  }
  out.push_back({LexKind::kEnd, "", text.size()});
  return out;
}

bool LooksLikeVariable(const std::string& s) {
  if (s.empty() || !std::islower(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin() + 1, s.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

class Parser {
 public:
  explicit Parser(std::string_view text) : lex_(Lex(text)) {
    // Variables may be referenced before the node that introduces them.
    for (std::size_t i = 0; i + 1 < lex_.size(); ++i) {
      if (lex_[i].kind == LexKind::kOpen && lex_[i + 1].kind == LexKind::kSymbol) {
        declared_.insert(lex_[i + 1].text);
      }
    }
  }

  AmrGraph Run() {
    if (Peek().kind == LexKind::kEnd) {
      throw ParseError(ParseErrorKind::kUnexpectedToken, 0, "empty input");
    }
    if (Peek().kind != LexKind::kOpen) {
      throw ParseError(ParseErrorKind::kUnexpectedToken, Peek().pos,
                       "expected '(' but found '" + Peek().text + "'");
    }
    graph_.root = ParseNode();
    const Lexeme& rest = Peek();
    if (rest.kind == LexKind::kClose) {
      throw ParseError(ParseErrorKind::kUnbalancedParens, rest.pos,
                       "unmatched ')'");
    }
    if (rest.kind != LexKind::kEnd) {
      throw ParseError(ParseErrorKind::kUnexpectedToken, rest.pos,
                       "trailing input '" + rest.text + "'");
    }
    for (const auto& p : pending_) Attach(p.edge, vars_.at(p.var), p.pos);
    return std::move(graph_);
  }

 private:
  const Lexeme& Peek() const { return lex_[at_]; }
  const Lexeme& Next() { return lex_[at_ < lex_.size() - 1 ? at_++ : at_]; }

  int ParseNode() {
    const Lexeme& open = Next();  // '('
    const Lexeme& var = Next();
    if (var.kind == LexKind::kEnd) {
      throw ParseError(ParseErrorKind::kUnbalancedParens, open.pos, "unclosed '('");
    }
    if (var.kind != LexKind::kSymbol) {
      throw ParseError(ParseErrorKind::kUnexpectedToken, var.pos,
                       "expected variable but found '" + var.text + "'");
    }
    if (vars_.count(var.text)) {
      throw ParseError(ParseErrorKind::kDuplicateVariable, var.pos,
                       "variable '" + var.text + "' defined twice");
    }
    if (Peek().kind != LexKind::kSlash) {
      throw ParseError(ParseErrorKind::kEmptyConcept, Peek().pos,
                       "node '" + var.text + "' has no concept");
    }
    Next();
    const Lexeme& head = Peek();
    if (head.kind != LexKind::kSymbol && head.kind != LexKind::kString) {
      throw ParseError(ParseErrorKind::kEmptyConcept, head.pos,
                       "node '" + var.text + "' has an empty concept");
    }
    Next();

    const int id = AddNode(var.text, head.text, false);
    vars_.emplace(var.text, id);

    while (Peek().kind == LexKind::kRole) {
      const Lexeme role = Next();
      const Lexeme& target = Peek();
      const bool drop = role.text == ":wiki";
      if (target.kind == LexKind::kOpen) {
        const int edge = ReserveEdge(id, role.text);
        FinishEdge(edge, ParseNode(), target.pos);
      } else if (target.kind == LexKind::kSymbol || target.kind == LexKind::kString) {
        Next();
        if (drop) continue;
        const int edge = ReserveEdge(id, role.text);
        FinishEdge(edge, ResolveLeaf(target), target.pos);
      } else if (target.kind == LexKind::kEnd) {
        throw ParseError(ParseErrorKind::kUnbalancedParens, open.pos, "unclosed '('");
      } else {
        throw ParseError(ParseErrorKind::kUnexpectedToken, target.pos,
                         "role '" + role.text + "' has no target");
      }
    }
    const Lexeme& close = Peek();
    if (close.kind == LexKind::kEnd) {
      throw ParseError(ParseErrorKind::kUnbalancedParens, open.pos, "unclosed '('");
    }
    if (close.kind != LexKind::kClose) {
      throw ParseError(ParseErrorKind::kUnexpectedToken, close.pos,
                       "unexpected '" + close.text + "'");
    }
    Next();
    return id;
  }

  int ResolveLeaf(const Lexeme& leaf) {
    if (leaf.kind == LexKind::kSymbol) {
      if (declared_.count(leaf.text)) {
        auto it = vars_.find(leaf.text);
        if (it != vars_.end()) return it->second;
        // Forward reference: the node is introduced later in the text.
        pending_.push_back({static_cast<int>(graph_.edges.size()) - 1, leaf.text, leaf.pos});
        return -1;
      }
      if (LooksLikeVariable(leaf.text)) {
        throw ParseError(ParseErrorKind::kUndefinedVariableReference, leaf.pos,
                         "undefined variable '" + leaf.text + "'");
      }
    }
    return AddNode(std::nullopt, leaf.text, true);
  }

  int AddNode(std::optional<std::string> var, std::string concept_text, bool constant) {
    AmrNode n;
    n.id = static_cast<int>(graph_.nodes.size());
    n.var = std::move(var);
    n.concept_name = std::move(concept_text);
    n.is_constant = constant;
    graph_.nodes.push_back(std::move(n));
    return graph_.nodes.back().id;
  }

  int ReserveEdge(int head, const std::string& role) {
    AmrEdge e;
    e.id = static_cast<int>(graph_.edges.size());
    e.head = head;
    e.role = role;
    e.tail = -1;
    graph_.edges.push_back(e);
    return e.id;
  }

  void FinishEdge(int edge, int tail, std::size_t pos) {
    if (tail < 0) return;  // resolved after the whole expression is read
    Attach(edge, tail, pos);
  }

  void Attach(int edge, int tail, std::size_t pos) {
    AmrEdge& e = graph_.edges[edge];
    if (tail == e.head) {
      throw ParseError(ParseErrorKind::kSelfLoop, pos,
                       "self-loop on '" + graph_.NodeKey(e.head) + "' via " + e.role);
    }
    if (!triples_.insert({e.head, e.role, tail}).second) {
      throw ParseError(ParseErrorKind::kDuplicateEdge, pos,
                       "duplicate edge " + graph_.NodeKey(e.head) + " " + e.role + " " +
                           graph_.NodeKey(tail));
    }
    e.tail = tail;
  }

  struct Pending {
    int edge;
    std::string var;
    std::size_t pos;
  };

  std::vector<Lexeme> lex_;
  std::size_t at_ = 0;
  AmrGraph graph_;
  std::unordered_set<std::string> declared_;
  std::unordered_map<std::string, int> vars_;
  std::set<std::tuple<int, std::string, int>> triples_;
  std::vector<Pending> pending_;
};

void RenderNode(const AmrGraph& g, int node, std::vector<bool>& seen, std::string& out) {
  const AmrNode& n = g.nodes[node];
  if (n.is_constant) {
    out += n.concept_name;
    return;
  }
  if (seen[node]) {
    out += *n.var;
    return;
  }
  seen[node] = true;
  out += '(';
  out += *n.var;
  out += " / ";
  out += n.concept_name;
  for (int e : g.OutEdges(node)) {
    out += ' ';
    out += g.edges[e].role;
    out += ' ';
    RenderNode(g, g.edges[e].tail, seen, out);
  }
  out += ')';
}

void LinearizeNode(const AmrGraph& g, int node, std::vector<bool>& seen,
                   std::vector<Token>& out) {
  const AmrNode& n = g.nodes[node];
  if (n.is_constant) {
    out.push_back({n.concept_name, TokenKind::kConstant, node});
    return;
  }
  if (seen[node]) {
    out.push_back({*n.var, TokenKind::kVar, node});
    return;
  }
  seen[node] = true;
  out.push_back({"(", TokenKind::kOpenParen, node});
  out.push_back({*n.var, TokenKind::kVar, node});
  out.push_back({n.concept_name, TokenKind::kConcept, node});
  for (int e : g.OutEdges(node)) {
    out.push_back({g.edges[e].role, TokenKind::kRole, e});
    LinearizeNode(g, g.edges[e].tail, seen, out);
  }
  out.push_back({")", TokenKind::kCloseParen, node});
}

void RequireAllVisited(const std::vector<bool>& seen, const AmrGraph& g) {
  for (const AmrNode& n : g.nodes) {
    if (!n.is_constant && !seen[n.id]) {
      throw std::invalid_argument("node " + g.NodeKey(n.id) +
                                  " is not reachable from the root along edges");
    }
  }
}

}  // namespace

std::vector<int> AmrGraph::OutEdges(int node) const {
  std::vector<int> out;
  for (const AmrEdge& e : edges) {
    if (e.head == node) out.push_back(e.id);
  }
  return out;
}

std::uint64_t AmrGraph::Fingerprint() const {
  // FNV-1a
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
  };
  mix(std::to_string(root));
  for (const AmrNode& n : nodes) {
    mix(n.var.value_or("#"));
    mix(n.concept_name);
  }
  for (const AmrEdge& e : edges) {
    mix(std::to_string(e.head));
    mix(e.role);
    mix(std::to_string(e.tail));
  }
  return h;
}

std::string AmrGraph::NodeKey(int node) const {
  const AmrNode& n = nodes.at(node);
  return n.var ? *n.var : "#" + std::to_string(node);
}

const char* ToString(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::kUnbalancedParens: return "UnbalancedParens";
    case ParseErrorKind::kDuplicateVariable: return "DuplicateVariable";
    case ParseErrorKind::kUndefinedVariableReference: return "UndefinedVariableReference";
    case ParseErrorKind::kEmptyConcept: return "EmptyConcept";
    case ParseErrorKind::kSelfLoop: return "SelfLoop";
    case ParseErrorKind::kDuplicateEdge: return "DuplicateEdge";
    case ParseErrorKind::kUnexpectedToken: return "UnexpectedToken";
  }
  return "?";
}

const char* ToString(TokenKind kind) {
  switch (kind) {
    case TokenKind::kOpenParen: return "open-paren";
    case TokenKind::kCloseParen: return "close-paren";
    case TokenKind::kVar: return "var";
    case TokenKind::kConcept: return "concept";
    case TokenKind::kRole: return "role";
    case TokenKind::kConstant: return "constant";
  }
  return "?";
}

ParseError::ParseError(ParseErrorKind kind, std::size_t position, const std::string& detail)
    : std::runtime_error(std::string(ToString(kind)) + " at offset " +
                         std::to_string(position) + ": " + detail),
      kind_(kind),
      position_(position) {}

AmrGraph ParsePenman(std::string_view text) {
  return Parser(text).Run();
}

std::string SimplifyRole(std::string_view role) {
  static const std::regex kOp("^:op[0-9]+$");
  static const std::regex kSnt("^:snt[0-9]+$");
  const std::string r(role);
  if (std::regex_match(r, kOp)) return ":op";
  if (std::regex_match(r, kSnt)) return ":snt";
  return r;
}

std::string SimplifyConcept(std::string_view text) {
  static const std::regex kSense("-[0-9]{2,}$");
  std::string c(text);
  // Repeated so that the result never ends in a sense suffix.
  while (std::regex_search(c, kSense)) c = std::regex_replace(c, kSense, "");
  return c.empty() ? std::string(text) : c;
}

AmrGraph Simplify(const AmrGraph& graph) {
  AmrGraph out = graph;
  for (AmrNode& n : out.nodes) {
    if (!n.is_constant) n.concept_name = SimplifyConcept(n.concept_name);
  }
  for (AmrEdge& e : out.edges) e.role = SimplifyRole(e.role);
  return out;
}

std::string RenderPenman(const AmrGraph& graph) {
  std::string out;
  std::vector<bool> seen(graph.nodes.size(), false);
  RenderNode(graph, graph.root, seen, out);
  RequireAllVisited(seen, graph);
  return out;
}

std::string LinearizedAmr::Text() const {
  std::string out;
  for (const Token& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t.text;
  }
  return out;
}

LinearizedAmr LinearizeDfs(const AmrGraph& graph) {
  LinearizedAmr lin;
  lin.source_fingerprint = graph.Fingerprint();
  std::vector<bool> seen(graph.nodes.size(), false);
  LinearizeNode(graph, graph.root, seen, lin.tokens);
  RequireAllVisited(seen, graph);
  return lin;
}

bool Isomorphic(const AmrGraph& a, const AmrGraph& b) {
  auto signature = [](const AmrGraph& g) {
    auto key = [&g](int node) {
      const AmrNode& n = g.nodes[node];
      return n.is_constant ? "\x01" + n.concept_name : *n.var;
    };
    std::multiset<std::string> sig;
    sig.insert("root|" + key(g.root));
    for (const AmrNode& n : g.nodes) {
      sig.insert(n.is_constant ? "const|" + n.concept_name : "node|" + *n.var + "|" + n.concept_name);
    }
    for (const AmrEdge& e : g.edges) {
      sig.insert("edge|" + key(e.head) + "|" + e.role + "|" + key(e.tail));
    }
    return sig;
  };
  return a.nodes.size() == b.nodes.size() && a.edges.size() == b.edges.size() &&
         signature(a) == signature(b);
}

std::string DumpGraph(const AmrGraph& graph) {
  std::ostringstream out;
  out << "# root " << graph.NodeKey(graph.root) << "\n";
  out << "# nodes\n";
  for (const AmrNode& n : graph.nodes) {
    out << n.id << '\t' << graph.NodeKey(n.id) << '\t' << n.concept_name << '\t'
        << (n.is_constant ? "const" : "var") << '\n';
  }
  out << "# triples\n";
  for (const AmrEdge& e : graph.edges) {
    out << graph.NodeKey(e.head) << ' ' << e.role << ' ' << graph.NodeKey(e.tail) << '\n';
  }
  return out.str();
}

std::vector<std::string> ReadRecords(std::istream& in) {
  std::vector<std::string> records;
  std::string current;
  std::string line;
  auto flush = [&] {
    if (!current.empty()) records.push_back(std::move(current));
    current.clear();
  };
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
      flush();
      continue;
    }
    if (line[first] == '#') continue;
    if (!current.empty()) current += '\n';
    current += line;
  }
  flush();
  return records;
}

}  // namespace fgve::penman
