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

namespace fgve {

Label ToLabel(KeLabel l) {
  if (l == KeLabel::kOptOut) throw std::invalid_argument("opt-out is not a class label");
  return static_cast<Label>(static_cast<int>(l));
}

const char* ToString(Label l) {
  switch (l) {
    case Label::kEnt: return "ent";
    case Label::kNeu: return "neu";
    case Label::kCon: return "con";
  }
  return "?";
}

const char* ToString(KeLabel l) {
  return l == KeLabel::kOptOut ? "optout" : ToString(ToLabel(l));
}

std::optional<Label> ParseLabel(std::string_view s) {
  if (s == "ent") return Label::kEnt;
  if (s == "neu") return Label::kNeu;
  if (s == "con") return Label::kCon;
  return std::nullopt;
}

std::optional<KeLabel> ParseKeLabel(std::string_view s) {
  if (s == "optout") return KeLabel::kOptOut;
  if (auto l = ParseLabel(s)) return ToKeLabel(*l);
  return std::nullopt;
}

namespace logic {

const char* ToString(Violation v) {
  switch (v) {
    case Violation::kBuC: return "BU-C";
    case Violation::kBuN: return "BU-N";
    case Violation::kTdE: return "TD-E";
    case Violation::kTdN: return "TD-N";
  }
  return "?";
}

std::vector<Violation> CheckPair(Label child, Label parent) {
  std::vector<Violation> out;
  if (child == Label::kCon && parent != Label::kCon) out.push_back(Violation::kBuC);
  if (child == Label::kNeu && parent == Label::kEnt) out.push_back(Violation::kBuN);
  if (parent == Label::kEnt && child != Label::kEnt) out.push_back(Violation::kTdE);
  if (parent == Label::kNeu && child == Label::kCon) out.push_back(Violation::kTdN);
  return out;
}

std::vector<Violation> CheckPair(KeLabel child, KeLabel parent) {
  if (child == KeLabel::kOptOut || parent == KeLabel::kOptOut) {
    throw OptOutInPair("structural check on an opted-out KE");
  }
  return CheckPair(ToLabel(child), ToLabel(parent));
}

std::string JoinViolations(const std::vector<Violation>& vs) {
  std::string out;
  for (Violation v : vs) {
    if (!out.empty()) out += ',';
    out += ToString(v);
  }
  return out;
}

namespace {

template <typename L>
double StructuralAccuracyImpl(std::span<const L> labels, std::span<const ke::KePair> pairs) {
  if (pairs.empty()) return 1.0;
  std::size_t ok = 0;
  for (const ke::KePair& p : pairs) {
    if (static_cast<std::size_t>(p.parent) >= labels.size() ||
        static_cast<std::size_t>(p.child) >= labels.size()) {
      throw std::out_of_range("pair member has no label");
    }
    if (CheckPair(labels[p.child], labels[p.parent]).empty()) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(pairs.size());
}

template <typename L>
SampleLabel DeriveImpl(std::span<const L> labels) {
  if (labels.empty()) throw EmptyLabelSet("cannot derive a sample label from no KEs");
  int worst = 0;
  for (L l : labels) {
    const int v = static_cast<int>(l);
    if (v > 2) throw std::invalid_argument("opt-out labels must be removed first");
    worst = std::max(worst, v);
  }
  return static_cast<SampleLabel>(worst);
}

}  // namespace

double StructuralAccuracy(std::span<const KeLabel> labels, std::span<const ke::KePair> pairs) {
  return StructuralAccuracyImpl(labels, pairs);
}
double StructuralAccuracy(std::span<const Label> labels, std::span<const ke::KePair> pairs) {
  return StructuralAccuracyImpl(labels, pairs);
}

SampleLabel DeriveSampleLabel(std::span<const KeLabel> labels) { return DeriveImpl(labels); }
SampleLabel DeriveSampleLabel(std::span<const Label> labels) { return DeriveImpl(labels); }

bool MilAdmissible(SampleLabel sample, std::span<const KeLabel> labels) {
  return DeriveSampleLabel(labels) == sample;
}
bool MilAdmissible(SampleLabel sample, std::span<const Label> labels) {
  return DeriveSampleLabel(labels) == sample;
}

}  // namespace logic
}  // namespace fgve
