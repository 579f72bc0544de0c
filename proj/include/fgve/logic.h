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

// Label algebra for fine-grained entailment: the three logical classes,
// sample-label derivation from KE labels, and parent/child consistency.

#ifndef FGVE_LOGIC_H_
#define FGVE_LOGIC_H_

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fgve/ke.h"

namespace fgve {

// Three-way class shared by sample labels and KE predictions. The numeric
// value is both the logit index and the severity.
enum class Label : int { kEnt = 0, kNeu = 1, kCon = 2 };
using SampleLabel = Label;

// Gold KE annotation; kOptOut never appears in predictions.
enum class KeLabel : int { kEnt = 0, kNeu = 1, kCon = 2, kOptOut = 3 };

inline constexpr int kNumClasses = 3;

inline int Severity(Label l) { return static_cast<int>(l); }
inline KeLabel ToKeLabel(Label l) { return static_cast<KeLabel>(static_cast<int>(l)); }
// Throws std::invalid_argument for kOptOut.
Label ToLabel(KeLabel l);

const char* ToString(Label l);  // "ent" | "neu" | "con"
const char* ToString(KeLabel l);
std::optional<Label> ParseLabel(std::string_view s);
std::optional<KeLabel> ParseKeLabel(std::string_view s);

namespace logic {

enum class Violation { kBuC, kBuN, kTdE, kTdN };
inline constexpr Violation kAllViolations[] = {Violation::kBuC, Violation::kBuN,
                                               Violation::kTdE, Violation::kTdN};

const char* ToString(Violation v);  // "BU-C" ...

class OptOutInPair : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EmptyLabelSet : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Violated rules for a (node child, tuple parent) label pair, in the order
// BU-C, BU-N, TD-E, TD-N.
std::vector<Violation> CheckPair(KeLabel child, KeLabel parent);
std::vector<Violation> CheckPair(Label child, Label parent);
std::string JoinViolations(const std::vector<Violation>& vs);

// Fraction of pairs without violations; 1 when there are no pairs. Every
// pair member must be labeled and not opted out.
double StructuralAccuracy(std::span<const KeLabel> labels, std::span<const ke::KePair> pairs);
double StructuralAccuracy(std::span<const Label> labels, std::span<const ke::KePair> pairs);

// Con if any KE is Con, else Neu if any is Neu, else Ent.
SampleLabel DeriveSampleLabel(std::span<const KeLabel> labels);
SampleLabel DeriveSampleLabel(std::span<const Label> labels);

bool MilAdmissible(SampleLabel sample, std::span<const KeLabel> labels);
bool MilAdmissible(SampleLabel sample, std::span<const Label> labels);

}  // namespace logic
}  // namespace fgve

#endif  // FGVE_LOGIC_H_
