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

// KE-level annotation files and the evaluation metrics computed on them.
//
// One JSON object per line:
//   {"sample_id": str, "hypothesis": str, "amr": str,
//    "sample_label": "ent|neu|con",
//    "ke_labels": [{"ke": str, "label": "ent|neu|con|optout"}]}
// KE ids follow ke::KeTextId on the simplified graph. Prediction files use
// the same shape without "optout".

#ifndef FGVE_EVAL_H_
#define FGVE_EVAL_H_

#include <array>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fgve/ke.h"
#include "fgve/logic.h"
#include "fgve/penman.h"

namespace fgve::eval {

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class UnresolvedKeId : public SchemaError {
 public:
  using SchemaError::SchemaError;
};
class GoldInconsistency : public std::runtime_error {
 public:
  GoldInconsistency(const std::string& sample_id, const std::string& rule,
                    const std::string& detail);
  const std::string& sample_id() const { return sample_id_; }
  const std::string& rule() const { return rule_; }

 private:
  std::string sample_id_;
  std::string rule_;
};
class MissingPrediction : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AnnotatedSample {
  std::string sample_id;
  std::string hypothesis;
  std::string amr;
  SampleLabel sample_label = Label::kEnt;
  penman::AmrGraph graph;  // simplified
  ke::KeStructure kes;
  std::vector<std::string> ke_ids;
  // Indexed by KE id; nullopt where the file gives no label.
  std::vector<std::optional<KeLabel>> labels;
  // Gold-consistency problems found while loading (lenient mode).
  std::vector<std::string> issues;

  bool has_opt_out() const;
  // Builds graph, KEs and ids from `amr`; labels start empty.
  static AnnotatedSample FromAmr(std::string sample_id, std::string hypothesis,
                                 std::string amr, SampleLabel label);
};

enum class FileKind { kGold, kPrediction };

struct LoadOptions {
  FileKind kind = FileKind::kGold;
  // Gold only: throw GoldInconsistency on the first violation instead of
  // recording it in AnnotatedSample::issues.
  bool strict = true;
};

std::vector<AnnotatedSample> ReadAnnotations(std::istream& in, const LoadOptions& opts);
std::vector<AnnotatedSample> LoadAnnotations(const std::string& path, const LoadOptions& opts);

// Serialises one record (single line, no trailing newline).
std::string ToJsonLine(const AnnotatedSample& s);
void WriteAnnotations(const std::string& path, const std::vector<AnnotatedSample>& samples);

// Gold rules: every KE labeled; non-opt-out labels MIL-admissible against
// the sample label; no structural violation among non-opt-out pairs.
// Returns "<rule>: <detail>" strings, empty when consistent.
std::vector<std::string> GoldIssues(const AnnotatedSample& s);

struct Cell {
  int correct = 0;
  int total = 0;
  // 1 for an empty cell.
  double accuracy() const { return total > 0 ? double(correct) / total : 1.0; }
};

struct MetricsReport {
  Cell ent, neu, con;   // by gold KE class
  Cell node, tuple;     // by KE kind
  Cell overall;
  Cell structure;       // consistent pairs / pairs
  int samples = 0;

  double acc_ent() const { return ent.accuracy(); }
  double acc_neu() const { return neu.accuracy(); }
  double acc_con() const { return con.accuracy(); }
  double acc_node() const { return node.accuracy(); }
  double acc_tup() const { return tuple.accuracy(); }
  double acc_overall() const { return overall.accuracy(); }
  double acc_struc() const { return structure.accuracy(); }
};

// Opt-out gold KEs are excluded everywhere; structural accuracy ranges over
// pairs whose members are both non-opt-out in the gold set. Predictions are
// matched by sample id and KE id.
MetricsReport KeMetrics(const std::vector<AnnotatedSample>& preds,
                        const std::vector<AnnotatedSample>& golds);

struct DistributionReport {
  // rows[gold sample label][KE label]; each non-empty row sums to 1.
  std::array<std::array<double, 3>, 3> rows{};
  std::array<int, 3> counts{};
};

// Per gold sample label, the normalized distribution of `source` KE labels
// over the non-opt-out gold KEs. `source` may be the gold set itself.
DistributionReport Distribution(const std::vector<AnnotatedSample>& source,
                                const std::vector<AnnotatedSample>& golds);

// Accuracy of the sample label derived from each sample's predicted KEs.
double SampleAccuracy(const std::vector<AnnotatedSample>& preds,
                      const std::vector<AnnotatedSample>& golds);

// Every KE predicted as the gold sample label.
std::vector<AnnotatedSample> CopySampleLabel(const std::vector<AnnotatedSample>& golds);

struct ViolationRecord {
  std::string sample_id;
  std::string parent;  // KE id, "*" for MIL records
  std::string child;
  std::string kinds;   // "BU-C,TD-E" or "MIL"
  std::string Line() const;
};

// MIL violations (derived label differs from the gold sample label) and
// structural violations among predicted labels.
std::vector<ViolationRecord> FindViolations(const std::vector<AnnotatedSample>& preds,
                                            const std::vector<AnnotatedSample>& golds);

std::string ToJson(const MetricsReport& m);
std::string ToJson(const DistributionReport& d);
// Aligned tables with the Acc_ent/neu/con | node/tup | overall | struc layout.
std::string FormatTable(const MetricsReport& m);
std::string FormatTable(const DistributionReport& d);

}  // namespace fgve::eval

#endif  // FGVE_EVAL_H_
