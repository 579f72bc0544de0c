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

#include "fgve/eval.h"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace fgve::eval {

using nlohmann::json;

namespace {

std::string Pct(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * x);
  return buf;
}

std::string RequireString(const json& obj, const char* key, int line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw SchemaError("line " + std::to_string(line) + ": field \"" + key +
                      "\" missing or not a string");
  }
  return it->get<std::string>();
}

AnnotatedSample ParseRecord(const json& obj, const LoadOptions& opts, int line) {
  if (!obj.is_object()) throw SchemaError("line " + std::to_string(line) + ": not an object");
  const std::string id = RequireString(obj, "sample_id", line);
  const std::string label_text = RequireString(obj, "sample_label", line);
  const auto label = ParseLabel(label_text);
  if (!label) {
    throw SchemaError("line " + std::to_string(line) + ": bad sample_label '" + label_text + "'");
  }
  const std::string hypothesis = obj.contains("hypothesis") && obj["hypothesis"].is_string()
                                     ? obj["hypothesis"].get<std::string>()
                                     : std::string();
  AnnotatedSample s;
  try {
    s = AnnotatedSample::FromAmr(id, hypothesis, RequireString(obj, "amr", line), *label);
  } catch (const penman::ParseError& e) {
    throw SchemaError("line " + std::to_string(line) + " (" + id + "): " + e.what());
  }

  std::unordered_map<std::string, int> index;
  for (std::size_t k = 0; k < s.ke_ids.size(); ++k) index.emplace(s.ke_ids[k], int(k));

  auto it = obj.find("ke_labels");
  if (it == obj.end()) return s;
  if (!it->is_array()) {
    throw SchemaError("line " + std::to_string(line) + ": ke_labels is not an array");
  }
  for (const json& entry : *it) {
    if (!entry.is_object()) {
      throw SchemaError("line " + std::to_string(line) + ": ke_labels entry is not an object");
    }
    const std::string ke = RequireString(entry, "ke", line);
    const std::string lt = RequireString(entry, "label", line);
    const auto kl = ParseKeLabel(lt);
    if (!kl || (opts.kind == FileKind::kPrediction && *kl == KeLabel::kOptOut)) {
      throw SchemaError("line " + std::to_string(line) + ": bad KE label '" + lt + "'");
    }
    auto found = index.find(ke);
    if (found == index.end()) {
      throw UnresolvedKeId("line " + std::to_string(line) + " (" + id + "): unknown KE id '" +
                           ke + "'");
    }
    if (s.labels[found->second]) {
      throw SchemaError("line " + std::to_string(line) + ": KE '" + ke + "' labeled twice");
    }
    s.labels[found->second] = *kl;
  }
  return s;
}

std::string RuleOf(const std::string& issue) { return issue.substr(0, issue.find(':')); }

// KE labels from `s` keyed by KE id.
std::unordered_map<std::string, KeLabel> LabelsById(const AnnotatedSample& s) {
  std::unordered_map<std::string, KeLabel> out;
  for (std::size_t k = 0; k < s.ke_ids.size(); ++k) {
    if (s.labels[k]) out.emplace(s.ke_ids[k], *s.labels[k]);
  }
  return out;
}

std::unordered_map<std::string, const AnnotatedSample*> ById(
    const std::vector<AnnotatedSample>& samples) {
  std::unordered_map<std::string, const AnnotatedSample*> out;
  for (const AnnotatedSample& s : samples) out.emplace(s.sample_id, &s);
  return out;
}

bool Counts(const std::optional<KeLabel>& gold) {
  return gold.has_value() && *gold != KeLabel::kOptOut;
}

// Predicted label per KE of `gold`, for every KE that counts.
std::vector<std::optional<Label>> Align(
    const AnnotatedSample& gold,
    const std::unordered_map<std::string, const AnnotatedSample*>& preds) {
  auto it = preds.find(gold.sample_id);
  if (it == preds.end()) throw MissingPrediction("no prediction for sample " + gold.sample_id);
  const auto by_id = LabelsById(*it->second);
  std::vector<std::optional<Label>> out(gold.labels.size());
  for (std::size_t k = 0; k < gold.labels.size(); ++k) {
    if (!Counts(gold.labels[k])) continue;
    auto p = by_id.find(gold.ke_ids[k]);
    if (p == by_id.end() || p->second == KeLabel::kOptOut) {
      throw MissingPrediction("no prediction for " + gold.sample_id + " " + gold.ke_ids[k]);
    }
    out[k] = ToLabel(p->second);
  }
  return out;
}

}  // namespace

GoldInconsistency::GoldInconsistency(const std::string& sample_id, const std::string& rule,
                                     const std::string& detail)
    : std::runtime_error("gold inconsistency (" + rule + ") in " + sample_id + ": " + detail),
      sample_id_(sample_id),
      rule_(rule) {}

bool AnnotatedSample::has_opt_out() const {
  for (const auto& l : labels) {
    if (l == KeLabel::kOptOut) return true;
  }
  return false;
}

AnnotatedSample AnnotatedSample::FromAmr(std::string sample_id, std::string hypothesis,
                                         std::string amr, SampleLabel label) {
  AnnotatedSample s;
  s.sample_id = std::move(sample_id);
  s.hypothesis = std::move(hypothesis);
  s.amr = std::move(amr);
  s.sample_label = label;
  s.graph = penman::Simplify(penman::ParsePenman(s.amr));
  s.kes = ke::ExtractKes(s.graph);
  s.ke_ids = ke::KeTextIds(s.graph, s.kes);
  s.labels.assign(s.kes.kes.size(), std::nullopt);
  return s;
}

std::vector<std::string> GoldIssues(const AnnotatedSample& s) {
  std::vector<std::string> issues;
  std::vector<KeLabel> counted;
  for (const auto& l : s.labels) {
    if (Counts(l)) counted.push_back(*l);
  }
  if (!counted.empty()) {
    const SampleLabel derived = logic::DeriveSampleLabel(std::span<const KeLabel>(counted));
    if (derived != s.sample_label) {
      issues.push_back(std::string("MIL: sample labeled ") + ToString(s.sample_label) +
                       " but KE labels imply " + ToString(derived));
    }
  }
  for (const ke::KePair& p : s.kes.pairs) {
    if (!Counts(s.labels[p.parent]) || !Counts(s.labels[p.child])) continue;
    for (logic::Violation v : logic::CheckPair(*s.labels[p.child], *s.labels[p.parent])) {
      issues.push_back(std::string(logic::ToString(v)) + ": parent " + s.ke_ids[p.parent] + " (" +
                       ToString(*s.labels[p.parent]) + ") child " + s.ke_ids[p.child] + " (" +
                       ToString(*s.labels[p.child]) + ")");
    }
  }
  return issues;
}

std::vector<AnnotatedSample> ReadAnnotations(std::istream& in, const LoadOptions& opts) {
  std::vector<AnnotatedSample> out;
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw SchemaError("line " + std::to_string(line) + ": " + e.what());
    }
    AnnotatedSample s = ParseRecord(obj, opts, line);
    if (opts.kind == FileKind::kGold) {
      s.issues = GoldIssues(s);
      if (opts.strict && !s.issues.empty()) {
        throw GoldInconsistency(s.sample_id, RuleOf(s.issues.front()), s.issues.front());
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<AnnotatedSample> LoadAnnotations(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  return ReadAnnotations(in, opts);
}

std::string ToJsonLine(const AnnotatedSample& s) {
  json obj;
  obj["sample_id"] = s.sample_id;
  obj["hypothesis"] = s.hypothesis;
  obj["amr"] = s.amr;
  obj["sample_label"] = ToString(s.sample_label);
  json labels = json::array();
  for (std::size_t k = 0; k < s.labels.size(); ++k) {
    if (s.labels[k]) labels.push_back({{"ke", s.ke_ids[k]}, {"label", ToString(*s.labels[k])}});
  }
  obj["ke_labels"] = std::move(labels);
  return obj.dump();
}

void WriteAnnotations(const std::string& path, const std::vector<AnnotatedSample>& samples) {
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot write " + path);
  for (const AnnotatedSample& s : samples) out << ToJsonLine(s) << '\n';
}

MetricsReport KeMetrics(const std::vector<AnnotatedSample>& preds,
                        const std::vector<AnnotatedSample>& golds) {
  const auto pred_index = ById(preds);
  MetricsReport m;
  for (const AnnotatedSample& g : golds) {
    const auto pred = Align(g, pred_index);
    ++m.samples;
    for (std::size_t k = 0; k < g.labels.size(); ++k) {
      if (!pred[k]) continue;
      const Label gold = ToLabel(*g.labels[k]);
      const bool ok = *pred[k] == gold;
      Cell& by_class = gold == Label::kEnt ? m.ent : gold == Label::kNeu ? m.neu : m.con;
      Cell& by_kind = g.kes.kes[k].is_node() ? m.node : m.tuple;
      for (Cell* c : {&by_class, &by_kind, &m.overall}) {
        c->correct += ok;
        ++c->total;
      }
    }
    for (const ke::KePair& p : g.kes.pairs) {
      if (!pred[p.parent] || !pred[p.child]) continue;
      m.structure.correct += logic::CheckPair(*pred[p.child], *pred[p.parent]).empty();
      ++m.structure.total;
    }
  }
  return m;
}

DistributionReport Distribution(const std::vector<AnnotatedSample>& source,
                                const std::vector<AnnotatedSample>& golds) {
  const auto index = ById(source);
  std::array<std::array<int, 3>, 3> counts{};
  for (const AnnotatedSample& g : golds) {
    const auto labels = Align(g, index);
    for (const auto& l : labels) {
      if (l) ++counts[int(g.sample_label)][int(*l)];
    }
  }
  DistributionReport d;
  for (int r = 0; r < 3; ++r) {
    d.counts[r] = counts[r][0] + counts[r][1] + counts[r][2];
    for (int c = 0; c < 3; ++c) {
      d.rows[r][c] = d.counts[r] > 0 ? double(counts[r][c]) / d.counts[r] : 0.0;
    }
  }
  return d;
}

double SampleAccuracy(const std::vector<AnnotatedSample>& preds,
                      const std::vector<AnnotatedSample>& golds) {
  if (golds.empty()) return 1.0;
  const auto index = ById(preds);
  int correct = 0;
  for (const AnnotatedSample& g : golds) {
    std::vector<Label> labels;
    for (const auto& l : Align(g, index)) {
      if (l) labels.push_back(*l);
    }
    if (labels.empty()) {
      // Nothing counts in the gold set; fall back to every predicted KE.
      for (const auto& [id, l] : LabelsById(*index.at(g.sample_id))) labels.push_back(ToLabel(l));
    }
    if (labels.empty()) throw MissingPrediction("no KE predictions for " + g.sample_id);
    correct += logic::DeriveSampleLabel(std::span<const Label>(labels)) == g.sample_label;
  }
  return double(correct) / golds.size();
}

std::vector<AnnotatedSample> CopySampleLabel(const std::vector<AnnotatedSample>& golds) {
  std::vector<AnnotatedSample> out = golds;
  for (AnnotatedSample& s : out) {
    s.issues.clear();
    for (auto& l : s.labels) l = ToKeLabel(s.sample_label);
  }
  return out;
}

std::string ViolationRecord::Line() const {
  return sample_id + '\t' + parent + '\t' + child + '\t' + kinds;
}

std::vector<ViolationRecord> FindViolations(const std::vector<AnnotatedSample>& preds,
                                            const std::vector<AnnotatedSample>& golds) {
  const auto index = ById(preds);
  std::vector<ViolationRecord> out;
  for (const AnnotatedSample& g : golds) {
    const auto pred = Align(g, index);
    std::vector<Label> counted;
    for (const auto& l : pred) {
      if (l) counted.push_back(*l);
    }
    if (!counted.empty() &&
        logic::DeriveSampleLabel(std::span<const Label>(counted)) != g.sample_label) {
      out.push_back({g.sample_id, "*", "*", "MIL"});
    }
    for (const ke::KePair& p : g.kes.pairs) {
      if (!pred[p.parent] || !pred[p.child]) continue;
      const auto vs = logic::CheckPair(*pred[p.child], *pred[p.parent]);
      if (!vs.empty()) {
        out.push_back({g.sample_id, g.ke_ids[p.parent], g.ke_ids[p.child],
                       logic::JoinViolations(vs)});
      }
    }
  }
  return out;
}

std::string ToJson(const MetricsReport& m) {
  auto cell = [](const Cell& c) { return json{{"correct", c.correct}, {"total", c.total}}; };
  json obj = {{"acc_ent", m.acc_ent()},
              {"acc_neu", m.acc_neu()},
              {"acc_con", m.acc_con()},
              {"acc_node", m.acc_node()},
              {"acc_tup", m.acc_tup()},
              {"overall", m.acc_overall()},
              {"acc_struc", m.acc_struc()},
              {"samples", m.samples},
              {"counts",
               {{"ent", cell(m.ent)},
                {"neu", cell(m.neu)},
                {"con", cell(m.con)},
                {"node", cell(m.node)},
                {"tuple", cell(m.tuple)},
                {"overall", cell(m.overall)},
                {"pairs", cell(m.structure)}}}};
  return obj.dump();
}

std::string ToJson(const DistributionReport& d) {
  json obj = json::object();
  for (int r = 0; r < 3; ++r) {
    obj[ToString(static_cast<Label>(r))] = {{"ent", d.rows[r][0]},
                                            {"neu", d.rows[r][1]},
                                            {"con", d.rows[r][2]},
                                            {"kes", d.counts[r]}};
  }
  return obj.dump();
}

std::string FormatTable(const MetricsReport& m) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%8s %8s %8s | %8s %8s | %8s | %9s\n", "Acc_ent", "Acc_neu",
                "Acc_con", "Acc_node", "Acc_tup", "Overall", "Acc_STRUC");
  out << buf;
  std::snprintf(buf, sizeof(buf), "%8s %8s %8s | %8s %8s | %8s | %9s\n", Pct(m.acc_ent()).c_str(),
                Pct(m.acc_neu()).c_str(), Pct(m.acc_con()).c_str(), Pct(m.acc_node()).c_str(),
                Pct(m.acc_tup()).c_str(), Pct(m.acc_overall()).c_str(), Pct(m.acc_struc()).c_str());
  out << buf;
  std::snprintf(buf, sizeof(buf), "%8s %8s %8s | %8s %8s | %8s | %9s\n",
                (std::to_string(m.ent.correct) + "/" + std::to_string(m.ent.total)).c_str(),
                (std::to_string(m.neu.correct) + "/" + std::to_string(m.neu.total)).c_str(),
                (std::to_string(m.con.correct) + "/" + std::to_string(m.con.total)).c_str(),
                (std::to_string(m.node.correct) + "/" + std::to_string(m.node.total)).c_str(),
                (std::to_string(m.tuple.correct) + "/" + std::to_string(m.tuple.total)).c_str(),
                (std::to_string(m.overall.correct) + "/" + std::to_string(m.overall.total)).c_str(),
                (std::to_string(m.structure.correct) + "/" + std::to_string(m.structure.total))
                    .c_str());
  out << buf;
  return out.str();
}

std::string FormatTable(const DistributionReport& d) {
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-8s %8s %8s %8s %8s\n", "sample", "ent", "neu", "con", "KEs");
  out << buf;
  for (int r = 0; r < 3; ++r) {
    std::snprintf(buf, sizeof(buf), "%-8s %8s %8s %8s %8d\n", ToString(static_cast<Label>(r)),
                  Pct(d.rows[r][0]).c_str(), Pct(d.rows[r][1]).c_str(), Pct(d.rows[r][2]).c_str(),
                  d.counts[r]);
    out << buf;
  }
  return out.str();
}

}  // namespace fgve::eval
