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

// fgve: command-line front end. Machine-readable output goes to stdout,
// progress to stderr.
//
// Exit codes: 0 success, 1 validation/report failure, 2 usage, I/O or
// schema error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <atomic>
#include <map>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "fgve/config.h"
#include "fgve/eval.h"
#include "fgve/gradcheck.h"
#include "fgve/ke.h"
#include "fgve/penman.h"
#include "fgve/toymodel.h"
#include "fgve/world.h"
#include "json.hpp"

namespace {

using namespace fgve;

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kError = 2;

bool g_quiet = false;

std::ostream& Log() {
  static std::ostream null(nullptr);
  return g_quiet ? null : std::cerr;
}

std::vector<std::string> Records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  return penman::ReadRecords(in);
}

std::string Fixed(double x, int digits = 2) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  return buf;
}

// Config assembly: base text, then a config file, then --key overrides.
struct ConfigFlags {
  std::string file;
  std::map<std::string, std::string> overrides;

  void Attach(CLI::App* cmd) {
    cmd->add_option("--config", file, "key=value config file");
    for (const std::string& key : TrainConfig::Keys()) {
      if (key == "seed") continue;  // every subcommand declares --seed itself
      cmd->add_option("--" + key, overrides[key], "override " + key);
    }
  }

  TrainConfig Build(const std::string& base_text) const {
    TrainConfig cfg;
    std::istringstream base(base_text);
    ReadConfig(base, &cfg);
    if (!file.empty()) LoadConfig(file, &cfg);
    for (const auto& [key, value] : overrides) {
      if (!value.empty()) cfg.Set(key, value);
    }
    return cfg;
  }
};

// --seed, then FGVE_SEED, then whatever the config says.
void ApplySeed(const std::string& flag, TrainConfig* cfg) {
  if (!flag.empty()) {
    cfg->Set("seed", flag);
  } else if (const char* env = std::getenv("FGVE_SEED"); env && *env) {
    cfg->Set("seed", env);
  }
}

int RunParse(const std::string& path, bool simplify) {
  bool first = true;
  for (const std::string& rec : Records(path)) {
    penman::AmrGraph g = penman::ParsePenman(rec);
    if (simplify) g = penman::Simplify(g);
    if (!first) std::cout << '\n';
    std::cout << penman::DumpGraph(g);
    first = false;
  }
  return kOk;
}

int RunLinearize(const std::string& path, bool raw) {
  for (const std::string& rec : Records(path)) {
    penman::AmrGraph g = penman::ParsePenman(rec);
    if (!raw) g = penman::Simplify(g);
    std::cout << penman::LinearizeDfs(g).Text() << '\n';
  }
  return kOk;
}

int RunExtract(const std::string& path) {
  int index = 0;
  for (const std::string& rec : Records(path)) {
    const penman::AmrGraph g = penman::Simplify(penman::ParsePenman(rec));
    const ke::KeStructure ks = ke::ExtractKes(g);
    const auto ids = ke::KeTextIds(g, ks);
    std::cout << "# record " << ++index << ": " << ks.kes.size() << " KEs, " << ks.pairs.size()
              << " pairs\n";
    for (const auto& k : ks.kes) {
      std::cout << "ke\t" << k.id << '\t' << ids[k.id] << '\t';
      if (k.is_node()) {
        std::cout << g.NodeKey(k.node) << ' ' << g.nodes[k.node].concept_name;
      } else {
        std::cout << '(' << g.NodeKey(k.head) << ' ' << g.nodes[k.head].concept_name << ", "
                  << g.edges[k.edge].role << ", " << g.NodeKey(k.tail) << ' '
                  << g.nodes[k.tail].concept_name << ')';
      }
      std::cout << '\n';
    }
    for (const auto& p : ks.pairs) {
      std::cout << "pair\t" << ids[p.parent] << '\t' << ids[p.child] << '\n';
    }
  }
  return kOk;
}

std::vector<eval::AnnotatedSample> LoadGold(const std::string& path, bool lenient) {
  auto golds = eval::LoadAnnotations(path, {eval::FileKind::kGold, !lenient});
  for (const auto& g : golds) {
    for (const auto& issue : g.issues) Log() << "gold " << g.sample_id << ": " << issue << '\n';
  }
  return golds;
}

int RunCheck(const std::string& pred_path, const std::string& gold_path, bool strict,
             bool lenient) {
  const auto golds = LoadGold(gold_path, lenient);
  const auto preds = eval::LoadAnnotations(pred_path, {eval::FileKind::kPrediction, true});
  const auto violations = eval::FindViolations(preds, golds);
  for (const auto& v : violations) std::cout << v.Line() << '\n';
  const eval::MetricsReport m = eval::KeMetrics(preds, golds);
  std::cout << violations.size() << " violations\n";
  std::cout << "acc_struc\t" << Fixed(m.acc_struc(), 6) << '\n';
  return strict && !violations.empty() ? kFailed : kOk;
}

int RunEval(const std::string& pred_path, const std::string& gold_path, const std::string& format,
            bool lenient) {
  const auto golds = LoadGold(gold_path, lenient);
  const auto preds = eval::LoadAnnotations(pred_path, {eval::FileKind::kPrediction, true});
  const eval::MetricsReport m = eval::KeMetrics(preds, golds);
  const eval::DistributionReport pd = eval::Distribution(preds, golds);
  const eval::DistributionReport gd = eval::Distribution(golds, golds);
  const double sample_acc = eval::SampleAccuracy(preds, golds);
  if (format == "json") {
    nlohmann::json out = {{"metrics", nlohmann::json::parse(eval::ToJson(m))},
                          {"predicted_distribution", nlohmann::json::parse(eval::ToJson(pd))},
                          {"gold_distribution", nlohmann::json::parse(eval::ToJson(gd))},
                          {"sample_accuracy", sample_acc}};
    std::cout << out.dump() << '\n';
  } else {
    std::cout << eval::FormatTable(m) << '\n'
              << "predicted KE labels by gold sample label\n"
              << eval::FormatTable(pd) << '\n'
              << "gold KE labels by gold sample label\n"
              << eval::FormatTable(gd) << '\n'
              << "sample accuracy (KE -> sample)\t" << Fixed(100 * sample_acc) << '\n';
  }
  return kOk;
}

int RunSynth(const ConfigFlags& flags, const std::string& seed, const std::string& out) {
  TrainConfig cfg = flags.Build("");
  ApplySeed(seed, &cfg);
  const toy::Dataset ds = toy::GenerateDataset(cfg);
  toy::WriteDataset(out, ds);
  Log() << "wrote " << ds.train.size() << " train and " << ds.eval.size() << " eval samples to "
        << out << '\n';
  return kOk;
}

std::string HistoryHeader() { return "epoch\ttotal\tcls\tke\tbu_c\tbu_n\ttd_e\ttd_n"; }

std::string HistoryLine(const toy::EpochRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f", r.epoch, r.total,
                r.breakdown.cls, r.breakdown.ke, r.breakdown.bu_c, r.breakdown.bu_n,
                r.breakdown.td_e, r.breakdown.td_n);
  return buf;
}

void LogReport(const toy::ToyReport& r) {
  Log() << eval::FormatTable(r.metrics) << "sample accuracy: KE->sample "
        << Fixed(100 * r.sample_accuracy_derived) << ", CLS " << Fixed(100 * r.sample_accuracy_cls)
        << "; copy baseline overall " << Fixed(100 * r.best_copy_overall()) << '\n';
}

int RunTrain(const ConfigFlags& flags, const std::string& seed, const std::string& data,
             const std::string& out, const std::string& predictions, const std::string& report) {
  const toy::Dataset ds = toy::ReadDataset(data);
  TrainConfig cfg = flags.Build(ds.config_text);
  ApplySeed(seed, &cfg);
  std::cout << HistoryHeader() << '\n';
  const toy::TrainResult result = toy::Train(ds, cfg, [](const toy::EpochRecord& r) {
    std::cout << HistoryLine(r) << '\n';
    Log() << "epoch " << r.epoch << " loss " << Fixed(r.total, 4) << '\n';
  });
  toy::SaveCheckpoint(out, result.params);
  if (!ds.eval.empty()) {
    const toy::ToyReport r = toy::EvaluateToy(result.params, ds.world, ds.eval, cfg.max_len);
    LogReport(r);
    if (!report.empty()) {
      std::ofstream rep(report);
      if (!rep) throw std::ios_base::failure("cannot write " + report);
      rep << eval::ToJson(r.metrics) << '\n';
    }
    if (!predictions.empty()) {
      eval::WriteAnnotations(predictions,
                             toy::PredictKes(result.params, ds.world, ds.eval, cfg.max_len));
    }
  }
  return kOk;
}

// Grid file: "key = v1, v2, ..." per line; the sweep runs the cartesian
// product in file order.
std::vector<std::pair<std::string, std::vector<std::string>>> ReadGrid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  std::vector<std::pair<std::string, std::vector<std::string>>> grid;
  std::string line;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  while (std::getline(in, line)) {
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("grid line without '=': " + line);
    std::vector<std::string> values;
    std::stringstream vs(line.substr(eq + 1));
    for (std::string v; std::getline(vs, v, ',');) {
      if (!trim(v).empty()) values.push_back(trim(v));
    }
    if (values.empty()) throw ConfigError("grid key without values: " + line);
    grid.emplace_back(trim(line.substr(0, eq)), values);
  }
  return grid;
}

int RunSweep(const ConfigFlags& flags, const std::string& seed, const std::string& data,
             const std::string& grid_path, int jobs) {
  const toy::Dataset ds = toy::ReadDataset(data);
  TrainConfig base = flags.Build(ds.config_text);
  ApplySeed(seed, &base);
  const auto grid = ReadGrid(grid_path);

  std::vector<TrainConfig> runs = {base};
  std::vector<std::vector<std::string>> labels = {{}};
  for (const auto& [key, values] : grid) {
    std::vector<TrainConfig> next;
    std::vector<std::vector<std::string>> next_labels;
    for (std::size_t r = 0; r < runs.size(); ++r) {
      for (const std::string& v : values) {
        TrainConfig c = runs[r];
        c.Set(key, v);
        next.push_back(c);
        next_labels.push_back(labels[r]);
        next_labels.back().push_back(v);
      }
    }
    runs = std::move(next);
    labels = std::move(next_labels);
  }

  std::vector<toy::ToyReport> reports(runs.size());
  std::vector<std::string> errors(runs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < runs.size();) {
      try {
        const toy::TrainResult tr = toy::Train(ds, runs[i]);
        reports[i] = toy::EvaluateToy(tr.params, ds.world, ds.eval, runs[i].max_len);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int j = 0; j < std::max(1, jobs); ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (!errors[i].empty()) throw std::runtime_error("sweep run " + std::to_string(i) + ": " + errors[i]);
  }

  for (const auto& [key, values] : grid) std::cout << key << '\t';
  std::cout << "acc_ent\tacc_neu\tacc_con\tacc_node\tacc_tup\toverall\tacc_struc\tsample_acc\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (const std::string& v : labels[i]) std::cout << v << '\t';
    const eval::MetricsReport& m = reports[i].metrics;
    std::cout << Fixed(100 * m.acc_ent()) << '\t' << Fixed(100 * m.acc_neu()) << '\t'
              << Fixed(100 * m.acc_con()) << '\t' << Fixed(100 * m.acc_node()) << '\t'
              << Fixed(100 * m.acc_tup()) << '\t' << Fixed(100 * m.acc_overall()) << '\t'
              << Fixed(100 * m.acc_struc()) << '\t'
              << Fixed(100 * reports[i].sample_accuracy_derived) << '\n';
  }
  return kOk;
}

int RunGradcheck(bool all, const std::string& seed_flag, int configs) {
  TrainConfig cfg;
  ApplySeed(seed_flag, &cfg);
  std::vector<gradcheck::SuiteResult> results = gradcheck::RunLossSuites(cfg.seed, configs);
  if (all) {
    for (auto r : gradcheck::RunLossSuites(cfg.seed, configs, loss::ConfidenceGradient::kFlow)) {
      if (r.name != "structural" && r.name != "total") continue;
      r.name += "_flow";
      results.push_back(r);
    }
    results.push_back(gradcheck::RunModelSuite(cfg.seed, configs));
  }
  bool ok = true;
  std::cout << "suite\tconfigs\tmax_rel_error\tthreshold\tresult\n";
  for (const auto& r : results) {
    char err[32], thr[32];
    std::snprintf(err, sizeof(err), "%.3e", r.max_rel_error);
    std::snprintf(thr, sizeof(thr), "%.0e", r.threshold);
    std::cout << r.name << '\t' << r.configs << '\t' << err << '\t' << thr << '\t'
              << (r.passed() ? "PASS" : "FAIL") << '\n';
    ok = ok && r.passed();
  }
  return ok ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fine-grained entailment toolkit: AMR parsing, KE extraction, losses, toy training "
               "and evaluation"};
  app.add_flag("--quiet", g_quiet, "suppress progress output on stderr");
  app.require_subcommand(1);

  std::string file, pred, gold, format = "text", seed, data, out, grid, predictions, report;
  bool simplify = false, raw = false, strict = false, lenient = false, all = false;
  int jobs = 1, configs = 100;

  auto* parse = app.add_subcommand("parse", "print the graph dump of each PENMAN record");
  parse->add_option("FILE", file)->required();
  parse->add_flag("--simplify", simplify, "apply role/sense simplification first");

  auto* linearize = app.add_subcommand("linearize", "print the DFS token stream of each record");
  linearize->add_option("FILE", file)->required();
  linearize->add_flag("--raw", raw, "skip simplification");

  auto* extract = app.add_subcommand("extract", "list KEs and parent-child pairs");
  extract->add_option("FILE", file)->required();

  auto* check = app.add_subcommand("check", "report MIL and structural violations");
  check->add_option("--pred", pred)->required();
  check->add_option("--gold", gold)->required();
  check->add_flag("--strict", strict, "exit 1 when any violation is found");
  check->add_flag("--lenient", lenient, "load inconsistent gold records instead of failing");

  auto* evalc = app.add_subcommand("eval", "KE-level metrics and label distributions");
  evalc->add_option("--pred", pred)->required();
  evalc->add_option("--gold", gold)->required();
  evalc->add_option("--format", format)->check(CLI::IsMember({"text", "json"}));
  evalc->add_flag("--lenient", lenient, "load inconsistent gold records instead of failing");

  ConfigFlags synth_flags, train_flags, sweep_flags;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--seed", seed);
  synth->add_option("--out", out)->required();
  synth_flags.Attach(synth);

  auto* train = app.add_subcommand("train", "train the toy model; history TSV on stdout");
  train->add_option("--data", data)->required();
  train->add_option("--out", out)->required();
  train->add_option("--seed", seed);
  train->add_option("--predictions", predictions, "write eval-split KE predictions here");
  train->add_option("--report", report, "write eval-split metrics (JSON) here");
  train_flags.Attach(train);

  auto* sweep = app.add_subcommand("sweep", "train over a grid of config values");
  sweep->add_option("--data", data)->required();
  sweep->add_option("--grid", grid)->required();
  sweep->add_option("--seed", seed);
  sweep->add_option("--jobs", jobs)->check(CLI::PositiveNumber);
  sweep_flags.Attach(sweep);

  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient suites");
  gc->add_flag("--all", all, "also the confidence-gradient variant and the full model");
  gc->add_option("--seed", seed);
  gc->add_option("--configs", configs)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kError;
  }

  try {
    if (*parse) return RunParse(file, simplify);
    if (*linearize) return RunLinearize(file, raw);
    if (*extract) return RunExtract(file);
    if (*check) return RunCheck(pred, gold, strict, lenient);
    if (*evalc) return RunEval(pred, gold, format, lenient);
    if (*synth) return RunSynth(synth_flags, seed, out);
    if (*train) return RunTrain(train_flags, seed, data, out, predictions, report);
    if (*sweep) return RunSweep(sweep_flags, seed, data, grid, jobs);
    if (*gc) return RunGradcheck(all, seed, configs);
  } catch (const eval::GoldInconsistency& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  } catch (const eval::MissingPrediction& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  }
  return kError;
}
