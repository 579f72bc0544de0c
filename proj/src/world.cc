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

#include "fgve/world.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "fgve/ke.h"
#include "json.hpp"

namespace fgve::toy {

using nlohmann::json;

namespace {

using Pair = std::array<const char*, 2>;

constexpr Pair kObjectPairs[] = {
    {"dog", "cat"},      {"boy", "girl"},     {"car", "bicycle"},  {"beach", "snow"},
    {"tea", "coffee"},   {"sun", "moon"},     {"shirt", "jacket"}, {"guitar", "violin"},
    {"bread", "cake"},   {"ball", "kite"},    {"chair", "bench"},  {"horse", "cow"},
    {"bus", "train"},    {"river", "desert"}, {"apple", "orange"}, {"hat", "helmet"},
    {"table", "bed"},    {"rose", "tulip"},   {"lake", "road"},    {"pen", "brush"},
    {"door", "window"},  {"cup", "bottle"},   {"book", "phone"},   {"tree", "tower"},
};

constexpr Pair kPredicatePairs[] = {
    {"sit-01", "stand-01"}, {"sleep-01", "run-02"},  {"eat-01", "throw-01"},
    {"open-01", "close-01"}, {"walk-01", "swim-01"}, {"laugh-01", "cry-02"},
    {"buy-01", "sell-01"},  {"push-01", "pull-01"},
};

constexpr const char* kRoles[] = {":ARG0", ":ARG1", ":location", ":mod"};

constexpr double kIdentityScale = 2.0;
// Side stays below identity so a concept's conflict partner is its nearest
// neighbour by cosine.
constexpr double kSideScale = 1.0;
constexpr double kJitter = 0.05;

// Engine for one purpose derived from the config seed.
std::mt19937_64 Stream(std::uint64_t seed, std::uint64_t purpose) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(purpose)};
  return std::mt19937_64(seq);
}

int Pick(std::mt19937_64& rng, int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

std::string SampleId(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "s%06d", i);
  return buf;
}

struct Child {
  int id;
  std::string role;
};

SyntheticSample MakeSample(const World& world, const TrainConfig& cfg, SampleLabel label,
                           std::mt19937_64& rng) {
  const int n_obj_pairs = cfg.n_object_pairs;
  const int n_children = 1 + Pick(rng, std::min(cfg.max_children, n_obj_pairs));

  std::vector<int> pairs(n_obj_pairs);
  for (int p = 0; p < n_obj_pairs; ++p) pairs[p] = p;
  std::shuffle(pairs.begin(), pairs.end(), rng);

  // Child statuses: every child of an ent sample is entailed; otherwise at
  // least one child carries the sample label.
  std::vector<Label> status(n_children, Label::kEnt);
  if (label != Label::kEnt) {
    std::bernoulli_distribution bad(0.3), stray_neu(0.1);
    for (int i = 0; i < n_children; ++i) {
      if (bad(rng)) {
        status[i] = label;
      } else if (label == Label::kCon && stray_neu(rng)) {
        status[i] = Label::kNeu;
      }
    }
    status[Pick(rng, n_children)] = label;
  }

  const int n_pred = 2 * cfg.n_predicate_pairs;
  const int pred = 2 * n_obj_pairs + Pick(rng, n_pred);

  Scene scene;
  scene.present.push_back(pred);
  std::vector<Child> children;
  std::vector<std::string> roles(std::begin(kRoles), std::end(kRoles));
  std::shuffle(roles.begin(), roles.end(), rng);
  for (int i = 0; i < n_children; ++i) {
    const int cid = 2 * pairs[i] + Pick(rng, 2);
    children.push_back({cid, roles[i % roles.size()]});
    if (status[i] == Label::kEnt) {
      scene.present.push_back(cid);
      scene.relations.push_back({pred, children.back().role, cid});
    } else if (status[i] == Label::kCon) {
      scene.present.push_back(world.conflict[cid]);
    }
  }
  // Distractors come from pairs the hypothesis does not mention.
  const int n_free = n_obj_pairs - n_children;
  for (int i = 0; i < std::min(cfg.n_distractors, n_free); ++i) {
    scene.present.push_back(2 * pairs[n_children + i] + Pick(rng, 2));
  }
  std::sort(scene.present.begin(), scene.present.end());
  scene.tags = scene.present;
  scene.noise_seed = rng();

  SyntheticSample s;
  s.sample_label = label;
  s.scene = std::move(scene);
  std::string amr = "(z0 / " + world.written[pred];
  std::string hyp = world.concepts[pred];
  for (int i = 0; i < n_children; ++i) {
    amr += " " + children[i].role + " (z" + std::to_string(i + 1) + " / " +
           world.written[children[i].id] + ")";
    hyp += " " + world.concepts[children[i].id];
  }
  amr += ")";
  s.amr = std::move(amr);
  s.hypothesis = std::move(hyp);
  return s;
}

std::string NameOf(const World& w, int cid) { return w.concepts.at(cid); }

int IdOf(const World& w, const std::string& name) {
  const int id = w.ConceptId(name);
  if (id < 0) throw std::runtime_error("unknown concept '" + name + "' in dataset");
  return id;
}

json SceneToJson(const World& w, const Scene& s) {
  json present = json::array(), tags = json::array(), rel = json::array();
  for (int c : s.present) present.push_back(NameOf(w, c));
  for (int c : s.tags) tags.push_back(NameOf(w, c));
  for (const Relation& r : s.relations) rel.push_back({NameOf(w, r.head), r.role, NameOf(w, r.tail)});
  return {{"present", present}, {"relations", rel}, {"tags", tags}, {"noise_seed", s.noise_seed}};
}

Scene SceneFromJson(const World& w, const json& j) {
  Scene s;
  for (const auto& c : j.at("present")) s.present.push_back(IdOf(w, c.get<std::string>()));
  for (const auto& c : j.at("tags")) s.tags.push_back(IdOf(w, c.get<std::string>()));
  for (const auto& r : j.at("relations")) {
    s.relations.push_back({IdOf(w, r.at(0).get<std::string>()), r.at(1).get<std::string>(),
                           IdOf(w, r.at(2).get<std::string>())});
  }
  s.noise_seed = j.at("noise_seed").get<std::uint64_t>();
  return s;
}

std::string SampleLine(const World& w, const SyntheticSample& s, bool with_gold) {
  json obj;
  obj["sample_id"] = s.sample_id;
  obj["hypothesis"] = s.hypothesis;
  obj["amr"] = s.amr;
  obj["sample_label"] = ToString(s.sample_label);
  obj["scene"] = SceneToJson(w, s.scene);
  if (with_gold) {
    const penman::AmrGraph g = penman::Simplify(penman::ParsePenman(s.amr));
    const auto ids = ke::KeTextIds(g, ke::ExtractKes(g));
    json labels = json::array();
    for (std::size_t k = 0; k < s.gold.size(); ++k) {
      labels.push_back({{"ke", ids[k]}, {"label", ToString(s.gold[k])}});
    }
    obj["ke_labels"] = std::move(labels);
  }
  return obj.dump();
}

std::vector<SyntheticSample> ReadSamples(const World& w, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  std::vector<SyntheticSample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json obj = json::parse(line);
    SyntheticSample s;
    s.sample_id = obj.at("sample_id").get<std::string>();
    s.hypothesis = obj.value("hypothesis", "");
    s.amr = obj.at("amr").get<std::string>();
    const auto label = ParseLabel(obj.at("sample_label").get<std::string>());
    if (!label) throw std::runtime_error("bad sample_label in " + path);
    s.sample_label = *label;
    s.scene = SceneFromJson(w, obj.at("scene"));
    if (obj.contains("ke_labels")) {
      const penman::AmrGraph g = penman::Simplify(penman::ParsePenman(s.amr));
      const auto ids = ke::KeTextIds(g, ke::ExtractKes(g));
      s.gold.assign(ids.size(), KeLabel::kOptOut);
      for (const auto& e : obj["ke_labels"]) {
        const auto it = std::find(ids.begin(), ids.end(), e.at("ke").get<std::string>());
        const auto kl = ParseKeLabel(e.at("label").get<std::string>());
        if (it == ids.end() || !kl) throw std::runtime_error("bad KE label in " + path);
        s.gold[it - ids.begin()] = *kl;
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

int World::ConceptId(const std::string& name) const {
  const auto it = std::find(concepts.begin(), concepts.end(), name);
  return it == concepts.end() ? -1 : int(it - concepts.begin());
}

bool Scene::Has(int cid) const {
  return std::binary_search(present.begin(), present.end(), cid);
}

World BuildWorld(const TrainConfig& cfg) {
  cfg.Validate();
  constexpr int kMaxObj = int(std::size(kObjectPairs));
  constexpr int kMaxPred = int(std::size(kPredicatePairs));
  if (cfg.n_object_pairs > kMaxObj || cfg.n_predicate_pairs > kMaxPred) {
    throw InsufficientVocabulary("the word lists hold " + std::to_string(kMaxObj) +
                                 " object pairs and " + std::to_string(kMaxPred) +
                                 " predicate pairs");
  }
  const int n_pairs = cfg.n_object_pairs + cfg.n_predicate_pairs;
  if (cfg.d < 2 + n_pairs) {
    throw ConfigError("embed_dim must be at least 2 + n_object_pairs + n_predicate_pairs");
  }

  std::mt19937_64 rng = Stream(cfg.seed, 1);
  std::vector<int> obj(kMaxObj), pred(kMaxPred);
  for (int i = 0; i < kMaxObj; ++i) obj[i] = i;
  for (int i = 0; i < kMaxPred; ++i) pred[i] = i;
  std::shuffle(obj.begin(), obj.end(), rng);
  std::shuffle(pred.begin(), pred.end(), rng);

  World w;
  w.noise_sigma = cfg.noise_sigma;
  w.roles.assign(std::begin(kRoles), std::end(kRoles));
  for (int p = 0; p < cfg.n_object_pairs; ++p) {
    for (const char* name : kObjectPairs[obj[p]]) {
      w.concepts.push_back(name);
      w.written.push_back(name);
      w.is_object.push_back(true);
    }
  }
  for (int p = 0; p < cfg.n_predicate_pairs; ++p) {
    for (const char* name : kPredicatePairs[pred[p]]) {
      w.concepts.push_back(penman::SimplifyConcept(name));
      w.written.push_back(name);
      w.is_object.push_back(false);
    }
  }
  const int n = w.num_concepts();
  w.conflict.resize(n);
  for (int c = 0; c < n; ++c) w.conflict[c] = c ^ 1;

  std::normal_distribution<double> jitter(0.0, kJitter);
  w.semantic.resize(n, cfg.d);
  for (int c = 0; c < n; ++c) {
    for (int k = 0; k < cfg.d; ++k) w.semantic(c, k) = jitter(rng);
    w.semantic(c, 0) += w.is_object[c] ? 0.5 * cfg.salience : cfg.salience;
    w.semantic(c, 1) += (c & 1) ? -kSideScale : kSideScale;
    w.semantic(c, 2 + c / 2) += kIdentityScale;
  }
  return w;
}

std::vector<KeLabel> GoldLabels(const World& world, const Scene& scene,
                                const penman::AmrGraph& graph) {
  const ke::KeStructure ks = ke::ExtractKes(graph);
  std::vector<int> concept_of(graph.nodes.size());
  std::vector<KeLabel> labels(ks.kes.size(), KeLabel::kEnt);
  for (const ke::KnowledgeElement& k : ks.kes) {
    if (!k.is_node()) continue;
    const int c = world.ConceptId(graph.nodes[k.node].concept_name);
    concept_of[k.node] = c;
    if (c >= 0 && scene.Has(c)) {
      labels[k.id] = KeLabel::kEnt;
    } else if (c >= 0 && scene.Has(world.conflict[c])) {
      labels[k.id] = KeLabel::kCon;
    } else {
      labels[k.id] = KeLabel::kNeu;
    }
  }
  for (const ke::KnowledgeElement& k : ks.kes) {
    if (!k.is_tuple()) continue;
    const Label worst = std::max(ToLabel(labels[k.head]), ToLabel(labels[k.tail]),
                                 [](Label a, Label b) { return Severity(a) < Severity(b); });
    if (worst != Label::kEnt) {
      labels[k.id] = ToKeLabel(worst);
      continue;
    }
    const Relation r{concept_of[k.head], graph.edges[k.edge].role, concept_of[k.tail]};
    const bool holds =
        std::find(scene.relations.begin(), scene.relations.end(), r) != scene.relations.end();
    labels[k.id] = holds ? KeLabel::kEnt : KeLabel::kNeu;
  }
  return labels;
}

Eigen::MatrixXd RegionNoise(const World& world, const Scene& scene) {
  std::mt19937_64 rng(scene.noise_seed);
  std::normal_distribution<double> noise(0.0, world.noise_sigma);
  Eigen::MatrixXd r(scene.tags.size(), world.d());
  for (std::size_t t = 0; t < scene.tags.size(); ++t) {
    for (int k = 0; k < world.d(); ++k) r(t, k) = noise(rng);
  }
  return r;
}

Dataset GenerateDataset(const TrainConfig& cfg) {
  Dataset ds;
  ds.world = BuildWorld(cfg);
  ds.config_text = cfg.ToText();

  // Largest-remainder class counts.
  const double share[3] = {cfg.balance_ent, cfg.balance_neu, cfg.balance_con};
  int count[3];
  double frac[3];
  int assigned = 0;
  for (int c = 0; c < 3; ++c) {
    const double exact = cfg.n_samples * share[c];
    count[c] = int(std::floor(exact));
    frac[c] = exact - count[c];
    assigned += count[c];
  }
  for (; assigned < cfg.n_samples; ++assigned) {
    const int c = int(std::max_element(frac, frac + 3) - frac);
    ++count[c];
    frac[c] = -1;
  }
  std::vector<Label> labels;
  for (int c = 0; c < 3; ++c) labels.insert(labels.end(), count[c], static_cast<Label>(c));
  std::mt19937_64 rng = Stream(cfg.seed, 2);
  std::shuffle(labels.begin(), labels.end(), rng);

  const int n_eval = int(std::lround(cfg.n_samples * cfg.eval_fraction));
  const int n_train = cfg.n_samples - n_eval;
  for (int i = 0; i < cfg.n_samples; ++i) {
    SyntheticSample s = MakeSample(ds.world, cfg, labels[i], rng);
    s.sample_id = SampleId(i);
    if (i < n_train) {
      ds.train.push_back(std::move(s));
    } else {
      const penman::AmrGraph g = penman::Simplify(penman::ParsePenman(s.amr));
      s.gold = GoldLabels(ds.world, s.scene, g);
      ds.eval.push_back(std::move(s));
    }
  }
  return ds;
}

void WriteDataset(const std::string& dir, const Dataset& ds) {
  std::filesystem::create_directories(dir);
  const World& w = ds.world;
  json concepts = json::array();
  for (int c = 0; c < w.num_concepts(); ++c) {
    std::vector<double> row(w.semantic.row(c).begin(), w.semantic.row(c).end());
    concepts.push_back({{"name", w.concepts[c]},
                        {"written", w.written[c]},
                        {"object", bool(w.is_object[c])},
                        {"conflict", w.concepts[w.conflict[c]]},
                        {"embedding", row}});
  }
  const json meta = {{"d", w.d()},
                     {"noise_sigma", w.noise_sigma},
                     {"roles", w.roles},
                     {"concepts", concepts},
                     {"config", ds.config_text}};
  auto open = [&](const char* name) {
    std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
    if (!out) throw std::ios_base::failure("cannot write " + dir + "/" + name);
    return out;
  };
  open("world.json") << meta.dump(1) << '\n';
  // Train records keep the sample label only.
  auto train = open("train.jsonl");
  for (const auto& s : ds.train) train << SampleLine(w, s, false) << '\n';
  auto eval = open("eval.jsonl");
  for (const auto& s : ds.eval) eval << SampleLine(w, s, true) << '\n';
}

Dataset ReadDataset(const std::string& dir) {
  const std::filesystem::path root(dir);
  std::ifstream in(root / "world.json");
  if (!in) throw std::ios_base::failure("cannot open " + (root / "world.json").string());
  const json meta = json::parse(in);
  Dataset ds;
  World& w = ds.world;
  w.noise_sigma = meta.at("noise_sigma").get<double>();
  w.roles = meta.at("roles").get<std::vector<std::string>>();
  const int d = meta.at("d").get<int>();
  const auto& concepts = meta.at("concepts");
  w.semantic.resize(concepts.size(), d);
  for (std::size_t c = 0; c < concepts.size(); ++c) {
    w.concepts.push_back(concepts[c].at("name").get<std::string>());
    w.written.push_back(concepts[c].at("written").get<std::string>());
    w.is_object.push_back(concepts[c].at("object").get<bool>());
    const auto row = concepts[c].at("embedding").get<std::vector<double>>();
    if (int(row.size()) != d) throw std::runtime_error("embedding width mismatch in world.json");
    for (int k = 0; k < d; ++k) w.semantic(c, k) = row[k];
  }
  for (const auto& c : concepts) w.conflict.push_back(IdOf(w, c.at("conflict").get<std::string>()));
  ds.config_text = meta.value("config", "");
  ds.train = ReadSamples(w, (root / "train.jsonl").string());
  ds.eval = ReadSamples(w, (root / "eval.jsonl").string());
  return ds;
}

}  // namespace fgve::toy
