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

#include "fgve/config.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <variant>

namespace fgve {

namespace {

using Field = std::variant<std::uint64_t TrainConfig::*, int TrainConfig::*,
                           double TrainConfig::*, bool TrainConfig::*>;

struct Entry {
  const char* key;
  Field field;
};

const std::vector<Entry>& Table() {
  static const std::vector<Entry> table = {
      {"seed", &TrainConfig::seed},
      {"n_samples", &TrainConfig::n_samples},
      {"balance_ent", &TrainConfig::balance_ent},
      {"balance_neu", &TrainConfig::balance_neu},
      {"balance_con", &TrainConfig::balance_con},
      {"eval_fraction", &TrainConfig::eval_fraction},
      {"n_object_pairs", &TrainConfig::n_object_pairs},
      {"n_predicate_pairs", &TrainConfig::n_predicate_pairs},
      {"max_children", &TrainConfig::max_children},
      {"n_distractors", &TrainConfig::n_distractors},
      {"noise_sigma", &TrainConfig::noise_sigma},
      {"salience", &TrainConfig::salience},
      {"embed_dim", &TrainConfig::d},
      {"hidden_dim", &TrainConfig::h},
      {"init_scale", &TrainConfig::init_scale},
      {"lr", &TrainConfig::lr},
      {"epochs", &TrainConfig::epochs},
      {"batch_size", &TrainConfig::batch_size},
      {"max_len", &TrainConfig::max_len},
      {"beta_cls", &TrainConfig::beta_cls},
      {"beta_ke", &TrainConfig::beta_ke},
      {"beta_struc", &TrainConfig::beta_struc},
      {"stop_gradient", &TrainConfig::stop_gradient},
  };
  return table;
}

const Entry& Find(const std::string& key) {
  for (const Entry& e : Table()) {
    if (key == e.key) return e;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end) {
    throw ConfigError("bad value '" + text + "' for " + key);
  }
  return v;
}

}  // namespace

void TrainConfig::Set(const std::string& key, const std::string& raw) {
  const std::string value = Trim(raw);
  std::visit(
      [&](auto member) {
        using T = std::remove_reference_t<decltype(this->*member)>;
        if constexpr (std::is_same_v<T, bool>) {
          if (value == "1" || value == "true") {
            this->*member = true;
          } else if (value == "0" || value == "false") {
            this->*member = false;
          } else {
            throw ConfigError("bad value '" + value + "' for " + key);
          }
        } else {
          this->*member = ParseNumber<T>(key, value);
        }
      },
      Find(key).field);
}

std::string TrainConfig::Get(const std::string& key) const {
  return std::visit(
      [&](auto member) -> std::string {
        using T = std::remove_cv_t<std::remove_reference_t<decltype(this->*member)>>;
        if constexpr (std::is_same_v<T, bool>) {
          return this->*member ? "true" : "false";
        } else if constexpr (std::is_same_v<T, double>) {
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%.17g", this->*member);
          return buf;
        } else {
          return std::to_string(this->*member);
        }
      },
      Find(key).field);
}

const std::vector<std::string>& TrainConfig::Keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const Entry& e : Table()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

void TrainConfig::Validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(n_samples > 0, "n_samples must be positive");
  require(balance_ent >= 0 && balance_neu >= 0 && balance_con >= 0,
          "class balance must be non-negative");
  require(std::abs(balance_ent + balance_neu + balance_con - 1.0) < 1e-6,
          "class balance must sum to 1");
  require(eval_fraction >= 0 && eval_fraction < 1, "eval_fraction must lie in [0, 1)");
  require(n_object_pairs >= 2, "n_object_pairs must be at least 2");
  require(n_predicate_pairs >= 1, "n_predicate_pairs must be at least 1");
  require(max_children >= 1, "max_children must be at least 1");
  require(n_distractors >= 0, "n_distractors must be non-negative");
  require(noise_sigma >= 0, "noise_sigma must be non-negative");
  require(d > 0 && h > 0, "embed_dim and hidden_dim must be positive");
  require(init_scale >= 0, "init_scale must be non-negative");
  require(lr >= 0, "lr must be non-negative");
  require(epochs >= 0, "epochs must be non-negative");
  require(batch_size > 0, "batch_size must be positive");
  require(max_len >= 0, "max_len must be non-negative");
  require(beta_cls >= 0 && beta_ke >= 0 && beta_struc >= 0, "loss weights must be non-negative");
}

std::string TrainConfig::ToText() const {
  std::ostringstream out;
  for (const std::string& k : Keys()) out << k << '=' << Get(k) << '\n';
  return out.str();
}

void ReadConfig(std::istream& in, TrainConfig* cfg) {
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (Trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(n) + ": expected key=value");
    }
    cfg->Set(Trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

void LoadConfig(const std::string& path, TrainConfig* cfg) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  ReadConfig(in, cfg);
}

}  // namespace fgve
