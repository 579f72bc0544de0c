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

#ifndef FGVE_TESTS_CORPUS_H_
#define FGVE_TESTS_CORPUS_H_

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fgve/penman.h"

namespace fgve::testing {

inline std::vector<std::string> CorpusRecords() {
  std::ifstream in(std::string(FGVE_TEST_DATA) + "/corpus.amr");
  if (!in) throw std::runtime_error("cannot open test corpus");
  return penman::ReadRecords(in);
}

inline constexpr const char* kSleepDog = "(z0 / sleep-01 :ARG0 (z1 / dog))";
inline constexpr const char* kWantGo =
    "(z0 / want-01 :ARG0 (z1 / boy) :ARG1 (z2 / go-02 :ARG0 z1))";

}  // namespace fgve::testing

#endif  // FGVE_TESTS_CORPUS_H_
