// Copyright 2026 The PETRA Authors.
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

#ifndef PETRA_SCHEMA_HPP_
#define PETRA_SCHEMA_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace petra {

enum class StageKind : std::uint8_t {
  Reg = 0,   // regularized training
  Tr = 1,    // plain training
  LR = 2,    // low-rank decomposition
  Pr = 3,    // pruning
  QAT = 4,   // quantization-aware training
  PDQ = 5,   // post-training dynamic quantization
  PTQ = 6,   // post-training static quantization
  FP16 = 7,  // half precision conversion
};

std::string stage_kind_name(StageKind k);
// Accepts the table synonyms QD (dynamic) and QS (static) as well.
StageKind stage_kind_from_name(const std::string& s);

using ParamValue = std::variant<double, int, bool, std::string>;

enum class ParamType : std::uint8_t {
  Continuous = 0,
  ContinuousLog = 1,  // mutated with log-uniform steps
  Ordinal = 2,
  Categorical = 3,
  Boolean = 4,
};

// One hyperparameter's declared range and default. This registry is the
// single source of truth shared by validation, random pipeline sampling,
// and the mutation operators.
struct ParamSpec {
  std::string name;
  ParamType type = ParamType::Continuous;
  double lo = 0.0, hi = 0.0;          // continuous ranges
  int ilo = 0, ihi = 0;               // ordinal range
  std::vector<std::string> choices;   // categorical
  ParamValue def;

  // nullopt when valid, else a violation message.
  std::optional<std::string> check(const ParamValue& v) const;
};

const std::vector<ParamSpec>& stage_schema(StageKind kind);
const std::vector<ParamSpec>& model_hparam_schema();

std::map<std::string, ParamValue> default_params(StageKind kind);

const ParamSpec* find_param(StageKind kind, const std::string& name);

double as_double(const ParamValue& v);
int as_int(const ParamValue& v);
bool as_bool(const ParamValue& v);
std::string as_string(const ParamValue& v);

}  // namespace petra

#endif  // PETRA_SCHEMA_HPP_
