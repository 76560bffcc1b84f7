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

#include "petra/schema.hpp"

#include <algorithm>

#include "petra/errors.hpp"

namespace petra {

std::string stage_kind_name(StageKind k) {
  switch (k) {
    case StageKind::Reg: return "Reg";
    case StageKind::Tr: return "Tr";
    case StageKind::LR: return "LR";
    case StageKind::Pr: return "Pr";
    case StageKind::QAT: return "QAT";
    case StageKind::PDQ: return "PDQ";
    case StageKind::PTQ: return "PTQ";
    case StageKind::FP16: return "FP16";
  }
  return "?";
}

StageKind stage_kind_from_name(const std::string& s) {
  if (s == "Reg") return StageKind::Reg;
  if (s == "Tr") return StageKind::Tr;
  if (s == "LR") return StageKind::LR;
  if (s == "Pr") return StageKind::Pr;
  if (s == "QAT") return StageKind::QAT;
  if (s == "PDQ" || s == "QD") return StageKind::PDQ;
  if (s == "PTQ" || s == "QS") return StageKind::PTQ;
  if (s == "FP16") return StageKind::FP16;
  throw ConfigError("unknown stage " + s);
}

std::optional<std::string> ParamSpec::check(const ParamValue& v) const {
  switch (type) {
    case ParamType::Continuous:
    case ParamType::ContinuousLog: {
      if (!std::holds_alternative<double>(v))
        return name + ": expected a real value";
      const double x = std::get<double>(v);
      if (x < lo || x > hi)
        return name + " range: " + std::to_string(x) + " outside [" +
               std::to_string(lo) + ", " + std::to_string(hi) + "]";
      return std::nullopt;
    }
    case ParamType::Ordinal: {
      if (!std::holds_alternative<int>(v)) return name + ": expected an integer";
      const int x = std::get<int>(v);
      if (x < ilo || x > ihi)
        return name + " range: " + std::to_string(x) + " outside [" +
               std::to_string(ilo) + ", " + std::to_string(ihi) + "]";
      return std::nullopt;
    }
    case ParamType::Categorical: {
      if (!std::holds_alternative<std::string>(v))
        return name + ": expected a choice string";
      const auto& x = std::get<std::string>(v);
      if (std::find(choices.begin(), choices.end(), x) == choices.end())
        return name + ": unknown choice " + x;
      return std::nullopt;
    }
    case ParamType::Boolean:
      if (!std::holds_alternative<bool>(v)) return name + ": expected a boolean";
      return std::nullopt;
  }
  return std::nullopt;
}

namespace {

std::vector<ParamSpec> make_stage_schema(StageKind kind) {
  auto cont = [](std::string n, double lo, double hi, double def) {
    ParamSpec p;
    p.name = std::move(n);
    p.type = ParamType::Continuous;
    p.lo = lo;
    p.hi = hi;
    p.def = def;
    return p;
  };
  auto logc = [](std::string n, double lo, double hi, double def) {
    ParamSpec p;
    p.name = std::move(n);
    p.type = ParamType::ContinuousLog;
    p.lo = lo;
    p.hi = hi;
    p.def = def;
    return p;
  };
  auto ord = [](std::string n, int lo, int hi, int def) {
    ParamSpec p;
    p.name = std::move(n);
    p.type = ParamType::Ordinal;
    p.ilo = lo;
    p.ihi = hi;
    p.def = def;
    return p;
  };
  auto cat = [](std::string n, std::vector<std::string> choices, std::string def) {
    ParamSpec p;
    p.name = std::move(n);
    p.type = ParamType::Categorical;
    p.choices = std::move(choices);
    p.def = std::move(def);
    return p;
  };
  auto boolean = [](std::string n, bool def) {
    ParamSpec p;
    p.name = std::move(n);
    p.type = ParamType::Boolean;
    p.def = def;
    return p;
  };

  switch (kind) {
    case StageKind::Pr:
      return {cont("ratio", 0.05, 0.9, 0.5),
              cat("criterion", {"magnitude", "taylor", "hessian", "bnscale", "lamp"},
                  "magnitude"),
              cat("scope", {"per_layer", "global"}, "per_layer"),
              boolean("structured", false)};
    case StageKind::LR:
      return {cat("criterion", {"energy", "explained_variance", "sv_proportion"},
                  "energy"),
              cont("threshold", 0.05, 1.0, 0.9)};
    case StageKind::Reg:
      return {logc("lambda_o", 1e-4, 1.0, 1e-2),
              logc("lambda_h", 1e-4, 1.0, 1e-2),
              ord("epochs", 2, 30, 8),
              logc("lr", 1e-4, 1e-1, 1e-3),
              boolean("aux_sparsity", false),
              boolean("aux_norm", false),
              boolean("aux_lai", false),
              logc("aux_weight", 1e-6, 1e-2, 1e-4)};
    case StageKind::Tr:
      return {ord("epochs", 2, 30, 8), logc("lr", 1e-4, 1e-1, 1e-3)};
    case StageKind::QAT:
      return {ord("epochs", 2, 30, 6), logc("lr", 1e-4, 1e-1, 1e-3)};
    case StageKind::PTQ:
      return {ord("calib_batches", 1, 16, 8)};
    case StageKind::PDQ:
    case StageKind::FP16:
      return {};
  }
  return {};
}

}  // namespace

const std::vector<ParamSpec>& stage_schema(StageKind kind) {
  static const std::vector<std::vector<ParamSpec>> schemas = [] {
    std::vector<std::vector<ParamSpec>> all;
    for (int k = 0; k <= static_cast<int>(StageKind::FP16); ++k) {
      all.push_back(make_stage_schema(static_cast<StageKind>(k)));
    }
    return all;
  }();
  return schemas[static_cast<std::size_t>(kind)];
}

const std::vector<ParamSpec>& model_hparam_schema() {
  static const std::vector<ParamSpec> schema = [] {
    std::vector<ParamSpec> s;
    ParamSpec opt;
    opt.name = "optimizer";
    opt.type = ParamType::Categorical;
    opt.choices = {"sgd", "momentum", "adam"};
    opt.def = std::string("adam");
    s.push_back(opt);
    ParamSpec lr;
    lr.name = "learning_rate";
    lr.type = ParamType::ContinuousLog;
    lr.lo = 1e-5;
    lr.hi = 1e-1;
    lr.def = 1e-3;
    s.push_back(lr);
    ParamSpec bs;
    bs.name = "batch_size";
    bs.type = ParamType::Ordinal;
    bs.ilo = 8;
    bs.ihi = 256;
    bs.def = 32;
    s.push_back(bs);
    return s;
  }();
  return schema;
}

std::map<std::string, ParamValue> default_params(StageKind kind) {
  std::map<std::string, ParamValue> out;
  for (const ParamSpec& p : stage_schema(kind)) out[p.name] = p.def;
  return out;
}

const ParamSpec* find_param(StageKind kind, const std::string& name) {
  for (const ParamSpec& p : stage_schema(kind)) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

double as_double(const ParamValue& v) {
  if (std::holds_alternative<double>(v)) return std::get<double>(v);
  if (std::holds_alternative<int>(v)) return std::get<int>(v);
  throw ConfigError("hyperparameter is not numeric");
}

int as_int(const ParamValue& v) {
  if (std::holds_alternative<int>(v)) return std::get<int>(v);
  throw ConfigError("hyperparameter is not an integer");
}

bool as_bool(const ParamValue& v) {
  if (std::holds_alternative<bool>(v)) return std::get<bool>(v);
  throw ConfigError("hyperparameter is not a boolean");
}

std::string as_string(const ParamValue& v) {
  if (std::holds_alternative<std::string>(v)) return std::get<std::string>(v);
  throw ConfigError("hyperparameter is not a string");
}

}  // namespace petra
