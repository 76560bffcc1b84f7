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

#include "petra/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>

#include "petra/decomposition.hpp"
#include "petra/errors.hpp"
#include "petra/pruning.hpp"
#include "petra/quantization.hpp"
#include "petra/rng.hpp"

namespace petra {

namespace {

bool is_training_stage(StageKind k) {
  return k == StageKind::Tr || k == StageKind::Reg || k == StageKind::QAT;
}

bool is_quantizing_stage(StageKind k) {
  return k == StageKind::QAT || k == StageKind::PDQ || k == StageKind::PTQ ||
         k == StageKind::FP16;
}

std::string param_value_str(const ParamValue& v) {
  if (std::holds_alternative<double>(v)) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", std::get<double>(v));
    return buf;
  }
  if (std::holds_alternative<int>(v)) return std::to_string(std::get<int>(v));
  if (std::holds_alternative<bool>(v)) return std::get<bool>(v) ? "true" : "false";
  return std::get<std::string>(v);
}

// Exact textual form for hashing: doubles rendered as hex floats so two
// prefixes hash equal only when they are bitwise the same work.
std::string param_value_exact(const ParamValue& v) {
  if (std::holds_alternative<double>(v)) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%a", std::get<double>(v));
    return buf;
  }
  return param_value_str(v);
}

std::uint64_t fnv1a(const std::string& s, std::uint64_t h) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

ParamValue coerce_value(StageKind kind, const std::string& name,
                        const std::string& raw) {
  const ParamSpec* spec = find_param(kind, name);
  if (spec == nullptr) return raw;  // validate() reports the unknown name
  switch (spec->type) {
    case ParamType::Continuous:
    case ParamType::ContinuousLog:
      try {
        return std::stod(raw);
      } catch (const std::exception&) {
        throw ConfigError(name + ": cannot parse '" + raw + "' as a number");
      }
    case ParamType::Ordinal:
      try {
        return std::stoi(raw);
      } catch (const std::exception&) {
        throw ConfigError(name + ": cannot parse '" + raw + "' as an integer");
      }
    case ParamType::Boolean:
      if (raw == "true" || raw == "1") return true;
      if (raw == "false" || raw == "0") return false;
      throw ConfigError(name + ": cannot parse '" + raw + "' as a boolean");
    case ParamType::Categorical:
      return raw;
  }
  return raw;
}

std::map<std::string, ParamValue> resolved_params(const StageNode& node) {
  std::map<std::string, ParamValue> p = default_params(node.kind);
  for (const auto& [k, v] : node.params) p[k] = v;
  return p;
}

void refloat(Network& net) {
  for (Layer& layer : net.layers) {
    if (!layer.has_params()) continue;
    layer.precision = Precision::F32;
    layer.quant.reset();
  }
}

Tensor head_rows(const Tensor& t, int n) {
  const int rows = std::min(n, t.dim(0));
  const std::int64_t row_len = t.size() / t.dim(0);
  std::vector<int> shape = t.shape();
  shape[0] = rows;
  Tensor out(shape);
  std::copy(t.data().begin(), t.data().begin() + rows * row_len,
            out.data().begin());
  return out;
}

}  // namespace

ValidationResult validate(const Pipeline& p) {
  ValidationResult r;
  if (p.stages.empty()) {
    r.violations.push_back("pipeline has no stages");
    return r;
  }

  for (const ParamSpec& spec : model_hparam_schema()) {
    ParamValue v;
    if (spec.name == "optimizer") v = optimizer_name(p.hparams.optimizer);
    else if (spec.name == "learning_rate") v = p.hparams.learning_rate;
    else if (spec.name == "batch_size") v = p.hparams.batch_size;
    else continue;
    if (auto msg = spec.check(v)) r.violations.push_back("hparams." + *msg);
  }

  bool quantized = false;   // a quantizing stage ran with no training since
  bool decomposed = false;  // an LR stage appeared earlier
  for (std::size_t i = 0; i < p.stages.size(); ++i) {
    const StageNode& node = p.stages[i];
    const std::string where = "stage " + std::to_string(i + 1) + " (" +
                              stage_kind_name(node.kind) + "): ";
    for (const auto& [name, value] : node.params) {
      const ParamSpec* spec = find_param(node.kind, name);
      if (spec == nullptr) {
        r.violations.push_back(where + "unknown parameter " + name);
        continue;
      }
      if (auto msg = spec->check(value)) r.violations.push_back(where + *msg);
    }

    if (is_training_stage(node.kind) && quantized) {
      r.notes.push_back(where +
                        "training re-floats previously quantized weights");
      quantized = false;
    }
    if (node.kind == StageKind::Reg && !decomposed) {
      r.notes.push_back(where +
                        "no decomposed layers yet; orthogonality and Hoyer "
                        "terms are inactive (auxiliary terms only)");
    }
    if (is_quantizing_stage(node.kind)) {
      if (quantized && node.kind != StageKind::QAT) {
        r.violations.push_back(where +
                               "model is already quantized; insert a "
                               "training stage before re-quantizing");
      }
      quantized = true;
    }
    if (node.kind == StageKind::LR) {
      if (quantized) {
        r.violations.push_back(where +
                               "decomposition of a quantized model is not "
                               "supported; train first");
      }
      decomposed = true;
    }
  }
  return r;
}

std::string pipeline_to_string(const Pipeline& p, bool with_params) {
  std::ostringstream out;
  for (std::size_t i = 0; i < p.stages.size(); ++i) {
    if (i > 0) out << " - ";
    out << stage_kind_name(p.stages[i].kind);
    if (with_params && !p.stages[i].params.empty()) {
      out << "(";
      bool first = true;
      for (const auto& [k, v] : p.stages[i].params) {
        if (!first) out << ", ";
        first = false;
        out << k << "=" << param_value_str(v);
      }
      out << ")";
    }
  }
  return out.str();
}

Pipeline parse_pipeline(const std::string& text) {
  Pipeline p;
  std::vector<std::string> tokens;
  std::string cur;
  int depth = 0;
  for (char c : text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == '-' && depth == 0) {
      tokens.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  tokens.push_back(cur);
  if (depth != 0) throw ConfigError("unbalanced parentheses in pipeline");

  for (const std::string& raw_token : tokens) {
    const std::string token = trim(raw_token);
    if (token.empty()) throw ConfigError("empty stage in pipeline string");
    StageNode node;
    const std::size_t paren = token.find('(');
    if (paren == std::string::npos) {
      node.kind = stage_kind_from_name(token);
    } else {
      if (token.back() != ')')
        throw ConfigError("malformed stage token: " + token);
      node.kind = stage_kind_from_name(trim(token.substr(0, paren)));
      const std::string body =
          token.substr(paren + 1, token.size() - paren - 2);
      std::istringstream parts(body);
      std::string part;
      while (std::getline(parts, part, ',')) {
        part = trim(part);
        if (part.empty()) continue;
        const std::size_t eq = part.find('=');
        if (eq == std::string::npos)
          throw ConfigError("expected name=value, got: " + part);
        const std::string name = trim(part.substr(0, eq));
        const std::string value = trim(part.substr(eq + 1));
        node.params[name] = coerce_value(node.kind, name, value);
      }
    }
    p.stages.push_back(std::move(node));
  }
  return p;
}

namespace {

nlohmann::json param_to_json(const ParamValue& v) {
  if (std::holds_alternative<double>(v)) return std::get<double>(v);
  if (std::holds_alternative<int>(v)) return std::get<int>(v);
  if (std::holds_alternative<bool>(v)) return std::get<bool>(v);
  return std::get<std::string>(v);
}

ParamValue param_from_json(StageKind kind, const std::string& name,
                           const nlohmann::json& j) {
  const ParamSpec* spec = find_param(kind, name);
  if (spec != nullptr) {
    switch (spec->type) {
      case ParamType::Continuous:
      case ParamType::ContinuousLog:
        return j.get<double>();
      case ParamType::Ordinal:
        return j.get<int>();
      case ParamType::Boolean:
        return j.get<bool>();
      case ParamType::Categorical:
        return j.get<std::string>();
    }
  }
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<int>();
  if (j.is_number()) return j.get<double>();
  return j.get<std::string>();
}

}  // namespace

nlohmann::json pipeline_to_json(const Pipeline& p) {
  nlohmann::json stages = nlohmann::json::array();
  for (const StageNode& node : p.stages) {
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [k, v] : node.params) params[k] = param_to_json(v);
    stages.push_back({{"kind", stage_kind_name(node.kind)}, {"params", params}});
  }
  return {{"stages", stages},
          {"hparams",
           {{"optimizer", optimizer_name(p.hparams.optimizer)},
            {"learning_rate", p.hparams.learning_rate},
            {"batch_size", p.hparams.batch_size}}}};
}

Pipeline pipeline_from_json(const nlohmann::json& j) {
  Pipeline p;
  for (const nlohmann::json& s : j.at("stages")) {
    StageNode node;
    node.kind = stage_kind_from_name(s.at("kind").get<std::string>());
    if (s.contains("params")) {
      for (const auto& [k, v] : s.at("params").items())
        node.params[k] = param_from_json(node.kind, k, v);
    }
    p.stages.push_back(std::move(node));
  }
  if (j.contains("hparams")) {
    const nlohmann::json& h = j.at("hparams");
    p.hparams.optimizer = optimizer_from_name(h.at("optimizer").get<std::string>());
    p.hparams.learning_rate = h.at("learning_rate").get<double>();
    p.hparams.batch_size = h.at("batch_size").get<int>();
  }
  return p;
}

std::uint64_t stage_prefix_hash(const Pipeline& p, int num_stages,
                                std::uint64_t base_seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "seed=%llu;",
                static_cast<unsigned long long>(base_seed));
  h = fnv1a(buf, h);
  h = fnv1a("opt=" + optimizer_name(p.hparams.optimizer) + ";", h);
  h = fnv1a("lr=" + param_value_exact(p.hparams.learning_rate) + ";", h);
  h = fnv1a("bs=" + std::to_string(p.hparams.batch_size) + ";", h);
  const int n = std::min<int>(num_stages, static_cast<int>(p.stages.size()));
  for (int i = 0; i < n; ++i) {
    h = fnv1a("|" + stage_kind_name(p.stages[i].kind), h);
    for (const auto& [k, v] : resolved_params(p.stages[i]))
      h = fnv1a(";" + k + "=" + param_value_exact(v), h);
  }
  return h;
}

ExecResult execute_pipeline(const Pipeline& p, Network net, const DataSplit& data,
                            const ExecOptions& opts) {
  ExecResult result;

  for (int i = opts.start_stage; i < static_cast<int>(p.stages.size()); ++i) {
    const StageNode& node = p.stages[static_cast<std::size_t>(i)];
    const auto params = resolved_params(node);
    const auto t0 = std::chrono::steady_clock::now();

    auto make_train_opts = [&](const CompositeLoss& loss) {
      TrainOptions t;
      t.epochs = as_int(params.at("epochs"));
      t.batch_size = p.hparams.batch_size;
      t.optimizer.kind = p.hparams.optimizer;
      t.optimizer.learning_rate = as_double(params.at("lr"));
      t.loss = loss;
      t.seed = Rng::derive(opts.seed, 0x7472u, static_cast<std::uint64_t>(i));
      return t;
    };

    switch (node.kind) {
      case StageKind::Tr: {
        refloat(net);
        TrainResult tr = train(net, data.x_train, data.y_train, data.x_val,
                               data.y_val, make_train_opts({}), opts.early_stop);
        result.train_seconds += tr.seconds;
        result.stopped_early = result.stopped_early || tr.stopped_early;
        break;
      }
      case StageKind::Reg: {
        refloat(net);
        CompositeLoss loss;
        loss.lambda_o = as_double(params.at("lambda_o"));
        loss.lambda_h = as_double(params.at("lambda_h"));
        const double aux = as_double(params.at("aux_weight"));
        if (as_bool(params.at("aux_sparsity"))) loss.sparsity_weight = aux;
        if (as_bool(params.at("aux_norm"))) loss.norm_weight = aux;
        if (as_bool(params.at("aux_lai"))) loss.lai_weight = aux;
        TrainResult tr = train(net, data.x_train, data.y_train, data.x_val,
                               data.y_val, make_train_opts(loss), opts.early_stop);
        result.train_seconds += tr.seconds;
        result.stopped_early = result.stopped_early || tr.stopped_early;
        break;
      }
      case StageKind::LR: {
        RankCriterion crit;
        crit.kind = rank_criterion_from_name(as_string(params.at("criterion")));
        crit.threshold = as_double(params.at("threshold"));
        decompose_network(net, crit);
        break;
      }
      case StageKind::Pr: {
        PruneSpec spec;
        spec.ratio = as_double(params.at("ratio"));
        spec.criterion.kind = importance_from_name(as_string(params.at("criterion")));
        spec.criterion.scope = as_string(params.at("scope")) == "global"
                                   ? PruneScope::Global
                                   : PruneScope::PerLayer;
        spec.structured = as_bool(params.at("structured"));
        const Tensor cx = head_rows(data.x_train, 64);
        const Tensor cy = head_rows(data.y_train, 64);
        prune(net, spec, &cx, &cy);
        if (spec.structured) compact(net);
        break;
      }
      case StageKind::QAT: {
        refloat(net);
        enable_qat(net);
        TrainResult tr = train(net, data.x_train, data.y_train, data.x_val,
                               data.y_val, make_train_opts({}), opts.early_stop);
        result.train_seconds += tr.seconds;
        result.stopped_early = result.stopped_early || tr.stopped_early;
        finalize_qat(net);
        break;
      }
      case StageKind::PDQ:
        apply_pdq(net);
        break;
      case StageKind::PTQ:
        apply_ptq(net, data.x_train, as_int(params.at("calib_batches")),
                  p.hparams.batch_size);
        break;
      case StageKind::FP16:
        to_fp16(net);
        break;
    }

    snap_to_precision(net);

    StageTrace t;
    t.kind = node.kind;
    t.size_mb = static_cast<double>(model_size_bytes(net)) / (1024.0 * 1024.0);
    t.val_quality = evaluate_quality(net, data.x_val, data.y_val);
    t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();
    result.trace.push_back(t);
    if (opts.on_stage) opts.on_stage(i, net, t);
  }

  result.net = std::move(net);
  return result;
}

}  // namespace petra
