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

#include "petra/mutation.hpp"

#include <algorithm>
#include <cmath>

#include "petra/errors.hpp"

namespace petra {

std::string mutation_kind_name(MutationKind k) {
  switch (k) {
    case MutationKind::LocalParamTweak: return "local_param_tweak";
    case MutationKind::LocalStageSwap: return "local_stage_swap";
    case MutationKind::OptimizerChange: return "optimizer_change";
    case MutationKind::LossChange: return "loss_change";
    case MutationKind::StageInsert: return "stage_insert";
    case MutationKind::StageDelete: return "stage_delete";
    case MutationKind::StageReorder: return "stage_reorder";
  }
  return "?";
}

std::vector<MutationOperator> default_operators() {
  std::vector<MutationOperator> ops;
  for (int k = 0; k <= static_cast<int>(MutationKind::StageReorder); ++k) {
    MutationOperator op;
    op.kind = static_cast<MutationKind>(k);
    ops.push_back(op);
  }
  for (auto& op : ops) op.probability = 1.0 / static_cast<double>(ops.size());
  return ops;
}

void adapt_probabilities(std::vector<MutationOperator>& ops, double p_min) {
  if (ops.empty()) return;
  double total = 0.0;
  for (auto& op : ops) {
    op.probability = (static_cast<double>(op.successes) + 1.0) /
                     (static_cast<double>(op.applications) + 2.0);
    total += op.probability;
  }
  for (auto& op : ops) op.probability /= total;

  // Water-fill the floor: pin violators at p_min, spread the rest.
  std::vector<bool> pinned(ops.size(), false);
  for (bool changed = true; changed;) {
    changed = false;
    double free_mass = 1.0;
    double free_total = 0.0;
    for (std::size_t i = 0; i < ops.size(); ++i) {
      if (pinned[i]) free_mass -= p_min;
      else free_total += ops[i].probability;
    }
    for (std::size_t i = 0; i < ops.size(); ++i) {
      if (pinned[i]) {
        ops[i].probability = p_min;
        continue;
      }
      const double p = ops[i].probability / free_total * free_mass;
      if (p < p_min) {
        pinned[i] = true;
        changed = true;
      } else {
        ops[i].probability = p;
      }
    }
  }
}

ParamValue sample_param(const ParamSpec& spec, Rng& rng) {
  switch (spec.type) {
    case ParamType::Continuous:
      return rng.uniform(spec.lo, spec.hi);
    case ParamType::ContinuousLog:
      return rng.log_uniform(spec.lo, spec.hi);
    case ParamType::Ordinal:
      return rng.uniform_int(spec.ilo, spec.ihi);
    case ParamType::Categorical:
      return spec.choices[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<int>(spec.choices.size()) - 1))];
    case ParamType::Boolean:
      return rng.uniform() < 0.5;
  }
  return spec.def;
}

ParamValue perturb_param(const ParamSpec& spec, const ParamValue& current, Rng& rng) {
  switch (spec.type) {
    case ParamType::Continuous: {
      const double cur = as_double(current);
      const double span = spec.hi - spec.lo;
      for (int attempt = 0; attempt < 8; ++attempt) {
        const double v =
            std::clamp(cur + rng.uniform(-0.2, 0.2) * span, spec.lo, spec.hi);
        if (v != cur) return v;
      }
      return rng.uniform(spec.lo, spec.hi);
    }
    case ParamType::ContinuousLog: {
      const double cur = as_double(current);
      for (int attempt = 0; attempt < 8; ++attempt) {
        const double factor = std::exp(rng.uniform(-std::log(4.0), std::log(4.0)));
        const double v = std::clamp(cur * factor, spec.lo, spec.hi);
        if (v != cur) return v;
      }
      return rng.log_uniform(spec.lo, spec.hi);
    }
    case ParamType::Ordinal: {
      const int cur = as_int(current);
      if (spec.ilo == spec.ihi) return cur;
      int v;
      if (cur <= spec.ilo) v = cur + 1;
      else if (cur >= spec.ihi) v = cur - 1;
      else v = (rng.uniform() < 0.5) ? cur - 1 : cur + 1;
      return v;
    }
    case ParamType::Categorical: {
      const std::string cur = as_string(current);
      std::vector<std::string> others;
      for (const std::string& c : spec.choices)
        if (c != cur) others.push_back(c);
      if (others.empty()) return cur;
      return others[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<int>(others.size()) - 1))];
    }
    case ParamType::Boolean:
      return !as_bool(current);
  }
  return current;
}

namespace {

constexpr int kNumStageKinds = static_cast<int>(StageKind::FP16) + 1;

StageNode sample_stage(StageKind kind, Rng& rng) {
  StageNode node;
  node.kind = kind;
  for (const ParamSpec& spec : stage_schema(kind))
    node.params[spec.name] = sample_param(spec, rng);
  return node;
}

StageKind random_kind(Rng& rng) {
  return static_cast<StageKind>(rng.uniform_int(0, kNumStageKinds - 1));
}

bool is_training_kind(StageKind k) {
  return k == StageKind::Tr || k == StageKind::Reg || k == StageKind::QAT;
}

// One application of one operator; false when the operator does not apply
// to this parent (e.g. delete on a depth-1 chain).
bool apply_operator(MutationKind kind, Pipeline& p, Rng& rng, int max_depth) {
  const int depth = static_cast<int>(p.stages.size());
  switch (kind) {
    case MutationKind::LocalParamTweak: {
      std::vector<int> candidates;
      for (int i = 0; i < depth; ++i)
        if (!stage_schema(p.stages[static_cast<std::size_t>(i)].kind).empty())
          candidates.push_back(i);
      if (candidates.empty()) return false;
      StageNode& node = p.stages[static_cast<std::size_t>(
          candidates[static_cast<std::size_t>(
              rng.uniform_int(0, static_cast<int>(candidates.size()) - 1))])];
      const auto& schema = stage_schema(node.kind);
      const ParamSpec& spec = schema[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<int>(schema.size()) - 1))];
      const ParamValue cur = node.params.count(spec.name)
                                 ? node.params.at(spec.name)
                                 : spec.def;
      node.params[spec.name] = perturb_param(spec, cur, rng);
      return true;
    }
    case MutationKind::LocalStageSwap: {
      const int i = rng.uniform_int(0, depth - 1);
      const StageKind old = p.stages[static_cast<std::size_t>(i)].kind;
      StageKind next = old;
      while (next == old) next = random_kind(rng);
      p.stages[static_cast<std::size_t>(i)] = sample_stage(next, rng);
      return true;
    }
    case MutationKind::OptimizerChange: {
      const int which = rng.uniform_int(0, 2);
      if (which == 0) {
        const OptimizerKind old = p.hparams.optimizer;
        while (p.hparams.optimizer == old) {
          p.hparams.optimizer = static_cast<OptimizerKind>(rng.uniform_int(0, 2));
        }
      } else if (which == 1) {
        const ParamSpec* spec = nullptr;
        for (const ParamSpec& s : model_hparam_schema())
          if (s.name == "learning_rate") spec = &s;
        p.hparams.learning_rate =
            as_double(perturb_param(*spec, p.hparams.learning_rate, rng));
      } else {
        const int bs = (rng.uniform() < 0.5) ? p.hparams.batch_size / 2
                                             : p.hparams.batch_size * 2;
        p.hparams.batch_size = std::clamp(bs, 8, 256);
      }
      return true;
    }
    case MutationKind::LossChange: {
      std::vector<int> regs;
      for (int i = 0; i < depth; ++i)
        if (p.stages[static_cast<std::size_t>(i)].kind == StageKind::Reg)
          regs.push_back(i);
      if (regs.empty()) {
        // Promote a plain training stage to a regularized one.
        std::vector<int> trains;
        for (int i = 0; i < depth; ++i)
          if (p.stages[static_cast<std::size_t>(i)].kind == StageKind::Tr)
            trains.push_back(i);
        if (trains.empty()) return false;
        const int i = trains[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int>(trains.size()) - 1))];
        p.stages[static_cast<std::size_t>(i)] = sample_stage(StageKind::Reg, rng);
        return true;
      }
      StageNode& node = p.stages[static_cast<std::size_t>(
          regs[static_cast<std::size_t>(
              rng.uniform_int(0, static_cast<int>(regs.size()) - 1))])];
      static const std::vector<std::string> loss_params = {
          "lambda_o", "lambda_h", "aux_sparsity", "aux_norm", "aux_lai",
          "aux_weight"};
      const std::string& name = loss_params[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<int>(loss_params.size()) - 1))];
      const ParamSpec* spec = find_param(StageKind::Reg, name);
      const ParamValue cur =
          node.params.count(name) ? node.params.at(name) : spec->def;
      node.params[name] = perturb_param(*spec, cur, rng);
      return true;
    }
    case MutationKind::StageInsert: {
      if (depth >= max_depth) return false;
      const int pos = rng.uniform_int(0, depth);
      p.stages.insert(p.stages.begin() + pos, sample_stage(random_kind(rng), rng));
      return true;
    }
    case MutationKind::StageDelete: {
      if (depth <= 1) return false;
      const int pos = rng.uniform_int(0, depth - 1);
      p.stages.erase(p.stages.begin() + pos);
      return true;
    }
    case MutationKind::StageReorder: {
      if (depth <= 1) return false;
      const int from = rng.uniform_int(0, depth - 1);
      int to = from;
      while (to == from) to = rng.uniform_int(0, depth - 1);
      StageNode node = std::move(p.stages[static_cast<std::size_t>(from)]);
      p.stages.erase(p.stages.begin() + from);
      p.stages.insert(p.stages.begin() + to, std::move(node));
      return true;
    }
  }
  return false;
}

}  // namespace

Pipeline sample_pipeline(Rng& rng, bool require_training_first, int max_depth) {
  for (int attempt = 0; attempt < 256; ++attempt) {
    Pipeline p;
    p.hparams.optimizer = static_cast<OptimizerKind>(rng.uniform_int(0, 2));
    for (const ParamSpec& spec : model_hparam_schema()) {
      if (spec.name == "learning_rate")
        p.hparams.learning_rate = as_double(sample_param(spec, rng));
      if (spec.name == "batch_size")
        p.hparams.batch_size = as_int(sample_param(spec, rng));
    }
    const int depth = rng.uniform_int(1, max_depth);
    for (int i = 0; i < depth; ++i) {
      StageKind kind = random_kind(rng);
      if (i == 0 && require_training_first) {
        while (!is_training_kind(kind)) kind = random_kind(rng);
      }
      p.stages.push_back(sample_stage(kind, rng));
    }
    if (validate(p).ok()) return p;
  }
  throw ConfigError("could not sample a valid pipeline");
}

MutationResult mutate(const Pipeline& parent, const std::vector<MutationOperator>& ops,
                      Rng& rng, int max_attempts, int max_depth) {
  MutationResult result;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    double u = rng.uniform();
    int idx = static_cast<int>(ops.size()) - 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < ops.size(); ++i) {
      acc += ops[i].probability;
      if (u < acc) {
        idx = static_cast<int>(i);
        break;
      }
    }
    Pipeline child = parent;
    if (!apply_operator(ops[static_cast<std::size_t>(idx)].kind, child, rng,
                        max_depth))
      continue;
    if (!validate(child).ok()) continue;
    result.ok = true;
    result.pipeline = std::move(child);
    result.operator_index = idx;
    return result;
  }
  return result;
}

}  // namespace petra
