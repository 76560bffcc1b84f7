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

#ifndef PETRA_PIPELINE_HPP_
#define PETRA_PIPELINE_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "petra/data.hpp"
#include "petra/nn.hpp"
#include "petra/schema.hpp"

namespace petra {

struct StageNode {
  StageKind kind = StageKind::Tr;
  std::map<std::string, ParamValue> params;
};

// Model-level hyperparameters shared by every training stage.
struct ModelHparams {
  OptimizerKind optimizer = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  int batch_size = 32;
};

struct Pipeline {
  std::vector<StageNode> stages;
  ModelHparams hparams;
};

struct ValidationResult {
  std::vector<std::string> violations;  // reject when non-empty
  std::vector<std::string> notes;       // accepted with a semantics flag
  bool ok() const { return violations.empty(); }
};

// Structural and range checks: known parameters within schema bounds, no
// missing required parameters, no training stage after a precision-lowering
// stage without the documented re-float note, quantization not applied twice
// in a row, at most one low-rank stage before retraining.
ValidationResult validate(const Pipeline& p);

// "Tr - Pr - PTQ" (with_params adds "Pr(ratio=0.5, criterion=magnitude)").
std::string pipeline_to_string(const Pipeline& p, bool with_params = false);
// Accepts the bare form, parenthesized parameters, and the QD/QS synonyms.
Pipeline parse_pipeline(const std::string& text);

nlohmann::json pipeline_to_json(const Pipeline& p);
Pipeline pipeline_from_json(const nlohmann::json& j);

// Identity of the work shared by two pipelines that agree on their first
// `num_stages` stages, the model hyperparameters, and the base seed; used
// as the checkpoint-reuse cache key.
std::uint64_t stage_prefix_hash(const Pipeline& p, int num_stages,
                                std::uint64_t base_seed);

struct StageTrace {
  StageKind kind = StageKind::Tr;
  double size_mb = 0.0;
  double val_quality = 0.0;  // task-native metric after this stage
  double seconds = 0.0;
};

struct ExecOptions {
  std::uint64_t seed = 0;
  int start_stage = 0;  // stages before this are assumed already applied
  // Called after each executed stage with the snapped network.
  std::function<void(int stage_index, const Network& net, const StageTrace& t)>
      on_stage;
  // Passed through to every training stage; return false to stop training.
  EarlyStopHook early_stop;
};

struct ExecResult {
  Network net;
  std::vector<StageTrace> trace;  // one entry per executed stage
  double train_seconds = 0.0;     // total time spent in training loops
  bool stopped_early = false;     // some training stage was cut short
};

// Runs the stage chain on `net` in order. The network is precision-snapped
// after every stage, so intermediate states serialize bit-exactly.
ExecResult execute_pipeline(const Pipeline& p, Network net, const DataSplit& data,
                            const ExecOptions& opts);

}  // namespace petra

#endif  // PETRA_PIPELINE_HPP_
