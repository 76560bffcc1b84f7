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

#ifndef PETRA_MUTATION_HPP_
#define PETRA_MUTATION_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "petra/pipeline.hpp"
#include "petra/rng.hpp"

namespace petra {

enum class MutationKind : std::uint8_t {
  LocalParamTweak = 0,   // perturb one stage hyperparameter in range
  LocalStageSwap = 1,    // replace one stage's kind in place
  OptimizerChange = 2,   // perturb the model-level hyperparameters
  LossChange = 3,        // change loss coefficients / toggle regularizers
  StageInsert = 4,
  StageDelete = 5,
  StageReorder = 6,
};

std::string mutation_kind_name(MutationKind k);

struct MutationOperator {
  MutationKind kind = MutationKind::LocalParamTweak;
  std::int64_t applications = 0;
  std::int64_t successes = 0;  // offspring entered the archive
  double probability = 0.0;
};

// All seven operators at uniform probability.
std::vector<MutationOperator> default_operators();

// p ~ (successes+1)/(applications+2), normalized, floored at p_min with the
// remaining mass rescaled over the unfloored operators.
void adapt_probabilities(std::vector<MutationOperator>& ops, double p_min);

// Draws one from each spec: uniform for continuous/ordinal/categorical,
// log-uniform for log-scaled continuous, fair coin for booleans.
ParamValue sample_param(const ParamSpec& spec, Rng& rng);
// In-range step away from `current` (guaranteed different when the range
// allows it): relative step for continuous, adjacent for ordinal, uniform
// over the other choices for categorical, flip for boolean.
ParamValue perturb_param(const ParamSpec& spec, const ParamValue& current, Rng& rng);

// Random valid pipeline of 1..max_depth stages with sampled hyperparameters.
// require_training_first forces stage 1 into {Tr, Reg, QAT}.
Pipeline sample_pipeline(Rng& rng, bool require_training_first, int max_depth = 3);

struct MutationResult {
  bool ok = false;
  Pipeline pipeline;
  int operator_index = -1;  // the operator whose application succeeded
};

// Samples an operator by the current probabilities and applies it; invalid
// offspring trigger a fresh sample, up to max_attempts in total.
MutationResult mutate(const Pipeline& parent, const std::vector<MutationOperator>& ops,
                      Rng& rng, int max_attempts = 32, int max_depth = 6);

}  // namespace petra

#endif  // PETRA_MUTATION_HPP_
