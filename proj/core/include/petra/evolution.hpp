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

#ifndef PETRA_EVOLUTION_HPP_
#define PETRA_EVOLUTION_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "petra/data.hpp"
#include "petra/mutation.hpp"
#include "petra/network.hpp"
#include "petra/objectives.hpp"
#include "petra/pipeline.hpp"

namespace petra {

enum class InitMode : std::uint8_t { Pretrained = 0, Untrained = 1 };

std::string init_mode_name(InitMode m);
InitMode init_mode_from_name(const std::string& s);

struct EvolutionConfig {
  int population_size = 8;
  int max_generations = 10;
  double time_budget_seconds = 0.0;         // 0 disables
  std::optional<double> quality_threshold;  // stop when archive best reaches it
  std::uint64_t seed = 42;
  InitMode init_mode = InitMode::Pretrained;
  double p_min = 0.02;
  double random_fraction = 0.25;  // share of parents drawn uniformly
  double early_stop_delta = 0.05;
  int early_stop_patience = 3;
  int early_stop_warmup = 3;
  int max_depth = 6;
  int workers = 1;
  ObjectiveConfig objectives;
  // Test hook: abort cleanly after this generation's barrier (-1 disables).
  int stop_after_generation = -1;
};

struct Individual {
  int id = -1;
  Pipeline pipeline;
  std::optional<MetricVector> metrics;  // nullopt while quarantined
  int parent_id = -1;                   // -1 for the initial population
  int operator_index = -1;
  int generation = 0;
  bool quarantined = false;
  std::string error;
};

struct GenerationRecord {
  int generation = 0;
  double hypervolume = 0.0;  // recomputed against the final reference
  int archive_size = 0;
  std::vector<int> archive_ids;
  std::vector<double> operator_probabilities;
};

struct EvolutionResult {
  std::vector<Individual> evaluated;  // every individual, in id order
  std::vector<int> archive_ids;
  std::vector<GenerationRecord> history;
  MetricVector original;
  std::string stop_reason;
};

// Objective vectors for `all` with unavailable axes imputed against the
// same population; indexing follows `all`.
std::vector<std::vector<double>> population_objectives(
    const std::vector<MetricVector>& all, const ObjectiveConfig& config);

// Componentwise minimum minus epsilon, so every point dominates it.
std::vector<double> reference_point(const std::vector<std::vector<double>>& objs,
                                    double epsilon = 1e-6);

// Runs the search, writing state under run_dir (created if needed):
// history.jsonl, individuals/<id>/{pipeline.json,metrics.json,model.ckpt},
// archive.json, state.json, original.json, cache/ stage checkpoints.
// With resume=true the loop continues from run_dir's saved state.
EvolutionResult run_evolution(const EvolutionConfig& cfg, const Network& base,
                              const DataSplit& data, const std::string& run_dir,
                              bool resume = false);

}  // namespace petra

#endif  // PETRA_EVOLUTION_HPP_
