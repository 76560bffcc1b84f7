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

#ifndef PETRA_RUN_CONFIG_HPP_
#define PETRA_RUN_CONFIG_HPP_

#include <cstdint>
#include <string>

#include "json.hpp"
#include "petra/dataset.hpp"
#include "petra/evolution.hpp"

namespace petra {

struct DatasetSpec {
  bool synthetic = true;
  std::string name = "two_gaussian";  // two_gaussian | image_blobs | timeseries
  int samples = 400;
  int dim = 16;     // two_gaussian feature count
  int window = 16;  // timeseries lag window
  std::string path;
  DatasetFormat format = DatasetFormat::TabularCsv;
  Task task = Task::BinaryClassification;
};

struct ModelSpec {
  std::string architecture = "mlp";  // mlp | tiny_cnn
  int hidden = 64;
};

struct PretrainSpec {
  int epochs = 25;
  double learning_rate = 1e-2;
  int batch_size = 32;
};

struct RunConfig {
  DatasetSpec dataset;
  ModelSpec model;
  PretrainSpec pretrain;
  EvolutionConfig evolution;
  std::string output_dir = "petra-run";
};

// Strict: unknown keys anywhere in the document are rejected with their path.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);
nlohmann::json run_config_to_json(const RunConfig& cfg);

// Stable digest of everything that affects results (not output_dir); resume
// refuses a directory whose stored hash disagrees.
std::uint64_t run_config_hash(const RunConfig& cfg);

Dataset materialize_dataset(const DatasetSpec& spec);

// Architecture from the model spec; Pretrained mode trains it on the split
// with the pretrain settings, Untrained mode returns it at initialization.
Network build_base_model(const RunConfig& cfg, const Dataset& ds,
                         const DataSplit& split);

}  // namespace petra

#endif  // PETRA_RUN_CONFIG_HPP_
