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

#ifndef PETRA_OBJECTIVES_HPP_
#define PETRA_OBJECTIVES_HPP_

#include <optional>
#include <string>
#include <vector>

#include "petra/network.hpp"

namespace petra {

// Raw measured metrics of one individual; GPU axes may be unavailable
// (int8 networks), matching the infinity entries in device-restricted rows.
struct MetricVector {
  Task task = Task::BinaryClassification;
  double quality = 0.0;  // ROC-AUC, F1-macro, or RMSE depending on task
  double cpu_latency_ms = 0.0;
  std::optional<double> gpu_latency_ms;
  double cpu_throughput_ips = 0.0;
  std::optional<double> gpu_throughput_ips;
  double size_mb = 0.0;
  int depth = 0;             // pipeline depth
  double train_seconds = 0.0;
  bool partial = false;      // individual was stopped early / quarantined
};

enum class ObjectiveAxis : std::uint8_t {
  Quality = 0,
  CpuLatency = 1,
  GpuLatency = 2,
  CpuThroughput = 3,
  GpuThroughput = 4,
  SizeMb = 5,
  Depth = 6,
  TrainSeconds = 7,
};

std::string objective_axis_name(ObjectiveAxis a);
ObjectiveAxis objective_axis_from_name(const std::string& s);

struct ObjectiveConfig {
  std::vector<ObjectiveAxis> axes{ObjectiveAxis::Quality, ObjectiveAxis::SizeMb};
};

// Raw value of an axis, maximization-aligned (costs negated, RMSE negated);
// nullopt when the axis is unavailable for this individual.
std::optional<double> objective_axis_value(const MetricVector& m, ObjectiveAxis axis);

// Maximization objective vector. Unavailable axes are imputed with the worst
// value observed in `population` on that axis, minus epsilon; dominance
// comparisons stay total across mixed-device populations.
std::vector<double> to_objectives(const MetricVector& m, const ObjectiveConfig& config,
                                  const std::vector<MetricVector>& population,
                                  double epsilon = 1e-6);

// 100 * (candidate - original) / original per axis; unavailable axes yield
// nullopt (rendered as an infinity token in reports).
std::optional<double> percent_change(std::optional<double> original,
                                     std::optional<double> candidate);

// "+x.x" / "-x.x" with one decimal, as the result tables format it.
std::string format_percent(std::optional<double> pct);

}  // namespace petra

#endif  // PETRA_OBJECTIVES_HPP_
