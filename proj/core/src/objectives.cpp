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

#include "petra/objectives.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "petra/errors.hpp"
#include "petra/nn.hpp"

namespace petra {

std::string objective_axis_name(ObjectiveAxis a) {
  switch (a) {
    case ObjectiveAxis::Quality: return "quality";
    case ObjectiveAxis::CpuLatency: return "cpu_latency_ms";
    case ObjectiveAxis::GpuLatency: return "gpu_latency_ms";
    case ObjectiveAxis::CpuThroughput: return "cpu_throughput_ips";
    case ObjectiveAxis::GpuThroughput: return "gpu_throughput_ips";
    case ObjectiveAxis::SizeMb: return "size_mb";
    case ObjectiveAxis::Depth: return "depth";
    case ObjectiveAxis::TrainSeconds: return "train_seconds";
  }
  return "?";
}

ObjectiveAxis objective_axis_from_name(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(ObjectiveAxis::TrainSeconds); ++i) {
    const auto a = static_cast<ObjectiveAxis>(i);
    if (objective_axis_name(a) == s) return a;
  }
  throw ConfigError("unknown objective axis: " + s);
}

std::optional<double> objective_axis_value(const MetricVector& m, ObjectiveAxis axis) {
  switch (axis) {
    case ObjectiveAxis::Quality:
      return quality_score(m.quality, m.task);  // RMSE flips sign
    case ObjectiveAxis::CpuLatency:
      return -m.cpu_latency_ms;
    case ObjectiveAxis::GpuLatency:
      if (!m.gpu_latency_ms.has_value()) return std::nullopt;
      return -*m.gpu_latency_ms;
    case ObjectiveAxis::CpuThroughput:
      return m.cpu_throughput_ips;
    case ObjectiveAxis::GpuThroughput:
      return m.gpu_throughput_ips;
    case ObjectiveAxis::SizeMb:
      return -m.size_mb;
    case ObjectiveAxis::Depth:
      return -static_cast<double>(m.depth);
    case ObjectiveAxis::TrainSeconds:
      return -m.train_seconds;
  }
  return std::nullopt;
}

std::vector<double> to_objectives(const MetricVector& m, const ObjectiveConfig& config,
                                  const std::vector<MetricVector>& population,
                                  double epsilon) {
  if (config.axes.empty()) throw ConfigError("objective axis set is empty");
  std::vector<double> out;
  out.reserve(config.axes.size());
  for (ObjectiveAxis axis : config.axes) {
    const auto v = objective_axis_value(m, axis);
    if (v.has_value()) {
      out.push_back(*v);
      continue;
    }
    // Worst-in-population imputation.
    double worst = std::numeric_limits<double>::infinity();
    for (const MetricVector& p : population) {
      const auto pv = objective_axis_value(p, axis);
      if (pv.has_value()) worst = std::min(worst, *pv);
    }
    if (!std::isfinite(worst)) worst = 0.0;  // nobody has the axis
    out.push_back(worst - epsilon);
  }
  return out;
}

std::optional<double> percent_change(std::optional<double> original,
                                     std::optional<double> candidate) {
  if (!original.has_value() || !candidate.has_value() || *original == 0.0) {
    return std::nullopt;
  }
  return 100.0 * (*candidate - *original) / *original;
}

std::string format_percent(std::optional<double> pct) {
  if (!pct.has_value()) return "∞";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.1f%%", *pct);
  return buf;
}

}  // namespace petra
