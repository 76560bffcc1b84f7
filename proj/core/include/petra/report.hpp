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

#ifndef PETRA_REPORT_HPP_
#define PETRA_REPORT_HPP_

#include <optional>
#include <string>
#include <vector>

#include "petra/objectives.hpp"

namespace petra {

enum class ReportFormat : std::uint8_t { Csv = 0, Md = 1, Txt = 2 };

ReportFormat report_format_from_name(const std::string& s);

struct ReportRow {
  std::string pipeline;  // "Original" for the baseline row
  MetricVector metrics;
  bool original = false;
};

// Column header for the task's quality metric.
std::string quality_metric_name(Task task);

// "14.003 / -24.9%" grammar; the original row shows the raw value only and
// unavailable values render as the infinity sign.
std::string format_cell(std::optional<double> value, std::optional<double> original,
                        bool original_row);

// Archive table: Original first, then one row per Pareto member. Columns:
// Pipeline, <quality metric>, CPU Latency (ms), GPU Latency (ms),
// CPU Throughput (IPS), GPU Throughput (IPS), Model Size (MB).
std::string render_report(const std::vector<ReportRow>& rows, Task task,
                          ReportFormat format);

// Baseline + final-archive rows read back from a run directory.
std::vector<ReportRow> collect_report_rows(const std::string& run_dir);

}  // namespace petra

#endif  // PETRA_REPORT_HPP_
