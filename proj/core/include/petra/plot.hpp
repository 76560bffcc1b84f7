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

#ifndef PETRA_PLOT_HPP_
#define PETRA_PLOT_HPP_

#include <string>
#include <vector>

#include "petra/report.hpp"

namespace petra {

// Self-contained SVG: per-metric percent change versus the original, bars
// grouped by pipeline. Unavailable metrics are skipped (no bar).
std::string render_percent_change_svg(const std::vector<ReportRow>& rows);

void write_plot(const std::string& run_dir, const std::string& filename = "plot.svg");

}  // namespace petra

#endif  // PETRA_PLOT_HPP_
