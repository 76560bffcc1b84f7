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

#include "petra/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "petra/errors.hpp"

namespace petra {

namespace {

struct Series {
  std::string label;
  std::string color;
  std::vector<std::optional<double>> pct;  // per pipeline
};

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string render_percent_change_svg(const std::vector<ReportRow>& rows) {
  if (rows.size() < 2 || !rows.front().original)
    throw ConfigError("plot needs the original row plus at least one pipeline");
  const MetricVector& base = rows.front().metrics;

  std::vector<std::string> pipelines;
  std::vector<Series> series = {
      {"Quality", "#4878cf", {}},        {"CPU Latency", "#ee854a", {}},
      {"GPU Latency", "#d65f5f", {}},    {"CPU Throughput", "#6acc64", {}},
      {"GPU Throughput", "#956cb4", {}}, {"Model Size", "#8c613c", {}},
  };
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const MetricVector& m = rows[r].metrics;
    pipelines.push_back(rows[r].pipeline);
    series[0].pct.push_back(percent_change(base.quality, m.quality));
    series[1].pct.push_back(percent_change(base.cpu_latency_ms, m.cpu_latency_ms));
    series[2].pct.push_back(percent_change(base.gpu_latency_ms, m.gpu_latency_ms));
    series[3].pct.push_back(
        percent_change(base.cpu_throughput_ips, m.cpu_throughput_ips));
    series[4].pct.push_back(
        percent_change(base.gpu_throughput_ips, m.gpu_throughput_ips));
    series[5].pct.push_back(percent_change(base.size_mb, m.size_mb));
  }

  double lo = 0.0, hi = 0.0;
  for (const Series& s : series)
    for (const auto& p : s.pct)
      if (p) {
        lo = std::min(lo, *p);
        hi = std::max(hi, *p);
      }
  if (hi - lo < 1.0) hi = lo + 1.0;
  lo -= 0.08 * (hi - lo);
  hi += 0.08 * (hi - lo);

  const int n_groups = static_cast<int>(pipelines.size());
  const int n_series = static_cast<int>(series.size());
  const double bar_w = 14.0;
  const double group_w = bar_w * n_series + 30.0;
  const double margin_l = 70.0, margin_r = 30.0, margin_t = 50.0, margin_b = 120.0;
  const double plot_h = 320.0;
  const double width = margin_l + margin_r + group_w * n_groups;
  const double height = margin_t + plot_h + margin_b;
  auto y_of = [&](double pct) {
    return margin_t + plot_h * (hi - pct) / (hi - lo);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" font-family=\"sans-serif\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2
      << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
         "Percent change versus original</text>\n";

  // horizontal grid lines and axis labels
  for (int tick = 0; tick <= 5; ++tick) {
    const double pct = lo + (hi - lo) * tick / 5.0;
    const double y = y_of(pct);
    svg << "<line x1=\"" << margin_l << "\" y1=\"" << y << "\" x2=\""
        << width - margin_r << "\" y2=\"" << y
        << "\" stroke=\"#dddddd\"/>\n";
    char lbl[32];
    std::snprintf(lbl, sizeof lbl, "%.0f%%", pct);
    svg << "<text x=\"" << margin_l - 8 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << lbl << "</text>\n";
  }
  // zero line
  svg << "<line x1=\"" << margin_l << "\" y1=\"" << y_of(0.0) << "\" x2=\""
      << width - margin_r << "\" y2=\"" << y_of(0.0)
      << "\" stroke=\"#333333\"/>\n";

  for (int g = 0; g < n_groups; ++g) {
    const double gx = margin_l + group_w * g + 15.0;
    for (int s = 0; s < n_series; ++s) {
      const auto& p = series[static_cast<std::size_t>(s)]
                          .pct[static_cast<std::size_t>(g)];
      if (!p) continue;
      const double x = gx + bar_w * s;
      const double y0 = y_of(0.0);
      const double y1 = y_of(*p);
      svg << "<rect x=\"" << x << "\" y=\"" << std::min(y0, y1)
          << "\" width=\"" << bar_w - 2 << "\" height=\""
          << std::max(1.0, std::fabs(y1 - y0)) << "\" fill=\""
          << series[static_cast<std::size_t>(s)].color << "\"/>\n";
    }
    svg << "<text x=\"" << gx + bar_w * n_series / 2.0 << "\" y=\""
        << margin_t + plot_h + 16 << "\" text-anchor=\"end\" font-size=\"10\""
        << " transform=\"rotate(-35 " << gx + bar_w * n_series / 2.0 << " "
        << margin_t + plot_h + 16 << ")\">" << esc(pipelines[static_cast<std::size_t>(g)])
        << "</text>\n";
  }

  // legend
  double lx = margin_l;
  const double ly = height - 20.0;
  for (const Series& s : series) {
    svg << "<rect x=\"" << lx << "\" y=\"" << ly - 10 << "\" width=\"12\" "
        << "height=\"12\" fill=\"" << s.color << "\"/>\n";
    svg << "<text x=\"" << lx + 16 << "\" y=\"" << ly
        << "\" font-size=\"11\">" << s.label << "</text>\n";
    lx += 16.0 + 7.0 * static_cast<double>(s.label.size()) + 18.0;
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_plot(const std::string& run_dir, const std::string& filename) {
  const auto rows = collect_report_rows(run_dir);
  const std::string svg = render_percent_change_svg(rows);
  const std::filesystem::path path = std::filesystem::path(run_dir) / filename;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << svg;
}

}  // namespace petra
