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

#include "petra/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "petra/errors.hpp"

namespace petra {

namespace fs = std::filesystem;
using nlohmann::json;

ReportFormat report_format_from_name(const std::string& s) {
  if (s == "csv") return ReportFormat::Csv;
  if (s == "md") return ReportFormat::Md;
  if (s == "txt") return ReportFormat::Txt;
  throw ConfigError("unknown report format " + s);
}

std::string quality_metric_name(Task task) {
  switch (task) {
    case Task::BinaryClassification: return "ROC-AUC";
    case Task::MulticlassClassification: return "F1-Macro";
    case Task::Regression: return "RMSE";
  }
  return "?";
}

std::string format_cell(std::optional<double> value, std::optional<double> original,
                        bool original_row) {
  if (!value.has_value()) return "∞";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", *value);
  if (original_row) return buf;
  return std::string(buf) + " / " + format_percent(percent_change(original, value));
}

namespace {

struct CellValues {
  std::optional<double> quality, cpu_lat, gpu_lat, cpu_tp, gpu_tp, size;
};

CellValues cell_values(const MetricVector& m) {
  CellValues v;
  v.quality = m.quality;
  v.cpu_lat = m.cpu_latency_ms;
  v.gpu_lat = m.gpu_latency_ms;
  v.cpu_tp = m.cpu_throughput_ips;
  v.gpu_tp = m.gpu_throughput_ips;
  v.size = m.size_mb;
  return v;
}

std::vector<std::string> header_cells(Task task) {
  return {"Pipeline",
          quality_metric_name(task),
          "CPU Latency (ms)",
          "GPU Latency (ms)",
          "CPU Throughput (IPS)",
          "GPU Throughput (IPS)",
          "Model Size (MB)"};
}

std::vector<std::string> row_cells(const ReportRow& row, const CellValues& base) {
  const CellValues v = cell_values(row.metrics);
  return {row.pipeline,
          format_cell(v.quality, base.quality, row.original),
          format_cell(v.cpu_lat, base.cpu_lat, row.original),
          format_cell(v.gpu_lat, base.gpu_lat, row.original),
          format_cell(v.cpu_tp, base.cpu_tp, row.original),
          format_cell(v.gpu_tp, base.gpu_tp, row.original),
          format_cell(v.size, base.size, row.original)};
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

// Columns count display width; the infinity sign is multi-byte but one glyph.
std::size_t display_width(const std::string& s) {
  std::size_t w = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++w;
  return w;
}

}  // namespace

std::string render_report(const std::vector<ReportRow>& rows, Task task,
                          ReportFormat format) {
  if (rows.empty() || !rows.front().original)
    throw ConfigError("report needs the original row first");
  const CellValues base = cell_values(rows.front().metrics);

  std::vector<std::vector<std::string>> table;
  table.push_back(header_cells(task));
  for (const ReportRow& row : rows) table.push_back(row_cells(row, base));

  std::ostringstream out;
  switch (format) {
    case ReportFormat::Csv:
      for (const auto& r : table) {
        for (std::size_t i = 0; i < r.size(); ++i) {
          if (i) out << ",";
          out << csv_escape(r[i]);
        }
        out << "\n";
      }
      break;
    case ReportFormat::Md: {
      for (std::size_t ri = 0; ri < table.size(); ++ri) {
        out << "|";
        for (const std::string& c : table[ri]) out << " " << c << " |";
        out << "\n";
        if (ri == 0) {
          out << "|";
          for (std::size_t i = 0; i < table[0].size(); ++i) out << " --- |";
          out << "\n";
        }
      }
      break;
    }
    case ReportFormat::Txt: {
      std::vector<std::size_t> width(table[0].size(), 0);
      for (const auto& r : table)
        for (std::size_t i = 0; i < r.size(); ++i)
          width[i] = std::max(width[i], display_width(r[i]));
      for (const auto& r : table) {
        for (std::size_t i = 0; i < r.size(); ++i) {
          out << r[i]
              << std::string(width[i] - display_width(r[i]) + 2, ' ');
        }
        out << "\n";
      }
      break;
    }
  }
  return out.str();
}

std::vector<ReportRow> collect_report_rows(const std::string& run_dir_s) {
  const fs::path run_dir(run_dir_s);
  auto read = [](const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot read " + p.string());
    return json::parse(in);
  };

  auto metrics_of = [](const json& j) {
    MetricVector m;
    m.task = task_from_name(j.at("task").get<std::string>());
    m.quality = j.at("quality").get<double>();
    m.cpu_latency_ms = j.at("cpu_latency_ms").get<double>();
    if (!j.at("gpu_latency_ms").is_null())
      m.gpu_latency_ms = j.at("gpu_latency_ms").get<double>();
    m.cpu_throughput_ips = j.at("cpu_throughput_ips").get<double>();
    if (!j.at("gpu_throughput_ips").is_null())
      m.gpu_throughput_ips = j.at("gpu_throughput_ips").get<double>();
    m.size_mb = j.at("size_mb").get<double>();
    m.depth = j.at("depth").get<int>();
    m.train_seconds = j.at("train_seconds").get<double>();
    m.partial = j.at("partial").get<bool>();
    return m;
  };

  std::vector<ReportRow> rows;
  ReportRow original;
  original.pipeline = "Original";
  original.original = true;
  original.metrics = metrics_of(read(run_dir / "original.json"));
  rows.push_back(std::move(original));

  const json archive = read(run_dir / "archive.json");
  for (const json& member : archive.at("members")) {
    const int id = member.at("id").get<int>();
    const fs::path dir = run_dir / "individuals" / std::to_string(id);
    const json mj = read(dir / "metrics.json");
    if (!mj.contains("metrics")) continue;
    ReportRow row;
    row.pipeline = member.at("pipeline").get<std::string>();
    row.metrics = metrics_of(mj.at("metrics"));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace petra
