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

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "petra/dataset.hpp"
#include "petra/objectives.hpp"
#include "petra/report.hpp"
#include "petra/run_config.hpp"

using namespace petra;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("csv loading and error reporting") {
  const std::string good = write_temp("petra_ds_good.csv",
                                      "a,b,label\n1,2,0\n3,4,1\n5,6,0\n");
  const Dataset ds = load_dataset(good, DatasetFormat::TabularCsv,
                                  Task::BinaryClassification);
  CHECK(ds.features.shape() == std::vector<int>{3, 2});
  CHECK(ds.targets.shape() == std::vector<int>{3, 1});
  CHECK(ds.features.at(1, 0) == 3.0);
  CHECK(ds.targets[1] == 1.0);
  std::filesystem::remove(good);

  const std::string ragged = write_temp("petra_ds_ragged.csv",
                                        "a,b,label\n1,2,0\n3,4\n");
  CHECK_THROWS_WITH_AS(
      (void)load_dataset(ragged, DatasetFormat::TabularCsv, Task::BinaryClassification),
      doctest::Contains("line 3"), DataError);
  std::filesystem::remove(ragged);

  const std::string junk = write_temp("petra_ds_junk.csv",
                                      "a,b,label\n1,zap,0\n");
  CHECK_THROWS_AS((void)load_dataset(junk, DatasetFormat::TabularCsv,
                                     Task::BinaryClassification),
                  DataError);
  std::filesystem::remove(junk);

  CHECK_THROWS_AS((void)load_dataset("/nonexistent/z.csv", DatasetFormat::TabularCsv,
                                     Task::BinaryClassification),
                  DataError);
}

TEST_CASE("image binary round-trip") {
  const Dataset ds = synth_image_blobs(40, 1);
  const std::string path =
      (std::filesystem::temp_directory_path() / "petra_imgs.bin").string();
  save_image_binary(path, ds);
  const Dataset back = load_dataset(path, DatasetFormat::ImageBinary,
                                    Task::MulticlassClassification);
  CHECK(back.features.shape() == ds.features.shape());
  CHECK(back.input_shape == ds.input_shape);
  CHECK(back.num_classes == 10);
  for (std::int64_t i = 0; i < ds.targets.size(); ++i) {
    CHECK(back.targets[i] == ds.targets[i]);
  }
  std::filesystem::remove(path);
}

TEST_CASE("split is a disjoint 70/15/15 partition with train-stat normalization") {
  const Dataset ds = synth_two_gaussian(200, 5, 0x5EED);
  const DataSplit s = split_dataset(ds, 42);
  const int n_train = s.x_train.dim(0);
  const int n_val = s.x_val.dim(0);
  const int n_test = s.x_test.dim(0);
  CHECK(n_train + n_val + n_test == 200);
  CHECK(n_train == 140);
  CHECK(n_val == 30);
  // Train features are z-scored: per-column mean 0, variance 1.
  for (int c = 0; c < 5; ++c) {
    double mean = 0.0, var = 0.0;
    for (int r = 0; r < n_train; ++r) mean += s.x_train.at(r, c);
    mean /= n_train;
    for (int r = 0; r < n_train; ++r) {
      const double d = s.x_train.at(r, c) - mean;
      var += d * d;
    }
    var /= n_train;
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
  }
  // Deterministic in the seed.
  const DataSplit t = split_dataset(ds, 42);
  CHECK(t.x_train.data() == s.x_train.data());
  const DataSplit u = split_dataset(ds, 43);
  CHECK(u.x_train.data() != s.x_train.data());
}

TEST_CASE("synthetic generators are shaped and labeled correctly") {
  const Dataset g = synth_two_gaussian(100, 4, 1);
  CHECK(g.task == Task::BinaryClassification);
  CHECK(g.features.shape() == std::vector<int>{100, 4});
  const Dataset img = synth_image_blobs(50, 2);
  CHECK(img.task == Task::MulticlassClassification);
  CHECK(img.input_shape == std::vector<int>{1, 16, 16});
  CHECK(img.features.dim(1) == 256);
  const Dataset ts = synth_timeseries(120, 8, 3);
  CHECK(ts.task == Task::Regression);
  CHECK(ts.features.dim(1) == 8);
}

TEST_CASE("objective axes orient all metrics upward") {
  MetricVector m;
  m.task = Task::BinaryClassification;
  m.quality = 0.9;
  m.cpu_latency_ms = 2.0;
  m.cpu_throughput_ips = 500.0;
  m.size_mb = 0.25;
  m.depth = 3;
  m.train_seconds = 4.0;
  m.gpu_latency_ms = std::nullopt;
  CHECK(*objective_axis_value(m, ObjectiveAxis::Quality) == doctest::Approx(0.9));
  CHECK(*objective_axis_value(m, ObjectiveAxis::CpuLatency) == doctest::Approx(-2.0));
  CHECK(*objective_axis_value(m, ObjectiveAxis::CpuThroughput) == doctest::Approx(500.0));
  CHECK(*objective_axis_value(m, ObjectiveAxis::SizeMb) == doctest::Approx(-0.25));
  CHECK_FALSE(objective_axis_value(m, ObjectiveAxis::GpuLatency).has_value());
  MetricVector r = m;
  r.task = Task::Regression;
  r.quality = 2.0;  // RMSE, lower is better
  CHECK(*objective_axis_value(r, ObjectiveAxis::Quality) == doctest::Approx(-2.0));
}

TEST_CASE("percent change formatting follows the report grammar") {
  CHECK(format_percent(percent_change(2.0, 1.0)) == "-50.0%");
  CHECK(format_percent(percent_change(2.0, 3.0)) == "+50.0%");
  CHECK(format_percent(percent_change(2.0, 2.0)) == "+0.0%");
  CHECK(format_percent(percent_change(0.0, 1.0)) == "∞");
  CHECK_FALSE(percent_change(std::nullopt, 1.0).has_value());
  CHECK_FALSE(percent_change(1.0, std::nullopt).has_value());
}

TEST_CASE("report cells and headers across formats") {
  MetricVector orig;
  orig.task = Task::BinaryClassification;
  orig.quality = 0.96;
  orig.cpu_latency_ms = 2.0;
  orig.gpu_latency_ms = 1.0;
  orig.cpu_throughput_ips = 1000.0;
  orig.gpu_throughput_ips = 4000.0;
  orig.size_mb = 1.0;
  MetricVector cand = orig;
  cand.quality = 0.94;
  cand.size_mb = 0.5;
  cand.gpu_latency_ms = std::nullopt;   // int8: no GPU profile
  cand.gpu_throughput_ips = std::nullopt;

  CHECK(format_cell(0.96, 0.96, true) == "0.960");
  CHECK(format_cell(0.5, 1.0, false) == "0.500 / -50.0%");
  CHECK(format_cell(std::nullopt, 1.0, false) == "∞");

  const std::vector<ReportRow> rows{{"Original", orig, true},
                                    {"Tr - Pr - PDQ", cand, false}};
  const std::string csv = render_report(rows, Task::BinaryClassification,
                                        ReportFormat::Csv);
  CHECK(csv.find("Pipeline") != std::string::npos);
  CHECK(csv.find("ROC-AUC") != std::string::npos);
  CHECK(csv.find("0.500 / -50.0%") != std::string::npos);
  CHECK(csv.find("∞") != std::string::npos);
  const std::string md = render_report(rows, Task::BinaryClassification,
                                       ReportFormat::Md);
  CHECK(md.find("| Pipeline") != std::string::npos);
  CHECK(md.find("| ---") != std::string::npos);
  const std::string txt = render_report(rows, Task::BinaryClassification,
                                        ReportFormat::Txt);
  CHECK(txt.find("Original") != std::string::npos);
  CHECK(quality_metric_name(Task::MulticlassClassification) == "F1-Macro");
  CHECK(quality_metric_name(Task::Regression) == "RMSE");
}

TEST_CASE("run config parsing rejects unknown keys and bad values") {
  const nlohmann::json ok = {
      {"dataset", {{"source", "synthetic"}, {"name", "two_gaussian"},
                   {"samples", 200}, {"dim", 8}}},
      {"model", {{"architecture", "mlp"}, {"hidden", 16}}},
      {"evolution", {{"population_size", 4}, {"max_generations", 2}, {"seed", 7}}},
      {"output_dir", "/tmp/petra-test-run"}};
  const RunConfig cfg = parse_run_config(ok);
  CHECK(cfg.evolution.population_size == 4);
  CHECK(cfg.evolution.seed == 7);
  CHECK(cfg.model.hidden == 16);

  nlohmann::json bad = ok;
  bad["mystery"] = 1;
  CHECK_THROWS_AS((void)parse_run_config(bad), ConfigError);
  nlohmann::json bad2 = ok;
  bad2["evolution"]["wrong_knob"] = true;
  CHECK_THROWS_AS((void)parse_run_config(bad2), ConfigError);
  nlohmann::json bad3 = ok;
  bad3["model"]["architecture"] = "transformer";
  CHECK_THROWS_AS((void)parse_run_config(bad3), ConfigError);

  // Hash ignores output_dir and worker count but keys on everything else.
  RunConfig a = cfg, b = cfg;
  b.output_dir = "/elsewhere";
  b.evolution.workers = 8;
  CHECK(run_config_hash(a) == run_config_hash(b));
  b.evolution.seed = 8;
  CHECK(run_config_hash(a) != run_config_hash(b));
}

TEST_CASE("synthetic data is independent of the run seed") {
  DatasetSpec spec;
  spec.samples = 50;
  spec.dim = 4;
  const Dataset a = materialize_dataset(spec);
  const Dataset b = materialize_dataset(spec);
  CHECK(a.features.data() == b.features.data());
  CHECK(a.targets.data() == b.targets.data());
}
