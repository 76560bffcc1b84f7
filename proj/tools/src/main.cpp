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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "petra/checkpoint.hpp"
#include "petra/errors.hpp"
#include "petra/evolution.hpp"
#include "petra/nn.hpp"
#include "petra/plot.hpp"
#include "petra/report.hpp"
#include "petra/run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitRun = 4;

int workers_from_env() {
  const char* env = std::getenv("PETRA_WORKERS");
  if (env == nullptr) return 1;
  const int n = std::atoi(env);
  return n > 0 ? n : 1;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw petra::IoError("cannot read " + path.string());
  return json::parse(in);
}

void print_summary(const petra::EvolutionResult& result,
                   const std::string& run_dir) {
  std::cout << "stop reason: " << result.stop_reason << "\n";
  std::cout << "evaluated individuals: " << result.evaluated.size() << "\n";
  std::cout << "archive size: " << result.archive_ids.size() << "\n";
  if (!result.history.empty())
    std::cout << "final hypervolume: " << result.history.back().hypervolume
              << "\n";
  std::cout << "\n"
            << petra::render_report(petra::collect_report_rows(run_dir),
                                    result.original.task,
                                    petra::ReportFormat::Txt);
}

int run_from_config(petra::RunConfig cfg, bool resume) {
  const petra::Dataset ds = petra::materialize_dataset(cfg.dataset);
  const petra::DataSplit split = petra::split_dataset(ds, cfg.evolution.seed);
  const petra::Network base = petra::build_base_model(cfg, ds, split);

  fs::create_directories(cfg.output_dir);
  if (!resume) {
    json snapshot = petra::run_config_to_json(cfg);
    snapshot["config_hash"] = petra::run_config_hash(cfg);
    std::ofstream out(fs::path(cfg.output_dir) / "config.json");
    out << snapshot.dump(2) << "\n";
    petra::save_checkpoint(base,
                           (fs::path(cfg.output_dir) / "base.ckpt").string());
  }

  const petra::EvolutionResult result =
      petra::run_evolution(cfg.evolution, base, split, cfg.output_dir, resume);
  print_summary(result, cfg.output_dir);
  return kExitOk;
}

petra::RunConfig config_from_run_dir(const std::string& dir) {
  const json snapshot = read_json(fs::path(dir) / "config.json");
  json stored = snapshot;
  stored.erase("config_hash");
  petra::RunConfig cfg = petra::parse_run_config(stored);
  if (snapshot.contains("config_hash") &&
      snapshot.at("config_hash").get<std::uint64_t>() !=
          petra::run_config_hash(cfg))
    throw petra::ConfigError("config hash mismatch in " + dir +
                             "; refusing to resume");
  cfg.output_dir = dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PETRA: evolutionary search over compression pipelines"};
  app.require_subcommand(1);

  std::string config_path, run_dir, report_format = "txt";
  std::string checkpoint_path, data_path, data_format = "tabular_csv";
  std::string task_kind = "binary_classification";
  std::optional<std::uint64_t> seed_override;
  std::optional<int> generations_override;
  int stop_after = -1;

  CLI::App* cmd_run = app.add_subcommand("run", "start a search run");
  cmd_run->add_option("--config", config_path, "run configuration file")
      ->required();
  cmd_run->add_option("--seed", seed_override, "override evolution.seed");
  cmd_run->add_option("--generations", generations_override,
                      "override evolution.max_generations");
  cmd_run
      ->add_option("--stop-after-generation", stop_after,
                   "abort cleanly after this generation (testing hook)")
      ->group("");

  CLI::App* cmd_resume = app.add_subcommand("resume", "continue a run");
  cmd_resume->add_option("dir", run_dir, "run directory")->required();

  CLI::App* cmd_report = app.add_subcommand("report", "emit the archive table");
  cmd_report->add_option("dir", run_dir, "run directory")->required();
  cmd_report->add_option("--format", report_format, "csv, md, or txt")
      ->check(CLI::IsMember({"csv", "md", "txt"}));

  CLI::App* cmd_plot = app.add_subcommand("plot", "emit the percent-change chart");
  cmd_plot->add_option("dir", run_dir, "run directory")->required();

  CLI::App* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint");
  cmd_eval->add_option("--checkpoint", checkpoint_path, "model checkpoint")
      ->required();
  cmd_eval->add_option("--data", data_path, "dataset file")->required();
  cmd_eval->add_option("--data-format", data_format,
                       "tabular_csv, image_binary, or timeseries_csv");
  cmd_eval->add_option("--task", task_kind, "task kind for csv data");
  std::uint64_t eval_seed = 42;
  cmd_eval->add_option("--seed", eval_seed, "split seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) {
      petra::RunConfig cfg = petra::load_run_config(config_path);
      if (seed_override) cfg.evolution.seed = *seed_override;
      if (generations_override)
        cfg.evolution.max_generations = *generations_override;
      cfg.evolution.stop_after_generation = stop_after;
      cfg.evolution.workers = workers_from_env();
      return run_from_config(std::move(cfg), false);
    }
    if (cmd_resume->parsed()) {
      petra::RunConfig cfg = config_from_run_dir(run_dir);
      cfg.evolution.workers = workers_from_env();
      return run_from_config(std::move(cfg), true);
    }
    if (cmd_report->parsed()) {
      const auto rows = petra::collect_report_rows(run_dir);
      const std::string text = petra::render_report(
          rows, rows.front().metrics.task,
          petra::report_format_from_name(report_format));
      std::cout << text;
      std::ofstream out(fs::path(run_dir) / ("report." + report_format));
      out << text;
      return kExitOk;
    }
    if (cmd_plot->parsed()) {
      petra::write_plot(run_dir);
      std::cout << (fs::path(run_dir) / "plot.svg").string() << "\n";
      return kExitOk;
    }
    if (cmd_eval->parsed()) {
      petra::Network net = petra::load_checkpoint(checkpoint_path);
      petra::Task task = petra::Task::BinaryClassification;
      if (task_kind == "multiclass_classification")
        task = petra::Task::MulticlassClassification;
      else if (task_kind == "regression")
        task = petra::Task::Regression;
      else if (task_kind != "binary_classification")
        throw petra::ConfigError("unknown task " + task_kind);
      const petra::Dataset ds = petra::load_dataset(
          data_path, petra::dataset_format_from_name(data_format), task);
      const petra::DataSplit split = petra::split_dataset(ds, eval_seed);
      json out;
      out["quality"] = petra::evaluate_quality(net, split.x_val, split.y_val);
      out["quality_metric"] = petra::quality_metric_name(net.task);
      out["size_mb"] = static_cast<double>(petra::model_size_bytes(net)) /
                       (1024.0 * 1024.0);
      out["parameters"] = petra::count_parameters(net);
      std::cout << out.dump(2) << "\n";
      return kExitOk;
    }
  } catch (const petra::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const petra::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return kExitRun;
  }
  return kExitConfig;
}
