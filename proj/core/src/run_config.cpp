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

#include "petra/run_config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "petra/errors.hpp"
#include "petra/nn.hpp"
#include "petra/rng.hpp"

namespace petra {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key))
      throw ConfigError("unknown key '" + where + key + "'");
  }
}

DatasetSpec parse_dataset(const json& j) {
  reject_unknown(j, {"source", "name", "samples", "dim", "window", "path",
                     "format", "task"},
                 "dataset.");
  DatasetSpec d;
  if (j.contains("source")) {
    const std::string src = j.at("source").get<std::string>();
    if (src == "synthetic") d.synthetic = true;
    else if (src == "file") d.synthetic = false;
    else throw ConfigError("dataset.source must be synthetic or file");
  }
  if (j.contains("name")) d.name = j.at("name").get<std::string>();
  if (j.contains("samples")) d.samples = j.at("samples").get<int>();
  if (j.contains("dim")) d.dim = j.at("dim").get<int>();
  if (j.contains("window")) d.window = j.at("window").get<int>();
  if (j.contains("path")) d.path = j.at("path").get<std::string>();
  if (j.contains("format"))
    d.format = dataset_format_from_name(j.at("format").get<std::string>());
  if (j.contains("task")) d.task = task_from_name(j.at("task").get<std::string>());
  if (!d.synthetic && d.path.empty())
    throw ConfigError("dataset.path required for file datasets");
  if (d.synthetic && d.name != "two_gaussian" && d.name != "image_blobs" &&
      d.name != "timeseries")
    throw ConfigError("unknown synthetic dataset " + d.name);
  if (d.samples < 10) throw ConfigError("dataset.samples too small");
  return d;
}

ModelSpec parse_model(const json& j) {
  reject_unknown(j, {"architecture", "hidden"}, "model.");
  ModelSpec m;
  if (j.contains("architecture"))
    m.architecture = j.at("architecture").get<std::string>();
  if (j.contains("hidden")) m.hidden = j.at("hidden").get<int>();
  if (m.architecture != "mlp" && m.architecture != "tiny_cnn")
    throw ConfigError("unknown architecture " + m.architecture);
  if (m.hidden < 1) throw ConfigError("model.hidden must be positive");
  return m;
}

PretrainSpec parse_pretrain(const json& j) {
  reject_unknown(j, {"epochs", "learning_rate", "batch_size"}, "pretrain.");
  PretrainSpec p;
  if (j.contains("epochs")) p.epochs = j.at("epochs").get<int>();
  if (j.contains("learning_rate"))
    p.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("batch_size")) p.batch_size = j.at("batch_size").get<int>();
  if (p.epochs < 1 || p.batch_size < 1 || p.learning_rate <= 0.0)
    throw ConfigError("invalid pretrain settings");
  return p;
}

EvolutionConfig parse_evolution(const json& j) {
  reject_unknown(j,
                 {"population_size", "max_generations", "time_budget_seconds",
                  "quality_threshold", "seed", "init_mode", "p_min",
                  "random_fraction", "early_stop_delta", "early_stop_patience",
                  "early_stop_warmup", "max_depth", "workers"},
                 "evolution.");
  EvolutionConfig e;
  if (j.contains("population_size"))
    e.population_size = j.at("population_size").get<int>();
  if (j.contains("max_generations"))
    e.max_generations = j.at("max_generations").get<int>();
  if (j.contains("time_budget_seconds"))
    e.time_budget_seconds = j.at("time_budget_seconds").get<double>();
  if (j.contains("quality_threshold"))
    e.quality_threshold = j.at("quality_threshold").get<double>();
  if (j.contains("seed")) e.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("init_mode"))
    e.init_mode = init_mode_from_name(j.at("init_mode").get<std::string>());
  if (j.contains("p_min")) e.p_min = j.at("p_min").get<double>();
  if (j.contains("random_fraction"))
    e.random_fraction = j.at("random_fraction").get<double>();
  if (j.contains("early_stop_delta"))
    e.early_stop_delta = j.at("early_stop_delta").get<double>();
  if (j.contains("early_stop_patience"))
    e.early_stop_patience = j.at("early_stop_patience").get<int>();
  if (j.contains("early_stop_warmup"))
    e.early_stop_warmup = j.at("early_stop_warmup").get<int>();
  if (j.contains("max_depth")) e.max_depth = j.at("max_depth").get<int>();
  if (j.contains("workers")) e.workers = j.at("workers").get<int>();
  if (e.population_size < 2) throw ConfigError("population_size must be >= 2");
  if (e.p_min < 0.0 || e.p_min > 1.0 / 7.0)
    throw ConfigError("p_min outside [0, 1/7]");
  if (e.random_fraction < 0.0 || e.random_fraction > 1.0)
    throw ConfigError("random_fraction outside [0, 1]");
  return e;
}

}  // namespace

RunConfig parse_run_config(const json& j) {
  reject_unknown(
      j, {"dataset", "model", "pretrain", "evolution", "objectives", "output_dir"},
      "");
  RunConfig cfg;
  if (j.contains("dataset")) cfg.dataset = parse_dataset(j.at("dataset"));
  if (j.contains("model")) cfg.model = parse_model(j.at("model"));
  if (j.contains("pretrain")) cfg.pretrain = parse_pretrain(j.at("pretrain"));
  if (j.contains("evolution")) cfg.evolution = parse_evolution(j.at("evolution"));
  if (j.contains("objectives")) {
    cfg.evolution.objectives.axes.clear();
    for (const json& a : j.at("objectives"))
      cfg.evolution.objectives.axes.push_back(
          objective_axis_from_name(a.get<std::string>()));
    if (cfg.evolution.objectives.axes.empty())
      throw ConfigError("objectives list is empty");
  }
  if (j.contains("output_dir"))
    cfg.output_dir = j.at("output_dir").get<std::string>();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const std::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_run_config(j);
}

json run_config_to_json(const RunConfig& cfg) {
  json j;
  j["dataset"] = {{"source", cfg.dataset.synthetic ? "synthetic" : "file"},
                  {"name", cfg.dataset.name},
                  {"samples", cfg.dataset.samples},
                  {"dim", cfg.dataset.dim},
                  {"window", cfg.dataset.window},
                  {"path", cfg.dataset.path},
                  {"format", dataset_format_name(cfg.dataset.format)},
                  {"task", task_name(cfg.dataset.task)}};
  j["model"] = {{"architecture", cfg.model.architecture},
                {"hidden", cfg.model.hidden}};
  j["pretrain"] = {{"epochs", cfg.pretrain.epochs},
                   {"learning_rate", cfg.pretrain.learning_rate},
                   {"batch_size", cfg.pretrain.batch_size}};
  const EvolutionConfig& e = cfg.evolution;
  j["evolution"] = {{"population_size", e.population_size},
                    {"max_generations", e.max_generations},
                    {"time_budget_seconds", e.time_budget_seconds},
                    {"seed", e.seed},
                    {"init_mode", init_mode_name(e.init_mode)},
                    {"p_min", e.p_min},
                    {"random_fraction", e.random_fraction},
                    {"early_stop_delta", e.early_stop_delta},
                    {"early_stop_patience", e.early_stop_patience},
                    {"early_stop_warmup", e.early_stop_warmup},
                    {"max_depth", e.max_depth},
                    {"workers", e.workers}};
  if (e.quality_threshold)
    j["evolution"]["quality_threshold"] = *e.quality_threshold;
  json axes = json::array();
  for (ObjectiveAxis a : e.objectives.axes) axes.push_back(objective_axis_name(a));
  j["objectives"] = axes;
  j["output_dir"] = cfg.output_dir;
  return j;
}

std::uint64_t run_config_hash(const RunConfig& cfg) {
  json j = run_config_to_json(cfg);
  j.erase("output_dir");
  // Worker count affects scheduling only, never results.
  j["evolution"].erase("workers");
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Dataset materialize_dataset(const DatasetSpec& spec) {
  if (!spec.synthetic)
    return load_dataset(spec.path, spec.format, spec.task);
  // Generator seeds are fixed: the dataset is part of the problem, not of
  // the search, so changing the run seed must not change the data.
  if (spec.name == "two_gaussian")
    return synth_two_gaussian(spec.samples, spec.dim, 0x5EED5EEDULL);
  if (spec.name == "image_blobs")
    return synth_image_blobs(spec.samples, 0x5EED5EEDULL);
  return synth_timeseries(spec.samples, spec.window, 0x5EED5EEDULL);
}

Network build_base_model(const RunConfig& cfg, const Dataset& ds,
                         const DataSplit& split) {
  Network net;
  const std::uint64_t init_seed = Rng::derive(cfg.evolution.seed, 0xBA5Eu);
  if (cfg.model.architecture == "mlp") {
    net = make_mlp(ds.features.dim(1), cfg.model.hidden, ds.task, ds.num_classes,
                   init_seed);
  } else {
    if (ds.input_shape.size() != 3)
      throw ConfigError("tiny_cnn needs (c, h, w) image data");
    net = make_tiny_cnn(ds.input_shape[0], ds.input_shape[1], ds.input_shape[2],
                        ds.num_classes, init_seed);
  }
  snap_to_precision(net);
  if (cfg.evolution.init_mode == InitMode::Untrained) return net;

  TrainOptions opts;
  opts.epochs = cfg.pretrain.epochs;
  opts.batch_size = cfg.pretrain.batch_size;
  opts.optimizer.kind = OptimizerKind::Adam;
  opts.optimizer.learning_rate = cfg.pretrain.learning_rate;
  opts.seed = Rng::derive(cfg.evolution.seed, 0xBA5Eu, 1);
  train(net, split.x_train, split.y_train, split.x_val, split.y_val, opts);
  snap_to_precision(net);
  return net;
}

}  // namespace petra
