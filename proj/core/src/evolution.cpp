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

#include "petra/evolution.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "json.hpp"
#include "petra/checkpoint.hpp"
#include "petra/errors.hpp"
#include "petra/measure.hpp"
#include "petra/nn.hpp"
#include "petra/pareto.hpp"
#include "petra/rng.hpp"

namespace petra {

namespace fs = std::filesystem;
using nlohmann::json;

std::string init_mode_name(InitMode m) {
  return m == InitMode::Pretrained ? "pretrained" : "untrained";
}

InitMode init_mode_from_name(const std::string& s) {
  if (s == "pretrained") return InitMode::Pretrained;
  if (s == "untrained") return InitMode::Untrained;
  throw ConfigError("unknown init mode " + s);
}

std::vector<std::vector<double>> population_objectives(
    const std::vector<MetricVector>& all, const ObjectiveConfig& config) {
  std::vector<std::vector<double>> out;
  out.reserve(all.size());
  for (const MetricVector& m : all) out.push_back(to_objectives(m, config, all));
  return out;
}

std::vector<double> reference_point(const std::vector<std::vector<double>>& objs,
                                    double epsilon) {
  if (objs.empty()) return {};
  std::vector<double> ref = objs.front();
  for (const auto& o : objs)
    for (std::size_t i = 0; i < ref.size(); ++i) ref[i] = std::min(ref[i], o[i]);
  for (double& r : ref) r -= epsilon;
  return ref;
}

namespace {

json metrics_to_json(const MetricVector& m) {
  json j;
  j["task"] = task_name(m.task);
  j["quality"] = m.quality;
  j["cpu_latency_ms"] = m.cpu_latency_ms;
  j["gpu_latency_ms"] =
      m.gpu_latency_ms ? json(*m.gpu_latency_ms) : json(nullptr);
  j["cpu_throughput_ips"] = m.cpu_throughput_ips;
  j["gpu_throughput_ips"] =
      m.gpu_throughput_ips ? json(*m.gpu_throughput_ips) : json(nullptr);
  j["size_mb"] = m.size_mb;
  j["depth"] = m.depth;
  j["train_seconds"] = m.train_seconds;
  j["partial"] = m.partial;
  return j;
}

MetricVector metrics_from_json(const json& j) {
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
}

void write_json_file(const fs::path& path, const json& j) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << "\n";
  }
  fs::rename(tmp, path);
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const std::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

MetricVector measure_individual(const Network& net, const DataSplit& data,
                                int depth, double train_seconds, Task task) {
  MetricVector m;
  m.task = task;
  m.quality = evaluate_quality(net, data.x_val, data.y_val);
  m.size_mb =
      static_cast<double>(model_size_bytes(net)) / (1024.0 * 1024.0);
  m.depth = depth;
  m.train_seconds = train_seconds;

  Tensor proto({1, data.x_val.dim(1)});
  for (int j = 0; j < data.x_val.dim(1); ++j) proto.at(0, j) = data.x_val.at(0, j);

  TimingOptions topts;
  topts.warmup = 2;
  topts.repeats = 9;
  topts.batches = 3;
  if (auto v = measure_latency_ms(net, proto, DeviceProfile::CPU, topts))
    m.cpu_latency_ms = *v;
  m.gpu_latency_ms = measure_latency_ms(net, proto, DeviceProfile::GPU, topts);
  if (auto v = measure_throughput_ips(net, proto, DeviceProfile::CPU, topts))
    m.cpu_throughput_ips = *v;
  m.gpu_throughput_ips = measure_throughput_ips(net, proto, DeviceProfile::GPU, topts);
  return m;
}

struct RunState {
  std::vector<Individual> evaluated;
  std::vector<MutationOperator> operators = default_operators();
  std::vector<int> population_ids;  // current parent pool
  std::vector<int> archive_ids;
  std::vector<GenerationRecord> history;
  int next_generation = 0;
  int next_id = 0;
  MetricVector original;
};

void persist_individual(const fs::path& run_dir, const Individual& ind,
                        const Network* net) {
  const fs::path dir = run_dir / "individuals" / std::to_string(ind.id);
  fs::create_directories(dir);
  json pj = pipeline_to_json(ind.pipeline);
  pj["id"] = ind.id;
  pj["parent_id"] = ind.parent_id;
  pj["operator_index"] = ind.operator_index;
  pj["generation"] = ind.generation;
  pj["string"] = pipeline_to_string(ind.pipeline);
  write_json_file(dir / "pipeline.json", pj);
  json mj;
  mj["quarantined"] = ind.quarantined;
  mj["error"] = ind.error;
  if (ind.metrics) mj["metrics"] = metrics_to_json(*ind.metrics);
  write_json_file(dir / "metrics.json", mj);
  if (net != nullptr) save_checkpoint(*net, (dir / "model.ckpt").string());
}

void persist_state(const fs::path& run_dir, const RunState& st) {
  json ops = json::array();
  for (const MutationOperator& op : st.operators) {
    ops.push_back({{"kind", mutation_kind_name(op.kind)},
                   {"applications", op.applications},
                   {"successes", op.successes},
                   {"probability", op.probability}});
  }
  json j;
  j["next_generation"] = st.next_generation;
  j["next_id"] = st.next_id;
  j["population_ids"] = st.population_ids;
  j["archive_ids"] = st.archive_ids;
  j["operators"] = ops;
  write_json_file(run_dir / "state.json", j);

  json archive;
  archive["ids"] = st.archive_ids;
  json members = json::array();
  for (int id : st.archive_ids) {
    const Individual& ind = st.evaluated[static_cast<std::size_t>(id)];
    members.push_back({{"id", id},
                       {"pipeline", pipeline_to_string(ind.pipeline)}});
  }
  archive["members"] = members;
  write_json_file(run_dir / "archive.json", archive);
}

void append_history(const fs::path& run_dir, const GenerationRecord& rec) {
  std::ofstream out(run_dir / "history.jsonl", std::ios::app);
  json j;
  j["generation"] = rec.generation;
  j["hypervolume"] = rec.hypervolume;
  j["archive_size"] = rec.archive_size;
  j["archive_ids"] = rec.archive_ids;
  j["operator_probabilities"] = rec.operator_probabilities;
  out << j.dump() << "\n";
}

RunState load_state(const fs::path& run_dir) {
  RunState st;
  const json j = read_json_file(run_dir / "state.json");
  st.next_generation = j.at("next_generation").get<int>();
  st.next_id = j.at("next_id").get<int>();
  st.population_ids = j.at("population_ids").get<std::vector<int>>();
  st.archive_ids = j.at("archive_ids").get<std::vector<int>>();
  std::size_t k = 0;
  for (const json& oj : j.at("operators")) {
    if (k >= st.operators.size()) break;
    st.operators[k].applications = oj.at("applications").get<std::int64_t>();
    st.operators[k].successes = oj.at("successes").get<std::int64_t>();
    st.operators[k].probability = oj.at("probability").get<double>();
    ++k;
  }
  st.original = metrics_from_json(read_json_file(run_dir / "original.json"));

  for (int id = 0; id < st.next_id; ++id) {
    const fs::path dir = run_dir / "individuals" / std::to_string(id);
    const json pj = read_json_file(dir / "pipeline.json");
    const json mj = read_json_file(dir / "metrics.json");
    Individual ind;
    ind.id = id;
    ind.pipeline = pipeline_from_json(pj);
    ind.parent_id = pj.at("parent_id").get<int>();
    ind.operator_index = pj.at("operator_index").get<int>();
    ind.generation = pj.at("generation").get<int>();
    ind.quarantined = mj.at("quarantined").get<bool>();
    ind.error = mj.at("error").get<std::string>();
    if (mj.contains("metrics")) ind.metrics = metrics_from_json(mj.at("metrics"));
    st.evaluated.push_back(std::move(ind));
  }

  const fs::path hist = run_dir / "history.jsonl";
  if (fs::exists(hist)) {
    std::ifstream in(hist);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json h = json::parse(line);
      GenerationRecord rec;
      rec.generation = h.at("generation").get<int>();
      rec.hypervolume = h.at("hypervolume").get<double>();
      rec.archive_size = h.at("archive_size").get<int>();
      rec.archive_ids = h.at("archive_ids").get<std::vector<int>>();
      rec.operator_probabilities =
          h.at("operator_probabilities").get<std::vector<double>>();
      st.history.push_back(std::move(rec));
    }
  }
  return st;
}

// One individual's full evaluation: prefix-cache lookup, pipeline execution,
// metric measurement, persistence. Thread-safe: touches only its own state
// and the cache directory (atomic rename writes).
void evaluate_individual(const EvolutionConfig& cfg, const Network& base,
                         const DataSplit& data, const fs::path& run_dir,
                         double archive_best, bool have_archive,
                         Individual& ind) {
  try {
    const fs::path cache_dir = run_dir / "cache";
    const int n_stages = static_cast<int>(ind.pipeline.stages.size());

    Network net = base;
    int start_stage = 0;
    for (int k = n_stages; k >= 1; --k) {
      char name[32];
      std::snprintf(name, sizeof(name), "%016llx.ckpt",
                    static_cast<unsigned long long>(
                        stage_prefix_hash(ind.pipeline, k, cfg.seed)));
      const fs::path hit = cache_dir / name;
      if (fs::exists(hit)) {
        net = load_checkpoint(hit.string());
        start_stage = k;
        break;
      }
    }

    ExecOptions opts;
    opts.seed = cfg.seed;
    opts.start_stage = start_stage;
    opts.on_stage = [&](int stage_index, const Network& snapshot,
                        const StageTrace&) {
      char name[32];
      std::snprintf(name, sizeof(name), "%016llx.ckpt",
                    static_cast<unsigned long long>(stage_prefix_hash(
                        ind.pipeline, stage_index + 1, cfg.seed)));
      const fs::path dst = cache_dir / name;
      if (fs::exists(dst)) return;
      const fs::path tmp =
          cache_dir / (std::to_string(ind.id) + ".tmp");
      save_checkpoint(snapshot, tmp.string());
      std::error_code ec;
      fs::rename(tmp, dst, ec);  // lost race: another worker got there first
      if (ec) fs::remove(tmp, ec);
    };
    int bad_streak = 0;
    if (have_archive) {
      const Task task = base.task;
      opts.early_stop = [&, archive_best, task](int epoch, double val_quality) {
        if (epoch < cfg.early_stop_warmup) return true;
        if (quality_score(val_quality, task) <
            archive_best - cfg.early_stop_delta) {
          ++bad_streak;
        } else {
          bad_streak = 0;
        }
        return bad_streak < cfg.early_stop_patience;
      };
    }

    ExecResult res = execute_pipeline(ind.pipeline, std::move(net), data, opts);
    MetricVector m = measure_individual(res.net, data, n_stages,
                                        res.train_seconds, base.task);
    m.partial = res.stopped_early;
    ind.metrics = m;
    persist_individual(run_dir, ind, &res.net);
  } catch (const std::exception& e) {
    ind.quarantined = true;
    ind.error = e.what();
    ind.metrics.reset();
    persist_individual(run_dir, ind, nullptr);
  }
}

void evaluate_batch(const EvolutionConfig& cfg, const Network& base,
                    const DataSplit& data, const fs::path& run_dir,
                    double archive_best, bool have_archive,
                    std::vector<Individual*>& batch) {
  const int workers =
      std::max(1, std::min(cfg.workers, static_cast<int>(batch.size())));
  if (workers == 1) {
    for (Individual* ind : batch)
      evaluate_individual(cfg, base, data, run_dir, archive_best, have_archive,
                          *ind);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= batch.size()) return;
        evaluate_individual(cfg, base, data, run_dir, archive_best,
                            have_archive, *batch[i]);
      }
    });
  }
  for (std::thread& t : pool) t.join();
}

// Metrics of the healthy individuals among ids, parallel id list returned.
std::pair<std::vector<int>, std::vector<MetricVector>> healthy_metrics(
    const std::vector<Individual>& evaluated) {
  std::vector<int> ids;
  std::vector<MetricVector> ms;
  for (const Individual& ind : evaluated) {
    if (ind.metrics) {
      ids.push_back(ind.id);
      ms.push_back(*ind.metrics);
    }
  }
  return {ids, ms};
}

double archive_best_quality(const RunState& st, Task task) {
  double best = -1e300;
  for (int id : st.archive_ids) {
    const auto& m = st.evaluated[static_cast<std::size_t>(id)].metrics;
    if (m) best = std::max(best, quality_score(m->quality, task));
  }
  return best;
}

// Archive = brute-force non-dominated subset of every healthy individual.
void update_archive(RunState& st, const ObjectiveConfig& objcfg) {
  auto [ids, metrics] = healthy_metrics(st.evaluated);
  const auto objs = population_objectives(metrics, objcfg);
  std::vector<std::size_t> front = non_dominated(objs);
  st.archive_ids.clear();
  for (std::size_t i : front) st.archive_ids.push_back(ids[i]);
  std::sort(st.archive_ids.begin(), st.archive_ids.end());
}

std::vector<int> select_parents(const RunState& st, const EvolutionConfig& cfg,
                                Rng& rng) {
  const int k = cfg.population_size;
  const int n_random = static_cast<int>(cfg.random_fraction * k);
  const int n_archive = k - n_random;
  std::vector<int> parents;

  std::vector<int> pool = st.population_ids;
  if (pool.empty()) {
    auto [ids, metrics] = healthy_metrics(st.evaluated);
    pool = ids;
  }

  if (!st.archive_ids.empty()) {
    std::vector<MetricVector> ms;
    std::vector<MetricVector> all;
    for (const Individual& ind : st.evaluated)
      if (ind.metrics) all.push_back(*ind.metrics);
    for (int id : st.archive_ids)
      ms.push_back(*st.evaluated[static_cast<std::size_t>(id)].metrics);
    std::vector<std::vector<double>> objs;
    for (const MetricVector& m : ms)
      objs.push_back(to_objectives(m, cfg.objectives, all));
    const std::vector<double> ref = reference_point(objs);
    std::vector<double> weight = hypervolume_contributions(objs, ref);
    double total = 0.0;
    for (double& w : weight) {
      w = std::max(w, 0.0) + 1e-12;
      total += w;
    }
    for (int i = 0; i < n_archive; ++i) {
      double u = rng.uniform() * total;
      std::size_t pick = st.archive_ids.size() - 1;
      double acc = 0.0;
      for (std::size_t j = 0; j < weight.size(); ++j) {
        acc += weight[j];
        if (u < acc) {
          pick = j;
          break;
        }
      }
      parents.push_back(st.archive_ids[pick]);
    }
  }
  while (static_cast<int>(parents.size()) < k) {
    parents.push_back(
        pool[static_cast<std::size_t>(rng.uniform_int(
            0, static_cast<int>(pool.size()) - 1))]);
  }
  return parents;
}

// (mu + lambda): archive plus newest offspring, truncated to N by exclusive
// hypervolume contribution.
void update_population(RunState& st, const EvolutionConfig& cfg,
                       const std::vector<int>& offspring_ids) {
  std::vector<int> cand = st.archive_ids;
  for (int id : offspring_ids) {
    if (st.evaluated[static_cast<std::size_t>(id)].metrics &&
        std::find(cand.begin(), cand.end(), id) == cand.end())
      cand.push_back(id);
  }
  if (static_cast<int>(cand.size()) <= cfg.population_size) {
    st.population_ids = cand;
    return;
  }
  std::vector<MetricVector> all;
  for (const Individual& ind : st.evaluated)
    if (ind.metrics) all.push_back(*ind.metrics);
  std::vector<std::vector<double>> objs;
  for (int id : cand)
    objs.push_back(to_objectives(
        *st.evaluated[static_cast<std::size_t>(id)].metrics, cfg.objectives, all));
  const std::vector<double> ref = reference_point(objs);
  const std::vector<double> contrib = hypervolume_contributions(objs, ref);
  std::vector<std::size_t> order(cand.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return contrib[a] > contrib[b];
  });
  st.population_ids.clear();
  for (int i = 0; i < cfg.population_size; ++i)
    st.population_ids.push_back(cand[order[static_cast<std::size_t>(i)]]);
  std::sort(st.population_ids.begin(), st.population_ids.end());
}

void record_generation(RunState& st, const fs::path& run_dir, int generation) {
  GenerationRecord rec;
  rec.generation = generation;
  rec.archive_size = static_cast<int>(st.archive_ids.size());
  rec.archive_ids = st.archive_ids;
  for (const MutationOperator& op : st.operators)
    rec.operator_probabilities.push_back(op.probability);
  rec.hypervolume = 0.0;  // filled by the final-reference pass
  st.history.push_back(rec);
  append_history(run_dir, rec);
}

// History hypervolumes are all computed against the final reference point
// and final imputation so the per-generation curve is comparable (and
// non-decreasing under the elitist archive).
void finalize_history(RunState& st, const ObjectiveConfig& objcfg) {
  auto [ids, metrics] = healthy_metrics(st.evaluated);
  if (ids.empty()) return;
  const auto objs = population_objectives(metrics, objcfg);
  const std::vector<double> ref = reference_point(objs);
  std::vector<int> id_to_row(static_cast<std::size_t>(st.evaluated.size()), -1);
  for (std::size_t i = 0; i < ids.size(); ++i)
    id_to_row[static_cast<std::size_t>(ids[i])] = static_cast<int>(i);
  for (GenerationRecord& rec : st.history) {
    std::vector<std::vector<double>> front;
    for (int id : rec.archive_ids) {
      const int row = id_to_row[static_cast<std::size_t>(id)];
      if (row >= 0) front.push_back(objs[static_cast<std::size_t>(row)]);
    }
    rec.hypervolume = hypervolume(front, ref);
  }
}

}  // namespace

EvolutionResult run_evolution(const EvolutionConfig& cfg, const Network& base,
                              const DataSplit& data, const std::string& run_dir_s,
                              bool resume) {
  if (cfg.population_size < 2) throw ConfigError("population_size must be >= 2");
  if (cfg.max_generations <= 0 && cfg.time_budget_seconds <= 0.0 &&
      !cfg.quality_threshold)
    throw ConfigError("no stopping criterion enabled");

  const fs::path run_dir(run_dir_s);
  fs::create_directories(run_dir / "individuals");
  fs::create_directories(run_dir / "cache");

  const auto t_start = std::chrono::steady_clock::now();
  RunState st;
  std::string stop_reason;

  if (resume) {
    st = load_state(run_dir);
  } else {
    st.original = measure_individual(base, data, 0, 0.0, base.task);
    write_json_file(run_dir / "original.json", metrics_to_json(st.original));

    // Generation 0: independently sampled pipelines.
    std::vector<Individual*> batch;
    for (int i = 0; i < cfg.population_size; ++i) {
      Individual ind;
      ind.id = st.next_id++;
      ind.generation = 0;
      Rng r(Rng::derive(cfg.seed, 0xA11CEu, static_cast<std::uint64_t>(i)));
      ind.pipeline =
          sample_pipeline(r, cfg.init_mode == InitMode::Untrained,
                          std::min(3, cfg.max_depth));
      st.evaluated.push_back(std::move(ind));
    }
    for (Individual& ind : st.evaluated) batch.push_back(&ind);
    evaluate_batch(cfg, base, data, run_dir, 0.0, false, batch);
    update_archive(st, cfg.objectives);
    update_population(st, cfg, [&] {
      std::vector<int> ids;
      for (const Individual& ind : st.evaluated) ids.push_back(ind.id);
      return ids;
    }());
    record_generation(st, run_dir, 0);
    st.next_generation = 1;
    persist_state(run_dir, st);
    if (cfg.stop_after_generation == 0) {
      stop_reason = "stop_after_generation";
    }
  }

  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t_start)
        .count();
  };
  auto threshold_met = [&] {
    return cfg.quality_threshold &&
           !st.archive_ids.empty() &&
           archive_best_quality(st, base.task) >= *cfg.quality_threshold;
  };

  for (int g = st.next_generation;
       stop_reason.empty() && g <= cfg.max_generations; ++g) {
    if (cfg.max_generations > 0 && g > cfg.max_generations) break;
    if (cfg.time_budget_seconds > 0.0 && elapsed() > cfg.time_budget_seconds) {
      stop_reason = "time_budget";
      break;
    }
    if (threshold_met()) {
      stop_reason = "quality_threshold";
      break;
    }

    Rng rng(Rng::derive(cfg.seed, 0x6E6Eu, static_cast<std::uint64_t>(g)));
    const std::vector<int> parents = select_parents(st, cfg, rng);

    std::vector<Individual> offspring;
    std::vector<int> applied_ops;
    for (int parent_id : parents) {
      const Individual& parent =
          st.evaluated[static_cast<std::size_t>(parent_id)];
      MutationResult mut = mutate(parent.pipeline, st.operators, rng, 32,
                                  cfg.max_depth);
      if (!mut.ok) continue;
      Individual child;
      child.id = st.next_id++;
      child.pipeline = std::move(mut.pipeline);
      child.parent_id = parent_id;
      child.operator_index = mut.operator_index;
      child.generation = g;
      offspring.push_back(std::move(child));
      applied_ops.push_back(mut.operator_index);
    }

    const double best = st.archive_ids.empty()
                            ? 0.0
                            : archive_best_quality(st, base.task);
    const std::size_t first_new = st.evaluated.size();
    for (Individual& child : offspring) st.evaluated.push_back(std::move(child));
    std::vector<Individual*> batch;
    for (std::size_t i = first_new; i < st.evaluated.size(); ++i)
      batch.push_back(&st.evaluated[i]);
    evaluate_batch(cfg, base, data, run_dir, best, !st.archive_ids.empty(),
                   batch);

    update_archive(st, cfg.objectives);

    std::vector<int> offspring_ids;
    for (std::size_t i = first_new; i < st.evaluated.size(); ++i)
      offspring_ids.push_back(st.evaluated[i].id);
    for (std::size_t i = 0; i < offspring_ids.size(); ++i) {
      const int op = applied_ops[i];
      st.operators[static_cast<std::size_t>(op)].applications += 1;
      if (std::find(st.archive_ids.begin(), st.archive_ids.end(),
                    offspring_ids[i]) != st.archive_ids.end())
        st.operators[static_cast<std::size_t>(op)].successes += 1;
    }
    adapt_probabilities(st.operators, cfg.p_min);

    update_population(st, cfg, offspring_ids);
    record_generation(st, run_dir, g);
    st.next_generation = g + 1;
    persist_state(run_dir, st);

    if (cfg.stop_after_generation == g) {
      stop_reason = "stop_after_generation";
      break;
    }
    if (g == cfg.max_generations) stop_reason = "max_generations";
  }
  if (stop_reason.empty()) stop_reason = "max_generations";

  finalize_history(st, cfg.objectives);
  {
    // Rewrite the log with final-reference hypervolumes filled in.
    std::ofstream trunc(run_dir / "history.jsonl", std::ios::trunc);
  }
  for (const GenerationRecord& rec : st.history) append_history(run_dir, rec);

  EvolutionResult result;
  result.evaluated = std::move(st.evaluated);
  result.archive_ids = st.archive_ids;
  result.history = std::move(st.history);
  result.original = st.original;
  result.stop_reason = stop_reason;
  return result;
}

}  // namespace petra
