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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "petra/dataset.hpp"
#include "petra/evolution.hpp"
#include "petra/nn.hpp"
#include "petra/pareto.hpp"

using namespace petra;

namespace {

struct Fixture {
  Dataset ds;
  DataSplit data;
  Network base;
  EvolutionConfig cfg;

  Fixture() {
    ds = synth_two_gaussian(160, 6, 0x5EED);
    data = split_dataset(ds, 7);
    base = make_mlp(6, 8, ds.task, ds.num_classes, 3);
    snap_to_precision(base);
    cfg.population_size = 4;
    cfg.max_generations = 2;
    cfg.seed = 7;
    cfg.init_mode = InitMode::Untrained;
  }
};

std::string fresh_dir(const std::string& name) {
  const std::string dir = (std::filesystem::temp_directory_path() / name).string();
  std::filesystem::remove_all(dir);
  return dir;
}

std::vector<std::vector<double>> healthy_objectives(const EvolutionResult& r,
                                                    const ObjectiveConfig& oc,
                                                    std::vector<int>* ids) {
  std::vector<MetricVector> all;
  std::vector<int> all_ids;
  for (const Individual& ind : r.evaluated) {
    if (ind.quarantined || !ind.metrics.has_value()) continue;
    all.push_back(*ind.metrics);
    all_ids.push_back(ind.id);
  }
  if (ids != nullptr) *ids = all_ids;
  return population_objectives(all, oc);
}

}  // namespace

TEST_CASE("archive equals the brute-force non-dominated subset") {
  Fixture f;
  const std::string dir = fresh_dir("petra_evo_archive");
  const EvolutionResult r = run_evolution(f.cfg, f.base, f.data, dir);
  CHECK_FALSE(r.archive_ids.empty());
  CHECK_FALSE(r.evaluated.empty());

  std::vector<int> ids;
  const auto objs = healthy_objectives(r, f.cfg.objectives, &ids);
  std::vector<int> expect;
  for (std::size_t i : non_dominated(objs)) expect.push_back(ids[i]);
  std::vector<int> got = r.archive_ids;
  std::sort(got.begin(), got.end());
  std::sort(expect.begin(), expect.end());
  CHECK(got == expect);
  std::filesystem::remove_all(dir);
}

TEST_CASE("hypervolume history is non-decreasing against the final reference") {
  Fixture f;
  f.cfg.max_generations = 3;
  const std::string dir = fresh_dir("petra_evo_hv");
  const EvolutionResult r = run_evolution(f.cfg, f.base, f.data, dir);
  REQUIRE(r.history.size() >= 2);
  for (std::size_t g = 1; g < r.history.size(); ++g) {
    CHECK(r.history[g].hypervolume >= r.history[g - 1].hypervolume - 1e-12);
  }
  for (const GenerationRecord& rec : r.history) {
    CHECK(rec.archive_size == static_cast<int>(rec.archive_ids.size()));
    double psum = 0.0;
    for (double p : rec.operator_probabilities) psum += p;
    CHECK(psum == doctest::Approx(1.0));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("identical seeds give identical runs") {
  Fixture f;
  const std::string d1 = fresh_dir("petra_evo_det1");
  const std::string d2 = fresh_dir("petra_evo_det2");
  const EvolutionResult a = run_evolution(f.cfg, f.base, f.data, d1);
  const EvolutionResult b = run_evolution(f.cfg, f.base, f.data, d2);
  REQUIRE(a.evaluated.size() == b.evaluated.size());
  for (std::size_t i = 0; i < a.evaluated.size(); ++i) {
    CHECK(pipeline_to_string(a.evaluated[i].pipeline, true) ==
          pipeline_to_string(b.evaluated[i].pipeline, true));
  }
  CHECK(a.archive_ids == b.archive_ids);
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
}

TEST_CASE("worker count does not change the search trajectory") {
  Fixture f;
  const std::string d1 = fresh_dir("petra_evo_w1");
  const std::string d2 = fresh_dir("petra_evo_w2");
  const EvolutionResult a = run_evolution(f.cfg, f.base, f.data, d1);
  EvolutionConfig cfg2 = f.cfg;
  cfg2.workers = 3;
  const EvolutionResult b = run_evolution(cfg2, f.base, f.data, d2);
  REQUIRE(a.evaluated.size() == b.evaluated.size());
  for (std::size_t i = 0; i < a.evaluated.size(); ++i) {
    CHECK(pipeline_to_string(a.evaluated[i].pipeline, true) ==
          pipeline_to_string(b.evaluated[i].pipeline, true));
  }
  CHECK(a.archive_ids == b.archive_ids);
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
}

TEST_CASE("interrupted runs resume to the uninterrupted result") {
  Fixture f;
  f.cfg.max_generations = 3;
  const std::string full_dir = fresh_dir("petra_evo_full");
  const std::string part_dir = fresh_dir("petra_evo_part");
  const EvolutionResult full = run_evolution(f.cfg, f.base, f.data, full_dir);

  EvolutionConfig partial = f.cfg;
  partial.stop_after_generation = 1;
  run_evolution(partial, f.base, f.data, part_dir);
  const EvolutionResult resumed = run_evolution(f.cfg, f.base, f.data, part_dir, true);

  CHECK(resumed.archive_ids == full.archive_ids);
  REQUIRE(resumed.evaluated.size() == full.evaluated.size());
  for (std::size_t i = 0; i < full.evaluated.size(); ++i) {
    CHECK(pipeline_to_string(resumed.evaluated[i].pipeline, true) ==
          pipeline_to_string(full.evaluated[i].pipeline, true));
  }
  REQUIRE(resumed.history.size() == full.history.size());
  for (std::size_t g = 0; g < full.history.size(); ++g) {
    CHECK(resumed.history[g].hypervolume ==
          doctest::Approx(full.history[g].hypervolume).epsilon(1e-12));
    CHECK(resumed.history[g].archive_ids == full.history[g].archive_ids);
  }
  std::filesystem::remove_all(full_dir);
  std::filesystem::remove_all(part_dir);
}

TEST_CASE("run directory holds per-individual artifacts") {
  Fixture f;
  const std::string dir = fresh_dir("petra_evo_artifacts");
  const EvolutionResult r = run_evolution(f.cfg, f.base, f.data, dir);
  namespace fs = std::filesystem;
  CHECK(fs::exists(fs::path(dir) / "original.json"));
  CHECK(fs::exists(fs::path(dir) / "archive.json"));
  CHECK(fs::exists(fs::path(dir) / "state.json"));
  CHECK(fs::exists(fs::path(dir) / "history.jsonl"));
  for (int id : r.archive_ids) {
    const fs::path base = fs::path(dir) / "individuals" / std::to_string(id);
    CHECK(fs::exists(base / "pipeline.json"));
    CHECK(fs::exists(base / "metrics.json"));
    CHECK(fs::exists(base / "model.ckpt"));
  }
  // history.jsonl holds one record per generation.
  std::ifstream in(fs::path(dir) / "history.jsonl");
  int lines = 0;
  for (std::string line; std::getline(in, line);) lines += !line.empty();
  CHECK(lines == static_cast<int>(r.history.size()));
  std::filesystem::remove_all(dir);
}

TEST_CASE("reference point sits below every objective vector") {
  const std::vector<std::vector<double>> objs{{1.0, -2.0}, {0.5, -1.0}, {0.9, -4.0}};
  const std::vector<double> ref = reference_point(objs);
  REQUIRE(ref.size() == 2);
  for (const auto& o : objs) {
    CHECK(ref[0] < o[0]);
    CHECK(ref[1] < o[1]);
  }
  CHECK(ref[0] == doctest::Approx(0.5 - 1e-6));
  CHECK(ref[1] == doctest::Approx(-4.0 - 1e-6));
}
