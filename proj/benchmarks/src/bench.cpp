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

#include <benchmark/benchmark.h>

#include "petra/decomposition.hpp"
#include "petra/nn.hpp"
#include "petra/pareto.hpp"
#include "petra/pruning.hpp"
#include "petra/quantization.hpp"
#include "petra/rng.hpp"

namespace {

petra::Tensor random_tensor(std::vector<int> shape, std::uint64_t seed) {
  petra::Tensor t(std::move(shape));
  petra::Rng rng(seed);
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal();
  return t;
}

void BM_ForwardMlp(benchmark::State& state) {
  petra::Network net = petra::make_mlp(32, 64, petra::Task::BinaryClassification,
                                       2, 7);
  petra::Tensor x = random_tensor({32, 32}, 11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(petra::forward(net, x));
  }
}
BENCHMARK(BM_ForwardMlp);

void BM_BackwardMlp(benchmark::State& state) {
  petra::Network net = petra::make_mlp(32, 64, petra::Task::BinaryClassification,
                                       2, 7);
  petra::Tensor x = random_tensor({32, 32}, 11);
  petra::Tensor y({32, 1});
  petra::Rng rng(13);
  for (std::int64_t i = 0; i < y.size(); ++i) y[i] = rng.uniform() < 0.5 ? 0 : 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(petra::backward(net, x, y, {}));
  }
}
BENCHMARK(BM_BackwardMlp);

void BM_Svd64(benchmark::State& state) {
  petra::Tensor w = random_tensor({64, 64}, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(petra::svd(w));
  }
}
BENCHMARK(BM_Svd64);

void BM_QuantizeRoundTrip(benchmark::State& state) {
  petra::Tensor w = random_tensor({256, 256}, 5);
  for (auto _ : state) {
    auto q = petra::quantize(w);
    benchmark::DoNotOptimize(petra::dequantize(q, w.shape()));
  }
}
BENCHMARK(BM_QuantizeRoundTrip);

void BM_Hypervolume3d(benchmark::State& state) {
  petra::Rng rng(17);
  std::vector<std::vector<double>> front;
  for (int i = 0; i < 32; ++i)
    front.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
  const std::vector<double> ref = {-0.01, -0.01, -0.01};
  for (auto _ : state) {
    benchmark::DoNotOptimize(petra::hypervolume(front, ref));
  }
}
BENCHMARK(BM_Hypervolume3d);

void BM_PruneMagnitude(benchmark::State& state) {
  petra::Network net = petra::make_mlp(64, 128, petra::Task::BinaryClassification,
                                       2, 7);
  for (auto _ : state) {
    petra::Network copy = net;
    petra::PruneSpec spec;
    spec.ratio = 0.5;
    petra::prune(copy, spec);
    benchmark::DoNotOptimize(copy);
  }
}
BENCHMARK(BM_PruneMagnitude);

}  // namespace

BENCHMARK_MAIN();
