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
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "petra/checkpoint.hpp"
#include "petra/metrics.hpp"
#include "petra/quantization.hpp"
#include "petra/rng.hpp"
#include "petra/tensor.hpp"

using namespace petra;
using petra::testing::random_tensor;

namespace {

// O(n_pos * n_neg) pairwise AUC with half credit for ties.
double auc_oracle(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0.0;
  std::int64_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 0) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

double f1_oracle(const std::vector<int>& preds, const std::vector<int>& labels,
                 int num_classes) {
  double sum = 0.0;
  int counted = 0;
  for (int c = 0; c < num_classes; ++c) {
    int tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (preds[i] == c && labels[i] == c) ++tp;
      if (preds[i] == c && labels[i] != c) ++fp;
      if (preds[i] != c && labels[i] == c) ++fn;
    }
    if (tp + fp + fn == 0) continue;
    sum += 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
    ++counted;
  }
  return counted ? sum / counted : 0.0;
}

}  // namespace

TEST_CASE("tensor shape and accessors") {
  Tensor t({2, 3});
  CHECK(t.size() == 6);
  t.at(1, 2) = 4.5;
  CHECK(t[5] == 4.5);
  Tensor r = t.reshaped({3, 2});
  CHECK(r.dim(0) == 3);
  CHECK(r[5] == 4.5);
  CHECK_THROWS_AS(t.reshaped({4, 2}), ShapeError);
  CHECK(t.all_finite());
  t[0] = std::nan("");
  CHECK_FALSE(t.all_finite());
  CHECK_THROWS_AS(t.check_finite("test"), NumericError);
}

TEST_CASE("rng determinism and derive independence") {
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(Rng::derive(42, 1, 2) == Rng::derive(42, 1, 2));
  CHECK(Rng::derive(42, 1, 2) != Rng::derive(42, 1, 3));
  CHECK(Rng::derive(42, 1, 2) != Rng::derive(42, 2, 2));

  Rng u(11);
  double lo = 1.0, hi = 0.0, mean = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double v = u.uniform();
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    mean += v;
  }
  mean /= n;
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);
  CHECK(mean == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("rng shuffle is a permutation") {
  std::vector<int> v(100);
  for (int i = 0; i < 100; ++i) v[static_cast<std::size_t>(i)] = i;
  Rng rng(3);
  rng.shuffle(v);
  std::vector<int> s = v;
  std::sort(s.begin(), s.end());
  for (int i = 0; i < 100; ++i) CHECK(s[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("roc_auc matches the pairwise oracle") {
  Rng rng(0xA0C);
  for (int it = 0; it < 200; ++it) {
    const int n = rng.uniform_int(4, 60);
    std::vector<double> scores(static_cast<std::size_t>(n));
    std::vector<int> labels(static_cast<std::size_t>(n));
    int pos = 0;
    for (int i = 0; i < n; ++i) {
      // Coarse grid so ties actually happen.
      scores[static_cast<std::size_t>(i)] = rng.uniform_int(0, 8) / 8.0;
      labels[static_cast<std::size_t>(i)] = rng.uniform() < 0.4 ? 1 : 0;
      pos += labels[static_cast<std::size_t>(i)];
    }
    if (pos == 0 || pos == n) continue;
    CHECK(roc_auc(scores, labels) ==
          doctest::Approx(auc_oracle(scores, labels)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(roc_auc({1.0, 2.0}, {1, 1}), DataError);
}

TEST_CASE("f1_macro matches the confusion-matrix oracle") {
  Rng rng(0xF1);
  for (int it = 0; it < 200; ++it) {
    const int n = rng.uniform_int(5, 80);
    const int k = rng.uniform_int(2, 6);
    std::vector<int> preds(static_cast<std::size_t>(n)), labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      preds[static_cast<std::size_t>(i)] = rng.uniform_int(0, k - 1);
      labels[static_cast<std::size_t>(i)] = rng.uniform_int(0, k - 1);
    }
    CHECK(f1_macro(preds, labels) ==
          doctest::Approx(f1_oracle(preds, labels, k)).epsilon(1e-12));
  }
  CHECK(f1_macro({0, 1, 0, 1}, {0, 1, 0, 1}) == doctest::Approx(1.0));
}

TEST_CASE("rmse closed form") {
  CHECK(rmse({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == doctest::Approx(0.0));
  CHECK(rmse({0.0, 0.0}, {3.0, 4.0}) ==
        doctest::Approx(std::sqrt((9.0 + 16.0) / 2.0)));
}

TEST_CASE("checkpoint round-trip is bit exact") {
  Network net = make_mlp(6, 8, Task::MulticlassClassification, 3, 99);
  net.layers[0].mask = Tensor::full(net.layers[0].weights.shape(), 1.0);
  (*net.layers[0].mask)[3] = 0.0;
  QuantState q;
  q.mode = QuantMode::PTQ;
  q.scales = {0.015625, 0.03125};
  q.activation_range = {{-1.5, 2.25}};
  net.layers[2].quant = q;
  net.layers[2].precision = Precision::I8;
  snap_to_precision(net);

  const std::vector<std::uint8_t> bytes = serialize_network(net);
  const Network back = deserialize_network(bytes);
  CHECK(serialize_network(back) == bytes);

  CHECK(back.layers.size() == net.layers.size());
  CHECK(back.task == net.task);
  CHECK(back.num_classes == net.num_classes);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    CHECK(back.layers[i].kind == net.layers[i].kind);
    CHECK(back.layers[i].weights.data() == net.layers[i].weights.data());
    CHECK(back.layers[i].bias.data() == net.layers[i].bias.data());
    CHECK(back.layers[i].mask.has_value() == net.layers[i].mask.has_value());
    CHECK(back.layers[i].quant.has_value() == net.layers[i].quant.has_value());
  }
  // snap_to_precision re-derives int8 scales; the round-trip must keep them.
  CHECK(back.layers[2].quant->scales == net.layers[2].quant->scales);
  CHECK(back.layers[2].quant->activation_range == q.activation_range);

  const std::string path =
      (std::filesystem::temp_directory_path() / "petra_ckpt_test.ckpt").string();
  save_checkpoint(net, path);
  const Network loaded = load_checkpoint(path);
  CHECK(serialize_network(loaded) == bytes);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint survives decomposed layers") {
  Network net = make_mlp(10, 12, Task::BinaryClassification, 2, 5);
  DecomposedFactors f;
  f.u = random_tensor({12, 3}, 1);
  f.s = random_tensor({3}, 2);
  f.v = random_tensor({10, 3}, 3);
  f.rank = 3;
  net.layers[0].decomp = f;
  net.layers[0].weights = Tensor::zeros(net.layers[0].weights.shape());
  snap_to_precision(net);  // factors land on the fp32 grid the payload stores
  const std::vector<std::uint8_t> bytes = serialize_network(net);
  const Network back = deserialize_network(bytes);
  REQUIRE(back.layers[0].decomp.has_value());
  CHECK(back.layers[0].decomp->rank == 3);
  CHECK(back.layers[0].decomp->u.data() == net.layers[0].decomp->u.data());
  CHECK(back.layers[0].decomp->s.data() == net.layers[0].decomp->s.data());
  CHECK(back.layers[0].decomp->v.data() == net.layers[0].decomp->v.data());
  CHECK(serialize_network(back) == bytes);
}
