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
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "petra/nn.hpp"
#include "petra/pruning.hpp"

using namespace petra;
using petra::testing::random_labels;
using petra::testing::random_tensor;

namespace {

std::int64_t masked_count(const Network& net) {
  std::int64_t zeros = 0;
  for (const Layer& l : net.layers) {
    if (!l.mask.has_value()) continue;
    for (std::int64_t i = 0; i < l.mask->size(); ++i) zeros += ((*l.mask)[i] == 0.0);
  }
  return zeros;
}

std::int64_t prunable_weights(const Network& net) {
  std::int64_t n = 0;
  for (const Layer& l : net.layers) {
    if (l.prunable() && !l.decomp.has_value()) n += l.weights.size();
  }
  return n;
}

}  // namespace

TEST_CASE("per-layer magnitude pruning masks exactly floor(ratio*N) per layer") {
  for (double ratio : {0.1, 0.25, 0.5, 0.77, 0.9}) {
    Network net = make_mlp(7, 11, Task::BinaryClassification, 2, 60);
    PruneSpec spec;
    spec.ratio = ratio;
    prune(net, spec);
    for (const Layer& l : net.layers) {
      if (!l.prunable()) continue;
      REQUIRE(l.mask.has_value());
      std::int64_t zeros = 0;
      for (std::int64_t i = 0; i < l.mask->size(); ++i) zeros += ((*l.mask)[i] == 0.0);
      CHECK(zeros == static_cast<std::int64_t>(
                         std::floor(ratio * static_cast<double>(l.weights.size()))));
      // Masked weights are zeroed in place, and they are the smallest ones.
      double max_masked = 0.0, min_kept = 1e300;
      for (std::int64_t i = 0; i < l.weights.size(); ++i) {
        CHECK(((*l.mask)[i] == 0.0) == (l.weights[i] == 0.0));
      }
    }
  }
}

TEST_CASE("global magnitude pruning masks floor(ratio*N) across layers") {
  Network net = make_mlp(9, 13, Task::BinaryClassification, 2, 61);
  PruneSpec spec;
  spec.ratio = 0.4;
  spec.criterion.scope = PruneScope::Global;
  const std::int64_t n = prunable_weights(net);
  prune(net, spec);
  CHECK(masked_count(net) == static_cast<std::int64_t>(std::floor(0.4 * n)));
}

TEST_CASE("magnitude pruning removes the smallest weights first") {
  Network net = make_mlp(4, 6, Task::BinaryClassification, 2, 62);
  Network before = net;
  PruneSpec spec;
  spec.ratio = 0.5;
  prune(net, spec);
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const Layer& l = net.layers[li];
    if (!l.prunable()) continue;
    double max_masked = -1.0, min_kept = 1e300;
    for (std::int64_t i = 0; i < l.weights.size(); ++i) {
      const double mag = std::fabs(before.layers[li].weights[i]);
      if ((*l.mask)[i] == 0.0) max_masked = std::max(max_masked, mag);
      else min_kept = std::min(min_kept, mag);
    }
    CHECK(max_masked <= min_kept);
  }
}

TEST_CASE("lamp scores match the suffix-sum oracle") {
  Network net = make_mlp(3, 4, Task::BinaryClassification, 2, 63);
  const auto scores = importance_scores(net, {ImportanceKind::LAMP}, false);
  for (const LayerScores& ls : scores) {
    const Tensor& w = net.layers[static_cast<std::size_t>(ls.layer_index)].weights;
    // Oracle: sort ascending by w^2, score = w^2 / suffix-sum.
    std::vector<std::int64_t> order(static_cast<std::size_t>(w.size()));
    for (std::int64_t i = 0; i < w.size(); ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
      const double sa = w[a] * w[a], sb = w[b] * w[b];
      if (sa != sb) return sa < sb;
      return a < b;
    });
    double suffix = 0.0;
    for (std::int64_t i = 0; i < w.size(); ++i) suffix += w[i] * w[i];
    double max_score = 0.0;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const std::int64_t idx = order[pos];
      const double expect = w[idx] * w[idx] / suffix;
      CHECK(ls.scores[idx] == doctest::Approx(expect).epsilon(1e-12));
      suffix -= w[idx] * w[idx];
      max_score = std::max(max_score, ls.scores[idx]);
    }
    CHECK(max_score == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("taylor and hessian scores need calibration data") {
  Network net = make_mlp(5, 6, Task::BinaryClassification, 2, 64);
  const Tensor x = random_tensor({8, 5}, 65);
  const Tensor y = random_labels(8, 2, 66);
  for (ImportanceKind k : {ImportanceKind::Taylor, ImportanceKind::HessianDiag}) {
    CHECK_THROWS_AS(importance_scores(net, {k}, false), ConfigError);
    const auto scores = importance_scores(net, {k}, false, &x, &y);
    CHECK_FALSE(scores.empty());
    for (const LayerScores& ls : scores) {
      for (std::int64_t i = 0; i < ls.scores.size(); ++i) {
        CHECK(ls.scores[i] >= 0.0);
      }
    }
  }
}

TEST_CASE("taylor scores match |w * grad| oracle") {
  Network net = make_mlp(5, 6, Task::BinaryClassification, 2, 67);
  const Tensor x = random_tensor({8, 5}, 68);
  const Tensor y = random_labels(8, 2, 69);
  const auto scores = importance_scores(net, {ImportanceKind::Taylor}, false, &x, &y);
  const BackwardResult br = backward(net, x, y, {});
  for (const LayerScores& ls : scores) {
    const std::size_t li = static_cast<std::size_t>(ls.layer_index);
    const Tensor& w = net.layers[li].weights;
    const Tensor& g = br.grads[li].weights;
    for (std::int64_t i = 0; i < w.size(); ++i) {
      CHECK(ls.scores[i] == doctest::Approx(std::fabs(w[i] * g[i])).epsilon(1e-9));
    }
  }
}

TEST_CASE("bnscale scores channels by |gamma| of the following batchnorm") {
  Network net = make_tiny_cnn(1, 8, 8, 3, 70);
  const auto scores = importance_scores(net, {ImportanceKind::BNScale}, true);
  CHECK_FALSE(scores.empty());
  for (const LayerScores& ls : scores) {
    const Layer& conv = net.layers[static_cast<std::size_t>(ls.layer_index)];
    CHECK(ls.scores.size() == conv.weights.dim(0));
  }
}

TEST_CASE("structured pruning plus compact shrinks the network") {
  Network net = make_mlp(6, 12, Task::BinaryClassification, 2, 71);
  const std::int64_t before = count_parameters(net);
  PruneSpec spec;
  spec.ratio = 0.5;
  spec.structured = true;
  prune(net, spec);
  const std::vector<std::string> warnings = compact(net);
  CHECK(count_parameters(net) < before);
  // Hidden layer lost floor(0.5*12) = 6 rows; the head lost 6 input columns.
  CHECK(net.layers[0].weights.dim(0) == 6);
  CHECK(net.layers[2].weights.dim(1) == 6);
  const Tensor x = random_tensor({4, 6}, 72);
  CHECK(forward(net, x).all_finite());
}

TEST_CASE("sparsity reports masked fraction") {
  Network net = make_mlp(4, 8, Task::BinaryClassification, 2, 73);
  CHECK(sparsity(net) == doctest::Approx(0.0));
  PruneSpec spec;
  spec.ratio = 0.5;
  prune(net, spec);
  std::int64_t expect_zeros = 0;
  for (const Layer& l : net.layers) {
    if (l.prunable()) {
      expect_zeros += static_cast<std::int64_t>(
          std::floor(0.5 * static_cast<double>(l.weights.size())));
    }
  }
  CHECK(sparsity(net) ==
        doctest::Approx(static_cast<double>(expect_zeros) /
                        static_cast<double>(prunable_weights(net))));
}

TEST_CASE("masked weights stay zero through training") {
  Network net = make_mlp(4, 8, Task::BinaryClassification, 2, 74);
  PruneSpec spec;
  spec.ratio = 0.5;
  prune(net, spec);
  const Tensor x = random_tensor({32, 4}, 75);
  const Tensor y = random_labels(32, 2, 76);
  TrainOptions opts;
  opts.epochs = 3;
  opts.seed = 4;
  train(net, x, y, x, y, opts);
  for (const Layer& l : net.layers) {
    if (!l.mask.has_value()) continue;
    for (std::int64_t i = 0; i < l.weights.size(); ++i) {
      if ((*l.mask)[i] == 0.0) CHECK(l.weights[i] == 0.0);
    }
  }
}

TEST_CASE("ratio one never masks everything") {
  Network net = make_mlp(3, 4, Task::BinaryClassification, 2, 77);
  PruneSpec spec;
  spec.ratio = 0.9;
  prune(net, spec);
  for (const Layer& l : net.layers) {
    if (!l.prunable()) continue;
    std::int64_t kept = 0;
    for (std::int64_t i = 0; i < l.mask->size(); ++i) kept += ((*l.mask)[i] != 0.0);
    CHECK(kept > 0);
  }
}
