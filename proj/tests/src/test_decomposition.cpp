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
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "petra/decomposition.hpp"
#include "petra/nn.hpp"

using namespace petra;
using petra::testing::random_tensor;

namespace {

double frobenius_diff(const Tensor& a, const Tensor& b) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

Tensor dense_from_factors(const DecomposedFactors& f, int m, int n) {
  Tensor w({m, n});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int r = 0; r < f.rank; ++r) acc += f.u.at(i, r) * f.s[r] * f.v.at(j, r);
      w.at(i, j) = acc;
    }
  }
  return w;
}

}  // namespace

TEST_CASE("svd reconstructs and has orthonormal factors") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const int m = 9, n = 6;
    const Tensor w = random_tensor({m, n}, seed);
    const DecomposedFactors f = svd(w);
    REQUIRE(f.rank == 6);
    for (int r = 1; r < f.rank; ++r) {
      CHECK(f.s[r] <= f.s[r - 1] + 1e-12);
      CHECK(f.s[r] >= 0.0);
    }
    // U^T U = I, V^T V = I.
    for (int a = 0; a < f.rank; ++a) {
      for (int b = 0; b < f.rank; ++b) {
        double uu = 0.0, vv = 0.0;
        for (int i = 0; i < m; ++i) uu += f.u.at(i, a) * f.u.at(i, b);
        for (int i = 0; i < n; ++i) vv += f.v.at(i, a) * f.v.at(i, b);
        const double expect = a == b ? 1.0 : 0.0;
        CHECK(uu == doctest::Approx(expect).epsilon(1e-9));
        CHECK(vv == doctest::Approx(expect).epsilon(1e-9));
      }
    }
    CHECK(frobenius_diff(w, dense_from_factors(f, m, n)) < 1e-9);
  }
}

TEST_CASE("svd of a diagonal matrix recovers sorted magnitudes") {
  Tensor w({3, 3});
  w.at(0, 0) = 2.0;
  w.at(1, 1) = -5.0;
  w.at(2, 2) = 1.0;
  const DecomposedFactors f = svd(w);
  CHECK(f.s[0] == doctest::Approx(5.0));
  CHECK(f.s[1] == doctest::Approx(2.0));
  CHECK(f.s[2] == doctest::Approx(1.0));
}

TEST_CASE("select_rank thresholds") {
  const Tensor s({4}, {4.0, 3.0, 2.0, 1.0});
  // Energy: cumulative s^2 over total (30).
  CHECK(select_rank(s, {RankCriterionKind::Energy, 0.50}) == 1);   // 16/30
  CHECK(select_rank(s, {RankCriterionKind::Energy, 0.55}) == 2);   // 25/30
  CHECK(select_rank(s, {RankCriterionKind::Energy, 0.97}) == 4);
  CHECK(select_rank(s, {RankCriterionKind::Energy, 1.0}) == 4);
  // Proportion: keep s_i >= threshold * s_0.
  CHECK(select_rank(s, {RankCriterionKind::SingularValueProportion, 0.6}) == 2);
  CHECK(select_rank(s, {RankCriterionKind::SingularValueProportion, 0.95}) == 1);
  CHECK(select_rank(s, {RankCriterionKind::SingularValueProportion, 0.1}) == 4);
  // ExplainedVariance behaves like Energy here (no tiny values to drop).
  CHECK(select_rank(s, {RankCriterionKind::ExplainedVariance, 0.55}) ==
        select_rank(s, {RankCriterionKind::Energy, 0.55}));
  // Rank never drops below 1.
  CHECK(select_rank(s, {RankCriterionKind::Energy, 1e-9}) == 1);
}

TEST_CASE("rank-r truncation reconstructs a rank-r matrix") {
  // Build an exactly rank-2 7x5 matrix, decompose, keep energy 0.999999.
  const Tensor a = random_tensor({7, 2}, 11);
  const Tensor b = random_tensor({5, 2}, 12);
  Tensor w({7, 5});
  for (int i = 0; i < 7; ++i) {
    for (int j = 0; j < 5; ++j) {
      w.at(i, j) = a.at(i, 0) * b.at(j, 0) + a.at(i, 1) * b.at(j, 1);
    }
  }
  Layer layer = make_linear(5, 7, 1);
  layer.weights = w;
  decompose_layer(layer, {RankCriterionKind::Energy, 0.999999});
  REQUIRE(layer.decomp.has_value());
  CHECK(layer.decomp->rank == 2);
  CHECK(frobenius_diff(reconstruct_weights(layer), w) < 1e-6);
  // Dense weights are zeroed out; only the shape is kept for reconstruction.
  for (std::int64_t i = 0; i < layer.weights.size(); ++i) {
    CHECK(layer.weights[i] == 0.0);
  }
}

TEST_CASE("orthogonality loss closed form and gradient") {
  Rng rng(0x0e);
  for (int it = 0; it < 50; ++it) {
    const int m = rng.uniform_int(3, 8);
    const int n = rng.uniform_int(3, 8);
    const int r = rng.uniform_int(2, std::min(m, n));
    const Tensor u = random_tensor({m, r}, 1000 + static_cast<std::uint64_t>(it));
    const Tensor v = random_tensor({n, r}, 2000 + static_cast<std::uint64_t>(it));
    // Oracle: (1/r^2) (||U^T U - I||_F^2 + ||V^T V - I||_F^2).
    double acc = 0.0;
    for (int a = 0; a < r; ++a) {
      for (int b = 0; b < r; ++b) {
        double uu = 0.0, vv = 0.0;
        for (int i = 0; i < m; ++i) uu += u.at(i, a) * u.at(i, b);
        for (int i = 0; i < n; ++i) vv += v.at(i, a) * v.at(i, b);
        const double id = a == b ? 1.0 : 0.0;
        acc += (uu - id) * (uu - id) + (vv - id) * (vv - id);
      }
    }
    acc /= static_cast<double>(r) * r;
    CHECK(orthogonality_loss(u, v) == doctest::Approx(acc).epsilon(1e-10));
  }

  // Orthonormal factors give exactly zero.
  Tensor id({4, 2});
  id.at(0, 0) = 1.0;
  id.at(1, 1) = 1.0;
  CHECK(orthogonality_loss(id, id) == doctest::Approx(0.0).epsilon(1e-15));

  // Finite-difference gradient.
  const Tensor u = random_tensor({5, 3}, 77);
  const Tensor v = random_tensor({4, 3}, 78);
  Tensor gu = Tensor::zeros(u.shape()), gv = Tensor::zeros(v.shape());
  orthogonality_loss_grad(u, v, 2.5, gu, gv);
  const double h = 1e-6;
  for (std::int64_t i = 0; i < u.size(); ++i) {
    Tensor up = u, um = u;
    up[i] += h;
    um[i] -= h;
    const double fd =
        2.5 * (orthogonality_loss(up, v) - orthogonality_loss(um, v)) / (2.0 * h);
    CHECK(gu[i] == doctest::Approx(fd).epsilon(1e-5));
  }
  for (std::int64_t i = 0; i < v.size(); ++i) {
    Tensor vp = v, vm = v;
    vp[i] += h;
    vm[i] -= h;
    const double fd =
        2.5 * (orthogonality_loss(u, vp) - orthogonality_loss(u, vm)) / (2.0 * h);
    CHECK(gv[i] == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("hoyer loss closed form, bounds, and scale invariance") {
  Rng rng(0x40);
  for (int it = 0; it < 100; ++it) {
    const int n = rng.uniform_int(2, 12);
    Tensor s({n});
    for (int i = 0; i < n; ++i) s[i] = rng.uniform(0.01, 5.0);
    double l1 = 0.0, l2 = 0.0;
    for (int i = 0; i < n; ++i) {
      l1 += std::fabs(s[i]);
      l2 += s[i] * s[i];
    }
    const double expect = l1 / std::sqrt(l2);
    const double got = hoyer_loss(s);
    CHECK(got == doctest::Approx(expect).epsilon(1e-12));
    CHECK(got >= 1.0 - 1e-12);
    CHECK(got <= std::sqrt(static_cast<double>(n)) + 1e-12);
    // Scale invariance.
    Tensor scaled = s;
    const double c = rng.uniform(0.1, 100.0);
    for (int i = 0; i < n; ++i) scaled[i] *= c;
    CHECK(std::fabs(hoyer_loss(scaled) - got) < 1e-12);
  }

  // One-hot vector attains the lower bound exactly.
  CHECK(hoyer_loss(Tensor({3}, {0.0, 7.0, 0.0})) == doctest::Approx(1.0));

  // Finite-difference gradient.
  const Tensor s = random_tensor({5}, 9, 1.0);
  Tensor gs = Tensor::zeros({5});
  hoyer_loss_grad(s, 1.5, gs);
  const double h = 1e-6;
  for (std::int64_t i = 0; i < s.size(); ++i) {
    Tensor sp = s, sm = s;
    sp[i] += h;
    sm[i] -= h;
    const double fd = 1.5 * (hoyer_loss(sp) - hoyer_loss(sm)) / (2.0 * h);
    CHECK(gs[i] == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("composite regularizer aggregates per decomposed layer") {
  Network net = make_mlp(6, 8, Task::BinaryClassification, 2, 50);
  CompositeLoss loss;
  loss.lambda_o = 0.4;
  loss.lambda_h = 0.3;
  // No decomposed layers: SVD terms contribute nothing.
  CHECK(composite_regularizer_value(net, loss) == doctest::Approx(0.0));

  decompose_network(net, {RankCriterionKind::Energy, 0.95});
  int d = 0;
  double sum_o = 0.0, sum_h = 0.0;
  for (const Layer& l : net.layers) {
    if (!l.decomp.has_value()) continue;
    ++d;
    sum_o += orthogonality_loss(l.decomp->u, l.decomp->v);
    sum_h += hoyer_loss(l.decomp->s);
  }
  REQUIRE(d > 0);
  const double expect = loss.lambda_o * sum_o / d + loss.lambda_h * sum_h / d;
  CHECK(composite_regularizer_value(net, loss) ==
        doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("sparsity and norm regularizer oracles") {
  Network net = make_mlp(3, 4, Task::BinaryClassification, 2, 51);
  double l1_total = 0.0, norm_total = 0.0;
  for (const Layer& l : net.layers) {
    if (!l.prunable()) continue;
    double l1 = 0.0, l2 = 0.0;
    for (std::int64_t i = 0; i < l.weights.size(); ++i) {
      l1 += std::fabs(l.weights[i]);
      l2 += l.weights[i] * l.weights[i];
    }
    l1_total += l1;
    if (l2 > 0.0) norm_total += l1 / std::sqrt(l2) - 1.0;
  }
  CHECK(sparsity_l1(net) == doctest::Approx(l1_total).epsilon(1e-12));
  CHECK(norm_loss(net) == doctest::Approx(norm_total).epsilon(1e-12));
}

TEST_CASE("decompose_network skips non-prunable layers") {
  Network net = make_tiny_cnn(1, 8, 8, 3, 52);
  decompose_network(net, {RankCriterionKind::Energy, 0.9});
  for (const Layer& l : net.layers) {
    if (l.kind == LayerKind::BatchNorm) CHECK_FALSE(l.decomp.has_value());
    if (l.kind == LayerKind::Linear || l.kind == LayerKind::Conv2D) {
      CHECK(l.decomp.has_value());
    }
  }
  // The decomposed CNN still runs forward.
  const Tensor x = random_tensor({2, 64}, 53, 0.5);
  const Tensor out = forward(net, x);
  CHECK(out.dim(0) == 2);
  CHECK(out.all_finite());
}
