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

#include "petra/decomposition.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>

namespace petra {

std::string rank_criterion_name(RankCriterionKind k) {
  switch (k) {
    case RankCriterionKind::Energy: return "energy";
    case RankCriterionKind::ExplainedVariance: return "explained_variance";
    case RankCriterionKind::SingularValueProportion: return "sv_proportion";
  }
  return "?";
}

RankCriterionKind rank_criterion_from_name(const std::string& s) {
  if (s == "energy") return RankCriterionKind::Energy;
  if (s == "explained_variance") return RankCriterionKind::ExplainedVariance;
  if (s == "sv_proportion") return RankCriterionKind::SingularValueProportion;
  throw ConfigError("unknown rank criterion: " + s);
}

DecomposedFactors svd(const Tensor& matrix) {
  if (matrix.ndim() != 2) throw ShapeError("svd expects a 2-D matrix");
  matrix.check_finite("svd input");
  const int m = matrix.dim(0), n = matrix.dim(1);
  Eigen::MatrixXd a(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = matrix.at(i, j);

  Eigen::JacobiSVD<Eigen::MatrixXd> solver(
      a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (solver.info() != Eigen::Success) {
    throw NumericError("SVD did not converge on a " + matrix.shape_str() +
                       " matrix");
  }
  const int r = static_cast<int>(solver.singularValues().size());
  DecomposedFactors d;
  d.rank = r;
  d.u = Tensor({m, r});
  d.s = Tensor({r});
  d.v = Tensor({n, r});
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < r; ++k) d.u.at(i, k) = solver.matrixU()(i, k);
  for (int k = 0; k < r; ++k) d.s[k] = solver.singularValues()(k);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < r; ++k) d.v.at(j, k) = solver.matrixV()(j, k);
  return d;
}

int select_rank(const Tensor& singular_values, const RankCriterion& criterion) {
  const int n = static_cast<int>(singular_values.size());
  if (n == 0) throw DataError("select_rank: empty spectrum");
  if (criterion.threshold <= 0.0 || criterion.threshold > 1.0) {
    throw ConfigError("rank criterion threshold must be in (0, 1]");
  }
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += singular_values[i] * singular_values[i];
  if (total == 0.0) throw DataError("select_rank: degenerate spectrum");

  switch (criterion.kind) {
    case RankCriterionKind::SingularValueProportion: {
      const double cutoff = criterion.threshold * singular_values[0];
      int r = 0;
      while (r < n && singular_values[r] >= cutoff) ++r;
      return std::max(r, 1);
    }
    case RankCriterionKind::ExplainedVariance:
    case RankCriterionKind::Energy: {
      int effective = n;
      if (criterion.kind == RankCriterionKind::ExplainedVariance) {
        // Collapses to energy on the spectrum with near-zero values dropped.
        constexpr double kEps = 1e-10;
        while (effective > 1 && singular_values[effective - 1] < kEps) --effective;
        total = 0.0;
        for (int i = 0; i < effective; ++i)
          total += singular_values[i] * singular_values[i];
      }
      double cum = 0.0;
      for (int r = 1; r <= effective; ++r) {
        cum += singular_values[r - 1] * singular_values[r - 1];
        if (cum / total >= criterion.threshold - 1e-15) return r;
      }
      return effective;
    }
  }
  return n;
}

namespace {

// (out, in*...) matricization used for both Linear and Conv2D weights.
Tensor matricize(const Tensor& w) {
  const int m = w.dim(0);
  return w.reshaped({m, static_cast<int>(w.size() / m)});
}

}  // namespace

void decompose_layer(Layer& layer, const RankCriterion& criterion) {
  if (layer.kind != LayerKind::Linear && layer.kind != LayerKind::Conv2D) {
    throw ConfigError("decompose_layer: unsupported layer kind " +
                      layer_kind_name(layer.kind));
  }
  Tensor w = layer.weights;
  if (layer.mask.has_value()) {
    for (std::int64_t i = 0; i < w.size(); ++i) w[i] *= (*layer.mask)[i];
  }
  DecomposedFactors full = svd(matricize(w));
  const int r = select_rank(full.s, criterion);

  DecomposedFactors trunc;
  trunc.rank = r;
  trunc.u = Tensor({full.u.dim(0), r});
  trunc.s = Tensor({r});
  trunc.v = Tensor({full.v.dim(0), r});
  for (int i = 0; i < full.u.dim(0); ++i)
    for (int k = 0; k < r; ++k) trunc.u.at(i, k) = full.u.at(i, k);
  for (int k = 0; k < r; ++k) trunc.s[k] = full.s[k];
  for (int j = 0; j < full.v.dim(0); ++j)
    for (int k = 0; k < r; ++k) trunc.v.at(j, k) = full.v.at(j, k);

  layer.decomp = std::move(trunc);
  // Dense weights (and any mask) are superseded by the factors; keep the
  // original shape around for conv reconstruction.
  layer.weights = Tensor(layer.weights.shape());
  layer.mask.reset();
}

void decompose_network(Network& net, const RankCriterion& criterion) {
  for (Layer& l : net.layers) {
    if (l.kind == LayerKind::Linear || l.kind == LayerKind::Conv2D) {
      if (!l.decomp.has_value()) decompose_layer(l, criterion);
    }
  }
}

Tensor reconstruct_weights(const Layer& layer) {
  if (!layer.decomp.has_value()) return layer.weights;
  const auto& d = *layer.decomp;
  Tensor us = d.u;
  for (int i = 0; i < us.dim(0); ++i)
    for (int k = 0; k < d.rank; ++k) us.at(i, k) *= d.s[k];
  Tensor w = matmul_nt(us, d.v, Tensor());  // (m, n)
  return w.reshaped(layer.weights.shape());
}

double orthogonality_loss(const Tensor& u, const Tensor& v) {
  if (u.ndim() != 2 || v.ndim() != 2 || u.dim(1) != v.dim(1)) {
    throw ShapeError("orthogonality_loss: U and V must share column count");
  }
  const int r = u.dim(1);
  if (r == 0) throw ShapeError("orthogonality_loss: rank 0");
  auto gram_residual = [r](const Tensor& a) {
    double acc = 0.0;
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < r; ++j) {
        double g = 0.0;
        for (int k = 0; k < a.dim(0); ++k) g += a.at(k, i) * a.at(k, j);
        const double d = g - (i == j ? 1.0 : 0.0);
        acc += d * d;
      }
    }
    return acc;
  };
  return (gram_residual(u) + gram_residual(v)) / (static_cast<double>(r) * r);
}

void orthogonality_loss_grad(const Tensor& u, const Tensor& v, double coeff,
                             Tensor& gu, Tensor& gv) {
  const int r = u.dim(1);
  const double c = 4.0 * coeff / (static_cast<double>(r) * r);
  auto accumulate = [r, c](const Tensor& a, Tensor& ga) {
    if (ga.empty()) ga = Tensor(a.shape());
    // d/dA ||A^T A - I||_F^2 = 4 A (A^T A - I)
    Tensor gram({r, r});
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < r; ++j) {
        double g = 0.0;
        for (int k = 0; k < a.dim(0); ++k) g += a.at(k, i) * a.at(k, j);
        gram.at(i, j) = g - (i == j ? 1.0 : 0.0);
      }
    }
    for (int k = 0; k < a.dim(0); ++k) {
      for (int j = 0; j < r; ++j) {
        double acc = 0.0;
        for (int i = 0; i < r; ++i) acc += a.at(k, i) * gram.at(i, j);
        ga.at(k, j) += c * acc;
      }
    }
  };
  accumulate(u, gu);
  accumulate(v, gv);
}

double hoyer_loss(const Tensor& s) {
  const double n2 = l2_norm(s);
  if (n2 == 0.0) throw NumericError("hoyer_loss: undefined ratio on zero vector");
  return l1_norm(s) / n2;
}

void hoyer_loss_grad(const Tensor& s, double coeff, Tensor& gs) {
  if (gs.empty()) gs = Tensor(s.shape());
  const double n1 = l1_norm(s);
  const double n2 = l2_norm(s);
  if (n2 == 0.0) throw NumericError("hoyer_loss: undefined ratio on zero vector");
  const double n2c = n2 * n2 * n2;
  for (std::int64_t i = 0; i < s.size(); ++i) {
    const double sgn = s[i] > 0 ? 1.0 : (s[i] < 0 ? -1.0 : 0.0);
    gs[i] += coeff * (sgn / n2 - n1 * s[i] / n2c);
  }
}

double sparsity_l1(const Network& net) {
  double acc = 0.0;
  for (const Layer& l : net.layers) {
    if (l.prunable() && !l.decomp.has_value()) acc += l1_norm(l.weights);
  }
  return acc;
}

double norm_loss(const Network& net) {
  double acc = 0.0;
  for (const Layer& l : net.layers) {
    if (!l.prunable() || l.decomp.has_value()) continue;
    const double n2 = l2_norm(l.weights);
    if (n2 == 0.0) continue;  // zero-norm layer skipped
    acc += l1_norm(l.weights) / n2 - 1.0;
  }
  return acc;
}

double lai_loss(const std::vector<Tensor>& grads, double tau) {
  if (grads.empty()) return 0.0;
  double acc = 0.0;
  for (const Tensor& g : grads) {
    const double excess = std::max(0.0, l2_norm(g) - tau);
    acc += excess * excess;
  }
  return acc / static_cast<double>(grads.size());
}

std::vector<Tensor> lai_loss_grad(const std::vector<Tensor>& grads, double tau) {
  std::vector<Tensor> out;
  out.reserve(grads.size());
  const double scale = 2.0 / static_cast<double>(grads.empty() ? 1 : grads.size());
  for (const Tensor& g : grads) {
    Tensor d(g.shape());
    const double n2 = l2_norm(g);
    const double excess = n2 - tau;
    if (excess > 0.0 && n2 > 0.0) {
      for (std::int64_t i = 0; i < g.size(); ++i) {
        d[i] = scale * excess * g[i] / n2;
      }
    }
    out.push_back(std::move(d));
  }
  return out;
}

double composite_regularizer_value(const Network& net, const CompositeLoss& loss) {
  double total = 0.0;
  int n_decomposed = 0;
  double sum_o = 0.0, sum_h = 0.0;
  for (const Layer& l : net.layers) {
    if (!l.decomp.has_value()) continue;
    ++n_decomposed;
    if (loss.lambda_o > 0.0) sum_o += orthogonality_loss(l.decomp->u, l.decomp->v);
    if (loss.lambda_h > 0.0) sum_h += hoyer_loss(l.decomp->s);
  }
  if (n_decomposed > 0) {
    total += loss.lambda_o / n_decomposed * sum_o;
    total += loss.lambda_h / n_decomposed * sum_h;
  }
  if (loss.sparsity_weight > 0.0) total += loss.sparsity_weight * sparsity_l1(net);
  if (loss.norm_weight > 0.0) total += loss.norm_weight * norm_loss(net);
  return total;
}

}  // namespace petra
