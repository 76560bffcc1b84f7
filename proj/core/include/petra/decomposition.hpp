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

#ifndef PETRA_DECOMPOSITION_HPP_
#define PETRA_DECOMPOSITION_HPP_

#include <string>
#include <vector>

#include "petra/network.hpp"
#include "petra/tensor.hpp"

namespace petra {

enum class RankCriterionKind : std::uint8_t {
  Energy = 0,
  ExplainedVariance = 1,
  SingularValueProportion = 2,
};

std::string rank_criterion_name(RankCriterionKind k);
RankCriterionKind rank_criterion_from_name(const std::string& s);

struct RankCriterion {
  RankCriterionKind kind = RankCriterionKind::Energy;
  double threshold = 0.9;  // in (0, 1]
};

// Full-rank SVD of a 2-D matrix. S is non-increasing and non-negative,
// U (m,r), V (n,r) have orthonormal columns.
DecomposedFactors svd(const Tensor& matrix);

// Smallest rank satisfying the criterion; always in [1, len(S)].
// ExplainedVariance collapses to Energy after dropping singular values
// below 1e-10 (the customary definition is not more specific than that).
int select_rank(const Tensor& singular_values, const RankCriterion& criterion);

// Attaches truncated factors to a Linear/Conv2D layer; Conv2D weights are
// matricized to (out_ch, in_ch*kh*kw) first. The dense weight tensor is
// released; U, S, V become the trainable parameters.
void decompose_layer(Layer& layer, const RankCriterion& criterion);

// Sweeps all Linear/Conv2D layers; other kinds are skipped.
void decompose_network(Network& net, const RankCriterion& criterion);

// Dense reconstruction U diag(S) V^T in the layer's weight shape.
Tensor reconstruct_weights(const Layer& layer);

// (1/r^2) (||U^T U - I||_F^2 + ||V^T V - I||_F^2)
double orthogonality_loss(const Tensor& u, const Tensor& v);
// Accumulates coeff * d orthogonality_loss / d{U,V} into gu, gv.
void orthogonality_loss_grad(const Tensor& u, const Tensor& v, double coeff,
                             Tensor& gu, Tensor& gv);

// ||S||_1 / ||S||_2; scale-invariant, in [1, sqrt(len(S))].
double hoyer_loss(const Tensor& s);
void hoyer_loss_grad(const Tensor& s, double coeff, Tensor& gs);

struct CompositeLoss {
  double lambda_o = 0.0;
  double lambda_h = 0.0;
  // Auxiliary regularizers; a zero weight disables the term.
  double sparsity_weight = 0.0;  // sum |w| over prunable weights
  double norm_weight = 0.0;      // sum over layers of (||w||_1/||w||_2 - 1)
  double lai_weight = 0.0;       // gradient-magnitude hinge, reported only
  double lai_tau = 1.0;
};

// Sum over prunable layer weights of |w|.
double sparsity_l1(const Network& net);
// Sum over prunable layers of (||w||_1/||w||_2 - 1); zero-norm layers skipped.
double norm_loss(const Network& net);
// Mean over parameter tensors of max(0, ||g||_2 - tau)^2.
double lai_loss(const std::vector<Tensor>& grads, double tau);
// d lai_loss / d g for each gradient tensor.
std::vector<Tensor> lai_loss_grad(const std::vector<Tensor>& grads, double tau);

// Regularizer value added on top of the task loss:
// (lambda_o/|D|) sum L_O + (lambda_h/|D|) sum L_H + weighted aux terms.
// |D| counts decomposed layers; an empty D contributes nothing.
double composite_regularizer_value(const Network& net, const CompositeLoss& loss);

}  // namespace petra

#endif  // PETRA_DECOMPOSITION_HPP_
