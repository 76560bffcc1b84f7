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

#ifndef PETRA_NETWORK_HPP_
#define PETRA_NETWORK_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "petra/tensor.hpp"

namespace petra {

enum class LayerKind : std::uint8_t {
  Linear = 0,
  Conv2D = 1,
  BatchNorm = 2,
  ReLU = 3,
  Flatten = 4,
};

std::string layer_kind_name(LayerKind k);

enum class QuantMode : std::uint8_t { PTQ = 0, PDQ = 1, QAT = 2, FP16 = 3 };

// Per-layer quantization record. `scales` parallels the layer's stored
// parameter tensors in canonical order (weights | U,S,V; then bias); PTQ
// additionally freezes a calibrated activation range.
struct QuantState {
  QuantMode mode = QuantMode::PDQ;
  std::vector<double> scales;
  std::optional<std::pair<double, double>> activation_range;  // PTQ only
};

// Truncated SVD factors of a weight matrix W (m x n) ~= U diag(S) V^T.
struct DecomposedFactors {
  Tensor u;  // (m, r)
  Tensor s;  // (r)
  Tensor v;  // (n, r)
  int rank = 0;
};

struct Layer {
  LayerKind kind = LayerKind::Linear;

  // Linear: weights (out, in). Conv2D: weights (oc, ic, kh, kw).
  // BatchNorm: weights = gamma (c), bias = beta (c).
  Tensor weights;
  Tensor bias;

  std::optional<Tensor> mask;               // same shape as weights, {0,1}
  std::optional<QuantState> quant;
  std::optional<DecomposedFactors> decomp;  // replaces weights when present

  Precision precision = Precision::F32;

  // Conv2D only
  int stride = 1;
  int padding = 0;

  // BatchNorm only
  Tensor running_mean;
  Tensor running_var;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;

  bool has_params() const {
    return kind == LayerKind::Linear || kind == LayerKind::Conv2D ||
           kind == LayerKind::BatchNorm;
  }
  bool prunable() const {
    return kind == LayerKind::Linear || kind == LayerKind::Conv2D;
  }
};

enum class Task : std::uint8_t {
  BinaryClassification = 0,
  MulticlassClassification = 1,
  Regression = 2,
};

std::string task_name(Task t);
Task task_from_name(const std::string& s);

// Residual skip: the input of layer `from` is added to the output of layer
// `to` (from <= to, shapes must match).
struct SkipConnection {
  int from = 0;
  int to = 0;
};

struct Network {
  std::vector<Layer> layers;
  Task task = Task::BinaryClassification;
  int num_classes = 2;  // multiclass only
  std::vector<SkipConnection> skips;
};

// Layer construction helpers; weight init is Kaiming-uniform from the given rng seed.
Layer make_linear(int in, int out, std::uint64_t seed);
Layer make_conv2d(int in_ch, int out_ch, int kh, int kw, std::uint64_t seed,
                  int stride = 1, int padding = 0);
Layer make_batchnorm(int channels);
Layer make_relu();
Layer make_flatten();

// Trainable tensors of a layer in canonical order: weights (or U, S, V when
// decomposed), then bias; BatchNorm contributes gamma and beta.
std::vector<Tensor*> param_tensors(Layer& layer);
std::vector<const Tensor*> param_tensors(const Layer& layer);

std::int64_t count_parameters(const Network& net);
std::int64_t model_size_bytes(const Network& net);

// True when every layer's stored precision permits execution on the profile:
// int8 layers are CPU-only, fp16/fp32 run on both.
bool is_int8(const Network& net);

// Rounds all stored parameters onto the grid of their layer's storage
// precision. Called at stage boundaries so in-memory state always matches
// its checkpoint byte-for-byte.
void snap_to_precision(Network& net);

}  // namespace petra

#endif  // PETRA_NETWORK_HPP_
