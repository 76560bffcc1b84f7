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

#ifndef PETRA_NN_HPP_
#define PETRA_NN_HPP_

#include <cstdint>
#include <functional>
#include <vector>

#include "petra/decomposition.hpp"
#include "petra/network.hpp"
#include "petra/tensor.hpp"

namespace petra {

// Batch statistics vs frozen running statistics for BatchNorm.
enum class ForwardMode { Infer, Train };

struct ForwardCache {
  std::vector<Tensor> inputs;       // input seen by each layer
  std::vector<Tensor> outputs;      // output of each layer, after skip adds
  std::vector<Tensor> eff_weights;  // effective weight used (mask/quant applied)
  std::vector<Tensor> bn_mean, bn_var, bn_xhat;
  std::vector<Tensor> lr_h1, lr_h2;  // factored-linear intermediates
  Tensor predictions;
};

// Pure forward pass; never mutates the network. In Train mode BatchNorm uses
// batch statistics (recorded in the cache so the training loop can update the
// running estimates); in Infer mode int8 layers also simulate activation
// quantization at layer boundaries.
Tensor forward(const Network& net, const Tensor& batch,
               ForwardMode mode = ForwardMode::Infer,
               ForwardCache* cache = nullptr);

struct LayerGrads {
  Tensor weights, bias;  // dense layers / batchnorm (gamma, beta)
  Tensor u, s, v;        // decomposed layers
};

struct BackwardResult {
  double loss = 0.0;        // task loss + regularizers
  double task_loss = 0.0;
  std::vector<LayerGrads> grads;
};

// Task loss over logits. targets: (n,1) labels or regression values.
double task_loss(const Tensor& logits, const Tensor& targets, Task task);

BackwardResult backward(const Network& net, const Tensor& batch,
                        const Tensor& targets, const CompositeLoss& loss_terms,
                        ForwardMode mode = ForwardMode::Train);

// loss evaluated through the same path backward differentiates (finite
// difference oracle hooks in here).
double loss_value(const Network& net, const Tensor& batch, const Tensor& targets,
                  const CompositeLoss& loss_terms,
                  ForwardMode mode = ForwardMode::Train);

enum class OptimizerKind : std::uint8_t { SGD = 0, SGDMomentum = 1, Adam = 2 };

std::string optimizer_name(OptimizerKind k);
OptimizerKind optimizer_from_name(const std::string& s);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

struct TrainOptions {
  int epochs = 10;
  int batch_size = 32;
  OptimizerConfig optimizer;
  CompositeLoss loss;
  std::uint64_t seed = 0;
};

// Returns false to abort training after the current epoch.
using EarlyStopHook = std::function<bool(int epoch, double val_quality)>;

struct TrainResult {
  std::vector<double> quality_trace;  // per-epoch validation quality
  double best_quality = 0.0;
  bool stopped_early = false;
  double seconds = 0.0;
};

// Mini-batch training; the network is left at its best-validation-quality
// checkpoint. Masked weights never move.
TrainResult train(Network& net, const Tensor& x_train, const Tensor& y_train,
                  const Tensor& x_val, const Tensor& y_val,
                  const TrainOptions& opts, const EarlyStopHook& hook = {});

// Validation quality in the task's native metric (ROC-AUC, F1-macro, RMSE).
double evaluate_quality(const Network& net, const Tensor& x, const Tensor& y);
// Direction-normalized quality: higher is always better (RMSE negated).
double quality_score(double quality, Task task);

// Builtin desk-scale architectures.
Network make_mlp(int input_dim, int hidden, Task task, int num_classes,
                 std::uint64_t seed);
// Two conv blocks with BatchNorm and a residual skip, then a linear head.
Network make_tiny_cnn(int in_ch, int img_h, int img_w, int num_classes,
                      std::uint64_t seed);

}  // namespace petra

#endif  // PETRA_NN_HPP_
