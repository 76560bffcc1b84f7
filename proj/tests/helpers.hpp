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

#ifndef PETRA_TESTS_HELPERS_HPP_
#define PETRA_TESTS_HELPERS_HPP_

#include <cmath>
#include <vector>

#include "petra/decomposition.hpp"
#include "petra/network.hpp"
#include "petra/nn.hpp"
#include "petra/rng.hpp"
#include "petra/tensor.hpp"

namespace petra::testing {

inline Tensor random_tensor(std::vector<int> shape, std::uint64_t seed,
                            double scale = 1.0) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
  return t;
}

inline Tensor random_labels(int n, int num_classes, std::uint64_t seed) {
  Tensor y({n, 1});
  Rng rng(seed);
  for (int i = 0; i < n; ++i) y[i] = rng.uniform_int(0, num_classes - 1);
  return y;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  int checked = 0;
};

// Central finite differences over every trainable parameter of `net`,
// compared against the analytic gradients from backward().
inline GradCheckResult grad_check(Network net, const Tensor& x, const Tensor& y,
                                  const CompositeLoss& loss, double h = 1e-6) {
  GradCheckResult out;
  const BackwardResult br = backward(net, x, y, loss, ForwardMode::Train);
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    Layer& layer = net.layers[li];
    if (!layer.has_params()) continue;
    std::vector<Tensor*> params = param_tensors(layer);
    std::vector<const Tensor*> grads;
    const LayerGrads& g = br.grads[li];
    if (layer.decomp.has_value()) {
      grads = {&g.u, &g.s, &g.v};
      if (!layer.bias.empty()) grads.push_back(&g.bias);
    } else {
      grads = {&g.weights};
      if (!layer.bias.empty()) grads.push_back(&g.bias);
    }
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
      Tensor& p = *params[pi];
      for (std::int64_t k = 0; k < p.size(); ++k) {
        const double orig = p[k];
        p[k] = orig + h;
        const double lp = loss_value(net, x, y, loss, ForwardMode::Train);
        p[k] = orig - h;
        const double lm = loss_value(net, x, y, loss, ForwardMode::Train);
        p[k] = orig;
        const double fd = (lp - lm) / (2.0 * h);
        const double an = (*grads[pi])[k];
        // Directions the loss is flat in (e.g. conv bias under BatchNorm)
        // leave both sides at roundoff noise; skip the ratio there.
        if (std::fabs(fd - an) < 1e-7) {
          ++out.checked;
          continue;
        }
        const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-8});
        out.max_rel_error = std::max(out.max_rel_error,
                                     std::fabs(fd - an) / denom);
        ++out.checked;
      }
    }
  }
  return out;
}

}  // namespace petra::testing

#endif  // PETRA_TESTS_HELPERS_HPP_
