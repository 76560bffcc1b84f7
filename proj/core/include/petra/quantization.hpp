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

#ifndef PETRA_QUANTIZATION_HPP_
#define PETRA_QUANTIZATION_HPP_

#include <cstdint>
#include <vector>

#include "petra/network.hpp"
#include "petra/tensor.hpp"

namespace petra {

// Symmetric per-tensor int8: scale = max|t|/127, values round-half-even and
// clamp to [-127, 127]. An all-zero tensor gets scale 1.
struct QuantizedTensor {
  std::vector<std::int8_t> values;
  double scale = 1.0;
};

QuantizedTensor quantize(const Tensor& t);
Tensor dequantize(const QuantizedTensor& q, const std::vector<int>& shape);

// quantize then dequantize in place with the given (or derived) scale.
Tensor fake_quant(const Tensor& t);
Tensor fake_quant_with_scale(const Tensor& t, double scale);

double round_half_even(double v);

// Nearest fp16-representable value (round-to-nearest-even, IEEE binary16).
double fp16_round(double v);
std::uint16_t fp16_bits(double v);
double fp16_from_bits(std::uint16_t bits);

// Post-training static quantization: weights snapped to the int8 grid and a
// per-layer activation range calibrated over forward passes on calib_data.
// The number of calibration batches defaults to 8.
void apply_ptq(Network& net, const Tensor& calib_data, int calib_batches = 8,
               int batch_size = 32);

// Post-training dynamic quantization: weights int8, activation scales
// computed per forward call.
void apply_pdq(Network& net);

// Marks weighted layers for fake-quant forward with straight-through
// gradients; used by the training loop. Export via finalize_qat.
void enable_qat(Network& net);
// Snaps QAT weights to the int8 grid (dynamic activation handling, as PDQ).
void finalize_qat(Network& net);

void to_fp16(Network& net);

}  // namespace petra

#endif  // PETRA_QUANTIZATION_HPP_
