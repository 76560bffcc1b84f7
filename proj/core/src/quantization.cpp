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

#include "petra/quantization.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "petra/nn.hpp"

namespace petra {

double round_half_even(double v) {
  const double fl = std::floor(v);
  const double diff = v - fl;
  if (diff > 0.5) return fl + 1.0;
  if (diff < 0.5) return fl;
  // exact half: round to even
  return std::fmod(fl, 2.0) == 0.0 ? fl : fl + 1.0;
}

QuantizedTensor quantize(const Tensor& t) {
  t.check_finite("quantize input");
  QuantizedTensor q;
  const double m = max_abs(t);
  q.scale = m > 0.0 ? m / 127.0 : 1.0;
  q.values.resize(static_cast<std::size_t>(t.size()));
  for (std::int64_t i = 0; i < t.size(); ++i) {
    const double r = round_half_even(t[i] / q.scale);
    q.values[static_cast<std::size_t>(i)] =
        static_cast<std::int8_t>(std::clamp(r, -127.0, 127.0));
  }
  return q;
}

Tensor dequantize(const QuantizedTensor& q, const std::vector<int>& shape) {
  Tensor t(shape);
  if (t.size() != static_cast<std::int64_t>(q.values.size())) {
    throw ShapeError("dequantize: shape does not match value count");
  }
  for (std::int64_t i = 0; i < t.size(); ++i) {
    t[i] = q.values[static_cast<std::size_t>(i)] * q.scale;
  }
  return t;
}

Tensor fake_quant(const Tensor& t) {
  const double m = max_abs(t);
  return fake_quant_with_scale(t, m > 0.0 ? m / 127.0 : 1.0);
}

Tensor fake_quant_with_scale(const Tensor& t, double scale) {
  Tensor out(t.shape());
  for (std::int64_t i = 0; i < t.size(); ++i) {
    const double r = std::clamp(round_half_even(t[i] / scale), -127.0, 127.0);
    out[i] = r * scale;
  }
  return out;
}

std::uint16_t fp16_bits(double v) {
  float f = static_cast<float>(v);
  std::uint32_t x;
  std::memcpy(&x, &f, 4);
  const std::uint32_t sign = (x >> 16) & 0x8000u;
  std::int32_t exp = static_cast<std::int32_t>((x >> 23) & 0xff) - 127 + 15;
  std::uint32_t mant = x & 0x7fffffu;
  if (((x >> 23) & 0xff) == 0xff) {  // inf/nan
    return static_cast<std::uint16_t>(sign | 0x7c00u | (mant ? 0x200u : 0));
  }
  if (exp >= 0x1f) return static_cast<std::uint16_t>(sign | 0x7c00u);  // overflow -> inf
  if (exp <= 0) {
    if (exp < -10) return static_cast<std::uint16_t>(sign);  // underflow -> 0
    // subnormal half: shift with round-to-nearest-even
    mant |= 0x800000u;
    const int shift = 14 - exp;
    std::uint32_t half = mant >> shift;
    const std::uint32_t rem = mant & ((1u << shift) - 1);
    const std::uint32_t halfway = 1u << (shift - 1);
    if (rem > halfway || (rem == halfway && (half & 1u))) ++half;
    return static_cast<std::uint16_t>(sign | half);
  }
  // normal: round mantissa 23 -> 10 bits, nearest even
  std::uint32_t half = (static_cast<std::uint32_t>(exp) << 10) | (mant >> 13);
  const std::uint32_t rem = mant & 0x1fffu;
  if (rem > 0x1000u || (rem == 0x1000u && (half & 1u))) ++half;
  return static_cast<std::uint16_t>(sign | half);
}

double fp16_from_bits(std::uint16_t bits) {
  const std::uint32_t sign = (bits & 0x8000u) << 16;
  const std::uint32_t exp = (bits >> 10) & 0x1f;
  std::uint32_t mant = bits & 0x3ffu;
  std::uint32_t x;
  if (exp == 0) {
    if (mant == 0) {
      x = sign;
    } else {
      // subnormal: normalize
      int e = -1;
      std::uint32_t m = mant;
      do {
        ++e;
        m <<= 1;
      } while ((m & 0x400u) == 0);
      x = sign | (static_cast<std::uint32_t>(127 - 15 - e) << 23) |
          ((m & 0x3ffu) << 13);
    }
  } else if (exp == 0x1f) {
    x = sign | 0x7f800000u | (mant << 13);
  } else {
    x = sign | ((exp - 15 + 127) << 23) | (mant << 13);
  }
  float f;
  std::memcpy(&f, &x, 4);
  return static_cast<double>(f);
}

double fp16_round(double v) { return fp16_from_bits(fp16_bits(v)); }

namespace {

void set_int8(Network& net, QuantMode mode) {
  for (Layer& l : net.layers) {
    if (!l.prunable()) continue;
    l.precision = Precision::I8;
    QuantState qs;
    qs.mode = mode;
    if (l.quant.has_value()) qs.activation_range = l.quant->activation_range;
    l.quant = qs;
  }
  snap_to_precision(net);  // snaps weights to the int8 grid, records scales
}

}  // namespace

void apply_ptq(Network& net, const Tensor& calib_data, int calib_batches,
               int batch_size) {
  if (calib_data.empty() || calib_data.dim(0) == 0) {
    throw DataError("apply_ptq: empty calibration set");
  }
  const int n = calib_data.dim(0);
  const std::int64_t feat = calib_data.size() / n;

  // Per-layer activation min/max over the calibration passes.
  std::vector<double> lo(net.layers.size(), std::numeric_limits<double>::infinity());
  std::vector<double> hi(net.layers.size(), -std::numeric_limits<double>::infinity());
  for (int b = 0; b < calib_batches; ++b) {
    const int start = (b * batch_size) % n;
    const int count = std::min(batch_size, n - start);
    std::vector<int> shape = calib_data.shape();
    shape[0] = count;
    Tensor batch(shape);
    std::copy_n(calib_data.data().begin() + start * feat, count * feat,
                batch.data().begin());
    ForwardCache cache;
    forward(net, batch, ForwardMode::Infer, &cache);
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
      if (!net.layers[i].prunable()) continue;
      const Tensor& y = cache.outputs[i];
      for (std::int64_t k = 0; k < y.size(); ++k) {
        lo[i] = std::min(lo[i], y[k]);
        hi[i] = std::max(hi[i], y[k]);
      }
    }
  }
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (!net.layers[i].prunable()) continue;
    net.layers[i].quant = QuantState{};
    net.layers[i].quant->activation_range = {lo[i], hi[i]};
  }
  set_int8(net, QuantMode::PTQ);
}

void apply_pdq(Network& net) { set_int8(net, QuantMode::PDQ); }

void enable_qat(Network& net) {
  for (Layer& l : net.layers) {
    if (!l.prunable()) continue;
    QuantState qs;
    qs.mode = QuantMode::QAT;
    l.quant = qs;
    // precision stays float during training; export happens in finalize_qat
  }
}

void finalize_qat(Network& net) { set_int8(net, QuantMode::QAT); }

void to_fp16(Network& net) {
  for (Layer& l : net.layers) {
    if (!l.prunable()) continue;
    l.precision = Precision::F16;
    QuantState qs;
    qs.mode = QuantMode::FP16;
    l.quant = qs;
  }
  snap_to_precision(net);
}

}  // namespace petra
