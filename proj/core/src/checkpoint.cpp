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

#include "petra/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "petra/quantization.hpp"

namespace petra {

namespace {

constexpr char kMagic[4] = {'P', 'T', 'R', 'A'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  std::vector<std::uint8_t> bytes;

  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f32(float v) {
    std::uint32_t x;
    std::memcpy(&x, &v, 4);
    u32(x);
  }
  void f64(double v) {
    std::uint64_t x;
    std::memcpy(&x, &v, 8);
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
  }
  void shape(const std::vector<int>& s) {
    u8(static_cast<std::uint8_t>(s.size()));
    for (int d : s) i32(d);
  }
  void payload(const Tensor& t, Precision p) {
    switch (p) {
      case Precision::F32:
        for (double v : t.data()) f32(static_cast<float>(v));
        break;
      case Precision::F16:
        for (double v : t.data()) {
          const std::uint16_t h = fp16_bits(v);
          bytes.push_back(static_cast<std::uint8_t>(h & 0xff));
          bytes.push_back(static_cast<std::uint8_t>(h >> 8));
        }
        break;
      case Precision::I8: {
        QuantizedTensor q = quantize(t);
        f32(static_cast<float>(q.scale));
        for (std::int8_t v : q.values) bytes.push_back(static_cast<std::uint8_t>(v));
        break;
      }
    }
  }
  void bitmask(const Tensor& t) {
    std::uint8_t acc = 0;
    int nbits = 0;
    for (std::int64_t i = 0; i < t.size(); ++i) {
      if (t[i] != 0.0) acc |= static_cast<std::uint8_t>(1u << nbits);
      if (++nbits == 8) {
        bytes.push_back(acc);
        acc = 0;
        nbits = 0;
      }
    }
    if (nbits) bytes.push_back(acc);
  }
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : bytes_(b) {}

  std::uint8_t u8() { return bytes_.at(pos_++); }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  float f32() {
    const std::uint32_t x = u32();
    float v;
    std::memcpy(&v, &x, 4);
    return v;
  }
  double f64() {
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(u8()) << (8 * i);
    double v;
    std::memcpy(&v, &x, 8);
    return v;
  }
  std::vector<int> shape() {
    const int n = u8();
    std::vector<int> s(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = i32();
    return s;
  }
  Tensor payload(const std::vector<int>& shape, Precision p) {
    Tensor t(shape);
    switch (p) {
      case Precision::F32:
        for (auto& v : t.data()) v = static_cast<double>(f32());
        break;
      case Precision::F16:
        for (auto& v : t.data()) {
          const std::uint16_t lo = u8();
          const std::uint16_t hi = u8();
          v = fp16_from_bits(static_cast<std::uint16_t>(lo | (hi << 8)));
        }
        break;
      case Precision::I8: {
        const double scale = static_cast<double>(f32());
        for (auto& v : t.data()) {
          v = static_cast<std::int8_t>(u8()) * scale;
        }
        break;
      }
    }
    return t;
  }
  Tensor bitmask(const std::vector<int>& shape) {
    Tensor t(shape);
    std::uint8_t acc = 0;
    int nbits = 8;
    for (std::int64_t i = 0; i < t.size(); ++i) {
      if (nbits == 8) {
        acc = u8();
        nbits = 0;
      }
      t[i] = (acc >> nbits) & 1u;
      ++nbits;
    }
    return t;
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

constexpr std::uint8_t kFlagMask = 1;
constexpr std::uint8_t kFlagQuant = 2;
constexpr std::uint8_t kFlagDecomp = 4;
constexpr std::uint8_t kFlagBN = 8;

}  // namespace

std::vector<std::uint8_t> serialize_network(const Network& net) {
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kVersion);
  w.u8(static_cast<std::uint8_t>(net.task));
  w.u32(static_cast<std::uint32_t>(net.num_classes));
  w.u32(static_cast<std::uint32_t>(net.skips.size()));
  for (const auto& s : net.skips) {
    w.i32(s.from);
    w.i32(s.to);
  }
  w.u32(static_cast<std::uint32_t>(net.layers.size()));
  for (const Layer& l : net.layers) {
    w.u8(static_cast<std::uint8_t>(l.kind));
    w.u8(static_cast<std::uint8_t>(l.precision));
    std::uint8_t flags = 0;
    if (l.mask.has_value()) flags |= kFlagMask;
    if (l.quant.has_value()) flags |= kFlagQuant;
    if (l.decomp.has_value()) flags |= kFlagDecomp;
    if (l.kind == LayerKind::BatchNorm) flags |= kFlagBN;
    w.u8(flags);
    w.i32(l.stride);
    w.i32(l.padding);
    w.shape(l.weights.empty() ? std::vector<int>{} : l.weights.shape());
    w.shape(l.bias.empty() ? std::vector<int>{} : l.bias.shape());
    if (l.decomp.has_value()) {
      w.u32(static_cast<std::uint32_t>(l.decomp->rank));
      w.shape(l.decomp->u.shape());
      w.shape(l.decomp->v.shape());
      w.payload(l.decomp->u, l.precision);
      w.payload(l.decomp->s, l.precision);
      w.payload(l.decomp->v, l.precision);
    } else if (l.has_params()) {
      w.payload(l.weights, l.precision);
    }
    if (!l.bias.empty()) w.payload(l.bias, l.precision);
    if (l.kind == LayerKind::BatchNorm) {
      w.f64(l.bn_momentum);
      w.f64(l.bn_eps);
      w.payload(l.running_mean, Precision::F32);
      w.payload(l.running_var, Precision::F32);
    }
    if (l.mask.has_value()) w.bitmask(*l.mask);
    if (l.quant.has_value()) {
      w.u8(static_cast<std::uint8_t>(l.quant->mode));
      w.u8(l.quant->activation_range.has_value() ? 1 : 0);
      if (l.quant->activation_range.has_value()) {
        w.f32(static_cast<float>(l.quant->activation_range->first));
        w.f32(static_cast<float>(l.quant->activation_range->second));
      }
    }
  }
  return w.bytes;
}

Network deserialize_network(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  for (char c : kMagic) {
    if (r.u8() != static_cast<std::uint8_t>(c)) {
      throw IoError("checkpoint: bad magic, not a PTRA container");
    }
  }
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw IoError("checkpoint: unsupported version " + std::to_string(version));
  }
  Network net;
  net.task = static_cast<Task>(r.u8());
  net.num_classes = static_cast<int>(r.u32());
  const std::uint32_t nskips = r.u32();
  for (std::uint32_t i = 0; i < nskips; ++i) {
    SkipConnection s;
    s.from = r.i32();
    s.to = r.i32();
    net.skips.push_back(s);
  }
  const std::uint32_t nl = r.u32();
  for (std::uint32_t i = 0; i < nl; ++i) {
    Layer l;
    l.kind = static_cast<LayerKind>(r.u8());
    l.precision = static_cast<Precision>(r.u8());
    const std::uint8_t flags = r.u8();
    l.stride = r.i32();
    l.padding = r.i32();
    const std::vector<int> wshape = r.shape();
    const std::vector<int> bshape = r.shape();
    if (flags & kFlagDecomp) {
      DecomposedFactors d;
      d.rank = static_cast<int>(r.u32());
      const auto ushape = r.shape();
      const auto vshape = r.shape();
      d.u = r.payload(ushape, l.precision);
      d.s = r.payload({d.rank}, l.precision);
      d.v = r.payload(vshape, l.precision);
      l.decomp = std::move(d);
      if (!wshape.empty()) l.weights = Tensor(wshape);  // shape holder only
    } else if (!wshape.empty()) {
      l.weights = r.payload(wshape, l.precision);
    }
    if (!bshape.empty()) l.bias = r.payload(bshape, l.precision);
    if (flags & kFlagBN) {
      l.bn_momentum = r.f64();
      l.bn_eps = r.f64();
      l.running_mean = r.payload(l.weights.shape(), Precision::F32);
      l.running_var = r.payload(l.weights.shape(), Precision::F32);
    }
    if (flags & kFlagMask) l.mask = r.bitmask(wshape);
    if (flags & kFlagQuant) {
      QuantState qs;
      qs.mode = static_cast<QuantMode>(r.u8());
      if (r.u8()) {
        const double lo = static_cast<double>(r.f32());
        const double hi = static_cast<double>(r.f32());
        qs.activation_range = {lo, hi};
      }
      l.quant = qs;
    }
    net.layers.push_back(std::move(l));
  }
  // Re-derive int8 scales so in-memory state matches the snapped payloads.
  snap_to_precision(net);
  return net;
}

void save_checkpoint(const Network& net, const std::string& path) {
  const auto bytes = serialize_network(net);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write on checkpoint: " + path);
}

Network load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_network(bytes);
}

}  // namespace petra
