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

#include "petra/nn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "petra/metrics.hpp"
#include "petra/quantization.hpp"
#include "petra/rng.hpp"

namespace petra {

std::string layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Linear: return "Linear";
    case LayerKind::Conv2D: return "Conv2D";
    case LayerKind::BatchNorm: return "BatchNorm";
    case LayerKind::ReLU: return "ReLU";
    case LayerKind::Flatten: return "Flatten";
  }
  return "?";
}

Task task_from_name(const std::string& s) {
  if (s == "binary_classification") return Task::BinaryClassification;
  if (s == "multiclass_classification") return Task::MulticlassClassification;
  if (s == "regression") return Task::Regression;
  throw ConfigError("unknown task " + s);
}

std::string task_name(Task t) {
  switch (t) {
    case Task::BinaryClassification: return "binary_classification";
    case Task::MulticlassClassification: return "multiclass_classification";
    case Task::Regression: return "regression";
  }
  return "?";
}

std::string optimizer_name(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::SGD: return "sgd";
    case OptimizerKind::SGDMomentum: return "momentum";
    case OptimizerKind::Adam: return "adam";
  }
  return "?";
}

OptimizerKind optimizer_from_name(const std::string& s) {
  if (s == "sgd") return OptimizerKind::SGD;
  if (s == "momentum") return OptimizerKind::SGDMomentum;
  if (s == "adam") return OptimizerKind::Adam;
  throw ConfigError("unknown optimizer: " + s);
}

namespace {

void kaiming_uniform(Tensor& w, int fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / fan_in);
  for (std::int64_t i = 0; i < w.size(); ++i) {
    w[i] = rng.uniform(-bound, bound);
  }
}

}  // namespace

Layer make_linear(int in, int out, std::uint64_t seed) {
  Layer l;
  l.kind = LayerKind::Linear;
  l.weights = Tensor({out, in});
  l.bias = Tensor({out});
  Rng rng(seed);
  kaiming_uniform(l.weights, in, rng);
  return l;
}

Layer make_conv2d(int in_ch, int out_ch, int kh, int kw, std::uint64_t seed,
                  int stride, int padding) {
  Layer l;
  l.kind = LayerKind::Conv2D;
  l.weights = Tensor({out_ch, in_ch, kh, kw});
  l.bias = Tensor({out_ch});
  l.stride = stride;
  l.padding = padding;
  Rng rng(seed);
  kaiming_uniform(l.weights, in_ch * kh * kw, rng);
  return l;
}

Layer make_batchnorm(int channels) {
  Layer l;
  l.kind = LayerKind::BatchNorm;
  l.weights = Tensor::full({channels}, 1.0);  // gamma
  l.bias = Tensor({channels});                // beta
  l.running_mean = Tensor({channels});
  l.running_var = Tensor::full({channels}, 1.0);
  return l;
}

Layer make_relu() {
  Layer l;
  l.kind = LayerKind::ReLU;
  return l;
}

Layer make_flatten() {
  Layer l;
  l.kind = LayerKind::Flatten;
  return l;
}

std::vector<Tensor*> param_tensors(Layer& layer) {
  std::vector<Tensor*> out;
  if (!layer.has_params()) return out;
  if (layer.decomp.has_value()) {
    out.push_back(&layer.decomp->u);
    out.push_back(&layer.decomp->s);
    out.push_back(&layer.decomp->v);
  } else {
    out.push_back(&layer.weights);
  }
  if (!layer.bias.empty()) out.push_back(&layer.bias);
  return out;
}

std::vector<const Tensor*> param_tensors(const Layer& layer) {
  auto ptrs = param_tensors(const_cast<Layer&>(layer));
  return {ptrs.begin(), ptrs.end()};
}

std::int64_t count_parameters(const Network& net) {
  std::int64_t n = 0;
  for (const Layer& l : net.layers) {
    for (const Tensor* t : param_tensors(l)) n += t->size();
  }
  return n;
}

std::int64_t model_size_bytes(const Network& net) {
  std::int64_t bytes = 0;
  for (const Layer& l : net.layers) {
    const int bpe = bytes_per_element(l.precision);
    for (const Tensor* t : param_tensors(l)) {
      bytes += t->size() * bpe;
      if (l.precision == Precision::I8) bytes += 4;  // fp32 scale per tensor
    }
    // BatchNorm running statistics are part of the stored model (always fp32).
    bytes += (l.running_mean.size() + l.running_var.size()) * 4;
  }
  return bytes;
}

bool is_int8(const Network& net) {
  for (const Layer& l : net.layers) {
    if (l.precision == Precision::I8) return true;
  }
  return false;
}

void snap_to_precision(Network& net) {
  for (Layer& l : net.layers) {
    auto params = param_tensors(l);
    if (l.precision == Precision::I8) {
      // Re-derive scales so snapping is well-defined even if weights moved.
      if (!l.quant.has_value()) l.quant = QuantState{};
      l.quant->scales.resize(params.size());
      for (std::size_t i = 0; i < params.size(); ++i) {
        QuantizedTensor q = quantize(*params[i]);
        const double s = static_cast<double>(static_cast<float>(q.scale));
        l.quant->scales[i] = s;
        for (std::size_t j = 0; j < q.values.size(); ++j) {
          params[i]->data()[j] = q.values[j] * s;
        }
      }
    } else if (l.precision == Precision::F16) {
      for (Tensor* t : params) {
        for (auto& v : t->data()) v = fp16_round(v);
      }
    } else {
      for (Tensor* t : params) {
        for (auto& v : t->data()) v = static_cast<double>(static_cast<float>(v));
      }
    }
    for (auto& v : l.running_mean.data()) v = static_cast<double>(static_cast<float>(v));
    for (auto& v : l.running_var.data()) v = static_cast<double>(static_cast<float>(v));
  }
}

namespace {

Tensor effective_dense_weights(const Layer& l) {
  Tensor w = l.weights;
  if (l.mask.has_value()) {
    for (std::int64_t i = 0; i < w.size(); ++i) w[i] *= (*l.mask)[i];
  }
  if (l.quant.has_value() && l.quant->mode == QuantMode::QAT) {
    w = fake_quant(w);
  }
  return w;
}

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b,
                      int stride, int padding) {
  if (x.ndim() != 4) throw ShapeError("Conv2D expects (n,c,h,w) input, got " + x.shape_str());
  const int n = x.dim(0), ic = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int oc = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  if (w.dim(1) != ic) {
    throw ShapeError("Conv2D channel mismatch: input " + x.shape_str() +
                     " vs kernel " + w.shape_str());
  }
  const int oh = (h + 2 * padding - kh) / stride + 1;
  const int ow = (wd + 2 * padding - kw) / stride + 1;
  if (oh <= 0 || ow <= 0) throw ShapeError("Conv2D output would be empty");
  Tensor y({n, oc, oh, ow});
  const auto& xd = x.data();
  const auto& wd_ = w.data();
  auto& yd = y.data();
  for (int im = 0; im < n; ++im) {
    for (int o = 0; o < oc; ++o) {
      for (int i = 0; i < oh; ++i) {
        for (int j = 0; j < ow; ++j) {
          double acc = b.empty() ? 0.0 : b[o];
          for (int c = 0; c < ic; ++c) {
            for (int u = 0; u < kh; ++u) {
              const int xi = i * stride + u - padding;
              if (xi < 0 || xi >= h) continue;
              for (int vv = 0; vv < kw; ++vv) {
                const int xj = j * stride + vv - padding;
                if (xj < 0 || xj >= wd) continue;
                acc += xd[((static_cast<std::size_t>(im) * ic + c) * h + xi) * wd + xj] *
                       wd_[((static_cast<std::size_t>(o) * ic + c) * kh + u) * kw + vv];
              }
            }
          }
          yd[((static_cast<std::size_t>(im) * oc + o) * oh + i) * ow + j] = acc;
        }
      }
    }
  }
  return y;
}

// Per-channel moments of (n,c) or (n,c,h,w).
void channel_moments(const Tensor& x, Tensor& mean, Tensor& var) {
  const int n = x.dim(0), c = x.dim(1);
  const std::int64_t spatial = x.size() / (static_cast<std::int64_t>(n) * c);
  mean = Tensor({c});
  var = Tensor({c});
  for (int ch = 0; ch < c; ++ch) {
    double m = 0.0;
    for (int im = 0; im < n; ++im) {
      for (std::int64_t s = 0; s < spatial; ++s) {
        m += x[(static_cast<std::int64_t>(im) * c + ch) * spatial + s];
      }
    }
    m /= static_cast<double>(n * spatial);
    double v = 0.0;
    for (int im = 0; im < n; ++im) {
      for (std::int64_t s = 0; s < spatial; ++s) {
        const double d = x[(static_cast<std::int64_t>(im) * c + ch) * spatial + s] - m;
        v += d * d;
      }
    }
    mean[ch] = m;
    var[ch] = v / static_cast<double>(n * spatial);
  }
}

}  // namespace

Tensor forward(const Network& net, const Tensor& batch, ForwardMode mode,
               ForwardCache* cache) {
  const std::size_t nl = net.layers.size();
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.inputs.assign(nl, Tensor());
  c.outputs.assign(nl, Tensor());
  c.eff_weights.assign(nl, Tensor());
  c.bn_mean.assign(nl, Tensor());
  c.bn_var.assign(nl, Tensor());
  c.bn_xhat.assign(nl, Tensor());
  c.lr_h1.assign(nl, Tensor());
  c.lr_h2.assign(nl, Tensor());

  Tensor x = batch;
  // Datasets hand batches over as flattened (n, d) rows; unflatten them for
  // convolutional stems (square images assumed).
  if (x.ndim() == 2 && nl > 0 && net.layers[0].kind == LayerKind::Conv2D) {
    const int ic = net.layers[0].weights.dim(1);
    const int hw = x.dim(1) / ic;
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(hw))));
    if (ic * side * side != x.dim(1)) {
      throw ShapeError("cannot unflatten " + x.shape_str() + " for a Conv2D stem");
    }
    x = x.reshaped({x.dim(0), ic, side, side});
  }
  for (std::size_t i = 0; i < nl; ++i) {
    const Layer& l = net.layers[i];
    c.inputs[i] = x;
    Tensor y;
    switch (l.kind) {
      case LayerKind::Linear: {
        if (x.ndim() != 2) throw ShapeError("Linear expects (n,d) input, got " + x.shape_str());
        if (l.decomp.has_value()) {
          const auto& d = *l.decomp;
          Tensor h1 = matmul(x, d.v);  // (n, r)
          Tensor h2 = h1;
          for (int row = 0; row < h2.dim(0); ++row) {
            for (int k = 0; k < d.rank; ++k) h2.at(row, k) *= d.s[k];
          }
          y = matmul_nt(h2, d.u, l.bias);
          c.lr_h1[i] = std::move(h1);
          c.lr_h2[i] = std::move(h2);
        } else {
          Tensor w = effective_dense_weights(l);
          y = matmul_nt(x, w, l.bias);
          c.eff_weights[i] = std::move(w);
        }
        break;
      }
      case LayerKind::Conv2D: {
        Tensor w = l.decomp.has_value() ? reconstruct_weights(l)
                                        : effective_dense_weights(l);
        y = conv2d_forward(x, w, l.bias, l.stride, l.padding);
        c.eff_weights[i] = std::move(w);
        break;
      }
      case LayerKind::BatchNorm: {
        if (x.ndim() != 2 && x.ndim() != 4) {
          throw ShapeError("BatchNorm expects (n,c) or (n,c,h,w), got " + x.shape_str());
        }
        const int ch_count = x.dim(1);
        if (ch_count != l.weights.dim(0)) {
          throw ShapeError("BatchNorm channel mismatch");
        }
        Tensor mean, var;
        if (mode == ForwardMode::Train) {
          channel_moments(x, mean, var);
        } else {
          mean = l.running_mean;
          var = l.running_var;
        }
        const std::int64_t spatial =
            x.size() / (static_cast<std::int64_t>(x.dim(0)) * ch_count);
        y = Tensor(x.shape());
        Tensor xhat(x.shape());
        for (int im = 0; im < x.dim(0); ++im) {
          for (int chn = 0; chn < ch_count; ++chn) {
            const double inv = 1.0 / std::sqrt(var[chn] + l.bn_eps);
            for (std::int64_t s = 0; s < spatial; ++s) {
              const std::int64_t idx =
                  (static_cast<std::int64_t>(im) * ch_count + chn) * spatial + s;
              const double xh = (x[idx] - mean[chn]) * inv;
              xhat[idx] = xh;
              y[idx] = l.weights[chn] * xh + l.bias[chn];
            }
          }
        }
        c.bn_mean[i] = std::move(mean);
        c.bn_var[i] = std::move(var);
        c.bn_xhat[i] = std::move(xhat);
        break;
      }
      case LayerKind::ReLU: {
        y = x;
        for (auto& v : y.data()) v = v > 0.0 ? v : 0.0;
        break;
      }
      case LayerKind::Flatten: {
        const int n = x.dim(0);
        y = x.reshaped({n, static_cast<int>(x.size() / n)});
        break;
      }
    }
    for (const SkipConnection& sk : net.skips) {
      if (sk.to == static_cast<int>(i)) {
        const Tensor& add = c.inputs[static_cast<std::size_t>(sk.from)];
        if (!add.same_shape(y)) {
          throw ShapeError("skip connection shape mismatch: " + add.shape_str() +
                           " vs " + y.shape_str());
        }
        for (std::int64_t k = 0; k < y.size(); ++k) y[k] += add[k];
      }
    }
    // Simulated int8 activation path at inference.
    if (mode == ForwardMode::Infer && l.quant.has_value() && l.prunable()) {
      if (l.quant->mode == QuantMode::PTQ) {
        const auto& r = l.quant->activation_range;
        if (!r.has_value()) throw Error("PTQ layer missing calibrated range");
        const double s = std::max(std::abs(r->first), std::abs(r->second)) / 127.0;
        y = fake_quant_with_scale(y, s > 0 ? s : 1.0);
      } else if (l.quant->mode == QuantMode::PDQ) {
        y = fake_quant(y);
      }
    }
    c.outputs[i] = y;
    x = std::move(y);
  }
  x.check_finite("forward output");
  c.predictions = x;
  return x;
}

double task_loss(const Tensor& logits, const Tensor& targets, Task task) {
  const int n = logits.dim(0);
  if (targets.dim(0) != n) throw ShapeError("targets batch size mismatch");
  double loss = 0.0;
  switch (task) {
    case Task::BinaryClassification: {
      for (int i = 0; i < n; ++i) {
        const double z = logits[i], yv = targets[i];
        loss += std::max(z, 0.0) - z * yv + std::log1p(std::exp(-std::abs(z)));
      }
      loss /= n;
      break;
    }
    case Task::MulticlassClassification: {
      const int k = logits.dim(1);
      for (int i = 0; i < n; ++i) {
        double mx = logits.at(i, 0);
        for (int j = 1; j < k; ++j) mx = std::max(mx, logits.at(i, j));
        double lse = 0.0;
        for (int j = 0; j < k; ++j) lse += std::exp(logits.at(i, j) - mx);
        const int cls = static_cast<int>(targets[i]);
        loss += mx + std::log(lse) - logits.at(i, cls);
      }
      loss /= n;
      break;
    }
    case Task::Regression: {
      for (std::int64_t i = 0; i < logits.size(); ++i) {
        const double d = logits[i] - targets[i];
        loss += d * d;
      }
      loss /= static_cast<double>(logits.size());
      break;
    }
  }
  if (!std::isfinite(loss)) throw NumericError("non-finite task loss");
  return loss;
}

namespace {

Tensor task_loss_grad(const Tensor& logits, const Tensor& targets, Task task) {
  const int n = logits.dim(0);
  Tensor g(logits.shape());
  switch (task) {
    case Task::BinaryClassification: {
      for (int i = 0; i < n; ++i) {
        const double z = logits[i];
        const double sig = 1.0 / (1.0 + std::exp(-z));
        g[i] = (sig - targets[i]) / n;
      }
      break;
    }
    case Task::MulticlassClassification: {
      const int k = logits.dim(1);
      for (int i = 0; i < n; ++i) {
        double mx = logits.at(i, 0);
        for (int j = 1; j < k; ++j) mx = std::max(mx, logits.at(i, j));
        double lse = 0.0;
        for (int j = 0; j < k; ++j) lse += std::exp(logits.at(i, j) - mx);
        for (int j = 0; j < k; ++j) {
          g.at(i, j) = std::exp(logits.at(i, j) - mx) / lse / n;
        }
        g.at(i, static_cast<int>(targets[i])) -= 1.0 / n;
      }
      break;
    }
    case Task::Regression: {
      for (std::int64_t i = 0; i < logits.size(); ++i) {
        g[i] = 2.0 * (logits[i] - targets[i]) / static_cast<double>(logits.size());
      }
      break;
    }
  }
  return g;
}

void conv2d_backward(const Tensor& x, const Tensor& w, int stride, int padding,
                     const Tensor& gy, Tensor& gx, Tensor& gw, Tensor& gb) {
  const int n = x.dim(0), ic = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int oc = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int oh = gy.dim(2), ow = gy.dim(3);
  gx = Tensor(x.shape());
  gw = Tensor(w.shape());
  gb = Tensor({oc});
  for (int im = 0; im < n; ++im) {
    for (int o = 0; o < oc; ++o) {
      for (int i = 0; i < oh; ++i) {
        for (int j = 0; j < ow; ++j) {
          const double g =
              gy[((static_cast<std::size_t>(im) * oc + o) * oh + i) * ow + j];
          gb[o] += g;
          for (int c = 0; c < ic; ++c) {
            for (int u = 0; u < kh; ++u) {
              const int xi = i * stride + u - padding;
              if (xi < 0 || xi >= h) continue;
              for (int vv = 0; vv < kw; ++vv) {
                const int xj = j * stride + vv - padding;
                if (xj < 0 || xj >= wd) continue;
                const std::size_t xidx =
                    ((static_cast<std::size_t>(im) * ic + c) * h + xi) * wd + xj;
                const std::size_t widx =
                    ((static_cast<std::size_t>(o) * ic + c) * kh + u) * kw + vv;
                gw[widx] += g * x[xidx];
                gx[xidx] += g * w[widx];
              }
            }
          }
        }
      }
    }
  }
}

// Chain a dense-weight gradient into SVD factors: W = U diag(S) V^T.
void factor_grads_from_dense(const DecomposedFactors& d, const Tensor& gw_mat,
                             Tensor& gu, Tensor& gs, Tensor& gv) {
  // gU = gW V diag(S); gV = gW^T U diag(S); gS_k = u_k^T gW v_k
  Tensor gwv = matmul(gw_mat, d.v);             // (m, r)
  Tensor gwtu = matmul(transpose2d(gw_mat), d.u);  // (n, r)
  gu = Tensor(d.u.shape());
  gv = Tensor(d.v.shape());
  gs = Tensor(d.s.shape());
  for (int i = 0; i < d.u.dim(0); ++i) {
    for (int k = 0; k < d.rank; ++k) gu.at(i, k) = gwv.at(i, k) * d.s[k];
  }
  for (int i = 0; i < d.v.dim(0); ++i) {
    for (int k = 0; k < d.rank; ++k) gv.at(i, k) = gwtu.at(i, k) * d.s[k];
  }
  for (int k = 0; k < d.rank; ++k) {
    double acc = 0.0;
    for (int i = 0; i < d.u.dim(0); ++i) acc += d.u.at(i, k) * gwv.at(i, k);
    gs[k] = acc;
  }
}

}  // namespace

BackwardResult backward(const Network& net, const Tensor& batch,
                        const Tensor& targets, const CompositeLoss& loss_terms,
                        ForwardMode mode) {
  ForwardCache cache;
  forward(net, batch, mode, &cache);
  const std::size_t nl = net.layers.size();

  BackwardResult res;
  res.task_loss = task_loss(cache.predictions, targets, net.task);
  res.grads.resize(nl);

  // dL/d(output of layer i); skips feed back additively.
  std::vector<Tensor> grad_out(nl);
  grad_out[nl - 1] = task_loss_grad(cache.predictions, targets, net.task);

  for (std::size_t ii = nl; ii-- > 0;) {
    const Layer& l = net.layers[ii];
    Tensor& g = grad_out[ii];
    if (g.empty()) g = Tensor(cache.outputs[ii].shape());
    const Tensor& x = cache.inputs[ii];
    Tensor gx;
    LayerGrads& lg = res.grads[ii];
    switch (l.kind) {
      case LayerKind::Linear: {
        if (l.decomp.has_value()) {
          const auto& d = *l.decomp;
          // y = h2 U^T + b, h2 = h1 diag(S), h1 = x V
          lg.u = matmul(transpose2d(g), cache.lr_h2[ii]);  // (out, r)
          Tensor gh2 = matmul(g, d.u);
          lg.bias = Tensor(l.bias.shape());
          for (int i = 0; i < g.dim(0); ++i)
            for (int o = 0; o < g.dim(1); ++o) lg.bias[o] += g.at(i, o);
          lg.s = Tensor(d.s.shape());
          for (int k = 0; k < d.rank; ++k) {
            double acc = 0.0;
            for (int i = 0; i < gh2.dim(0); ++i)
              acc += gh2.at(i, k) * cache.lr_h1[ii].at(i, k);
            lg.s[k] = acc;
          }
          Tensor gh1 = gh2;
          for (int i = 0; i < gh1.dim(0); ++i)
            for (int k = 0; k < d.rank; ++k) gh1.at(i, k) *= d.s[k];
          lg.v = matmul(transpose2d(x), gh1);  // (n, r)
          gx = matmul_nt(gh1, d.v, Tensor());  // gh1 (n,r) x V^T (r,in)
        } else {
          const Tensor& w = cache.eff_weights[ii];
          lg.weights = matmul(transpose2d(g), x);  // (out, in)
          lg.bias = Tensor(l.bias.shape());
          for (int i = 0; i < g.dim(0); ++i)
            for (int o = 0; o < g.dim(1); ++o) lg.bias[o] += g.at(i, o);
          gx = matmul(g, w);  // (n, in)
        }
        break;
      }
      case LayerKind::Conv2D: {
        Tensor gw;
        conv2d_backward(x, cache.eff_weights[ii], l.stride, l.padding, g, gx, gw,
                        lg.bias);
        if (l.decomp.has_value()) {
          const auto& d = *l.decomp;
          const int m = d.u.dim(0);
          Tensor gw_mat = gw.reshaped({m, static_cast<int>(gw.size() / m)});
          factor_grads_from_dense(d, gw_mat, lg.u, lg.s, lg.v);
        } else {
          lg.weights = std::move(gw);
        }
        break;
      }
      case LayerKind::BatchNorm: {
        const int ch_count = x.dim(1);
        const std::int64_t spatial =
            x.size() / (static_cast<std::int64_t>(x.dim(0)) * ch_count);
        const double m = static_cast<double>(x.dim(0)) * spatial;
        lg.weights = Tensor({ch_count});
        lg.bias = Tensor({ch_count});
        gx = Tensor(x.shape());
        const Tensor& xhat = cache.bn_xhat[ii];
        for (int chn = 0; chn < ch_count; ++chn) {
          double sum_g = 0.0, sum_gx = 0.0;
          for (int im = 0; im < x.dim(0); ++im) {
            for (std::int64_t s = 0; s < spatial; ++s) {
              const std::int64_t idx =
                  (static_cast<std::int64_t>(im) * ch_count + chn) * spatial + s;
              sum_g += g[idx];
              sum_gx += g[idx] * xhat[idx];
            }
          }
          lg.weights[chn] = sum_gx;
          lg.bias[chn] = sum_g;
          const double inv = 1.0 / std::sqrt(cache.bn_var[ii][chn] + l.bn_eps);
          for (int im = 0; im < x.dim(0); ++im) {
            for (std::int64_t s = 0; s < spatial; ++s) {
              const std::int64_t idx =
                  (static_cast<std::int64_t>(im) * ch_count + chn) * spatial + s;
              if (mode == ForwardMode::Train) {
                gx[idx] = l.weights[chn] * inv *
                          (g[idx] - sum_g / m - xhat[idx] * sum_gx / m);
              } else {
                gx[idx] = l.weights[chn] * inv * g[idx];
              }
            }
          }
        }
        break;
      }
      case LayerKind::ReLU: {
        gx = g;
        for (std::int64_t k = 0; k < gx.size(); ++k) {
          if (x[k] <= 0.0) gx[k] = 0.0;
        }
        break;
      }
      case LayerKind::Flatten: {
        gx = g.reshaped(x.shape());
        break;
      }
    }
    // Route skip gradients: d(y_to)/d(input of `from`) is identity.
    for (const SkipConnection& sk : net.skips) {
      if (sk.to == static_cast<int>(ii) && sk.from > 0) {
        Tensor& dst = grad_out[static_cast<std::size_t>(sk.from) - 1];
        if (dst.empty()) dst = Tensor(g.shape());
        for (std::int64_t k = 0; k < g.size(); ++k) dst[k] += g[k];
      }
    }
    if (ii > 0) {
      Tensor& dst = grad_out[ii - 1];
      if (dst.empty()) {
        dst = std::move(gx);
      } else {
        for (std::int64_t k = 0; k < gx.size(); ++k) dst[k] += gx[k];
      }
    }
  }

  // Regularizer contributions (Hoyer / orthogonality over decomposed layers,
  // auxiliary weight penalties) accumulate straight into parameter grads.
  int n_decomposed = 0;
  for (const Layer& l : net.layers) n_decomposed += l.decomp.has_value();
  if (n_decomposed > 0 && (loss_terms.lambda_o > 0.0 || loss_terms.lambda_h > 0.0)) {
    const double co = loss_terms.lambda_o / n_decomposed;
    const double ch = loss_terms.lambda_h / n_decomposed;
    for (std::size_t i = 0; i < nl; ++i) {
      const Layer& l = net.layers[i];
      if (!l.decomp.has_value()) continue;
      if (co > 0.0) {
        orthogonality_loss_grad(l.decomp->u, l.decomp->v, co, res.grads[i].u,
                                res.grads[i].v);
      }
      if (ch > 0.0) {
        hoyer_loss_grad(l.decomp->s, ch, res.grads[i].s);
      }
    }
  }
  if (loss_terms.sparsity_weight > 0.0 || loss_terms.norm_weight > 0.0) {
    for (std::size_t i = 0; i < nl; ++i) {
      const Layer& l = net.layers[i];
      if (!l.prunable() || l.decomp.has_value()) continue;
      Tensor& gw = res.grads[i].weights;
      if (gw.empty()) gw = Tensor(l.weights.shape());
      if (loss_terms.sparsity_weight > 0.0) {
        for (std::int64_t k = 0; k < gw.size(); ++k) {
          const double w = l.weights[k];
          gw[k] += loss_terms.sparsity_weight * (w > 0 ? 1.0 : (w < 0 ? -1.0 : 0.0));
        }
      }
      if (loss_terms.norm_weight > 0.0) {
        const double n1 = l1_norm(l.weights), n2 = l2_norm(l.weights);
        if (n2 > 0.0) {
          for (std::int64_t k = 0; k < gw.size(); ++k) {
            const double w = l.weights[k];
            const double sgn = w > 0 ? 1.0 : (w < 0 ? -1.0 : 0.0);
            gw[k] += loss_terms.norm_weight * (sgn / n2 - n1 * w / (n2 * n2 * n2));
          }
        }
      }
    }
  }

  // Masked positions are constants: their gradient is identically zero.
  for (std::size_t i = 0; i < nl; ++i) {
    const Layer& l = net.layers[i];
    if (l.mask.has_value() && !res.grads[i].weights.empty()) {
      for (std::int64_t k = 0; k < res.grads[i].weights.size(); ++k) {
        res.grads[i].weights[k] *= (*l.mask)[k];
      }
    }
  }

  res.loss = res.task_loss + composite_regularizer_value(net, loss_terms);
  if (!std::isfinite(res.loss)) throw NumericError("non-finite composite loss");
  for (std::size_t i = 0; i < nl; ++i) {
    for (const Tensor* t : {&res.grads[i].weights, &res.grads[i].bias,
                            &res.grads[i].u, &res.grads[i].s, &res.grads[i].v}) {
      if (!t->empty() && !t->all_finite()) {
        throw NumericError("non-finite gradient in layer " +
                           std::to_string(i) + " (" +
                           layer_kind_name(net.layers[i].kind) + ")");
      }
    }
  }
  return res;
}

double loss_value(const Network& net, const Tensor& batch, const Tensor& targets,
                  const CompositeLoss& loss_terms, ForwardMode mode) {
  ForwardCache cache;
  forward(net, batch, mode, &cache);
  return task_loss(cache.predictions, targets, net.task) +
         composite_regularizer_value(net, loss_terms);
}

namespace {

// Flattened (param, grad) pairs in a stable order.
struct ParamView {
  std::vector<Tensor*> params;
  std::vector<Tensor*> grads;
};

ParamView flatten_params(Network& net, std::vector<LayerGrads>& grads) {
  ParamView pv;
  auto push = [&pv](Tensor* p, Tensor* g) {
    if (g->empty()) *g = Tensor(p->shape());
    pv.params.push_back(p);
    pv.grads.push_back(g);
  };
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    Layer& l = net.layers[i];
    if (!l.has_params()) continue;
    LayerGrads& g = grads[i];
    if (l.decomp.has_value()) {
      push(&l.decomp->u, &g.u);
      push(&l.decomp->s, &g.s);
      push(&l.decomp->v, &g.v);
    } else {
      push(&l.weights, &g.weights);
    }
    if (!l.bias.empty()) push(&l.bias, &g.bias);
  }
  return pv;
}

}  // namespace

TrainResult train(Network& net, const Tensor& x_train, const Tensor& y_train,
                  const Tensor& x_val, const Tensor& y_val,
                  const TrainOptions& opts, const EarlyStopHook& hook) {
  if (opts.epochs < 1) throw ConfigError("train: epochs must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult result;

  const int n = x_train.dim(0);
  const int bs = std::min(opts.batch_size, n);

  // Moment buffers, keyed by flat parameter index.
  std::vector<Tensor> m1, m2;
  int adam_t = 0;

  Network best = net;
  double best_score = -std::numeric_limits<double>::infinity();

  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);

  const std::int64_t feat = x_train.size() / n;
  const std::int64_t targ = y_train.size() / n;

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    Rng shuffle_rng(Rng::derive(opts.seed, 0x5u, static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(idx);
    for (int start = 0; start < n; start += bs) {
      const int count = std::min(bs, n - start);
      std::vector<int> bshape = x_train.shape();
      bshape[0] = count;
      Tensor bx(bshape);
      std::vector<int> tshape = y_train.shape();
      tshape[0] = count;
      Tensor by(tshape);
      for (int i = 0; i < count; ++i) {
        const int src = idx[static_cast<std::size_t>(start + i)];
        std::copy_n(x_train.data().begin() + src * feat, feat,
                    bx.data().begin() + i * feat);
        std::copy_n(y_train.data().begin() + src * targ, targ,
                    by.data().begin() + i * targ);
      }

      BackwardResult br = backward(net, bx, by, opts.loss, ForwardMode::Train);

      // Update BatchNorm running statistics from this batch.
      const bool has_bn =
          std::any_of(net.layers.begin(), net.layers.end(), [](const Layer& l) {
            return l.kind == LayerKind::BatchNorm;
          });
      if (has_bn) {
        ForwardCache cache;
        forward(net, bx, ForwardMode::Train, &cache);
        for (std::size_t li = 0; li < net.layers.size(); ++li) {
          Layer& l = net.layers[li];
          if (l.kind != LayerKind::BatchNorm) continue;
          for (std::int64_t c = 0; c < l.running_mean.size(); ++c) {
            l.running_mean[c] = (1.0 - l.bn_momentum) * l.running_mean[c] +
                                l.bn_momentum * cache.bn_mean[li][c];
            l.running_var[c] = (1.0 - l.bn_momentum) * l.running_var[c] +
                               l.bn_momentum * cache.bn_var[li][c];
          }
        }
      }

      ParamView pv = flatten_params(net, br.grads);
      if (m1.size() != pv.params.size()) {
        m1.clear();
        m2.clear();
        for (Tensor* p : pv.params) {
          m1.emplace_back(p->shape());
          m2.emplace_back(p->shape());
        }
        adam_t = 0;
      }
      ++adam_t;
      const OptimizerConfig& oc = opts.optimizer;
      for (std::size_t pi = 0; pi < pv.params.size(); ++pi) {
        Tensor& p = *pv.params[pi];
        const Tensor& g = *pv.grads[pi];
        switch (oc.kind) {
          case OptimizerKind::SGD:
            for (std::int64_t k = 0; k < p.size(); ++k) {
              p[k] -= oc.learning_rate * g[k];
            }
            break;
          case OptimizerKind::SGDMomentum:
            for (std::int64_t k = 0; k < p.size(); ++k) {
              m1[pi][k] = oc.momentum * m1[pi][k] + g[k];
              p[k] -= oc.learning_rate * m1[pi][k];
            }
            break;
          case OptimizerKind::Adam: {
            const double bc1 = 1.0 - std::pow(oc.beta1, adam_t);
            const double bc2 = 1.0 - std::pow(oc.beta2, adam_t);
            for (std::int64_t k = 0; k < p.size(); ++k) {
              m1[pi][k] = oc.beta1 * m1[pi][k] + (1.0 - oc.beta1) * g[k];
              m2[pi][k] = oc.beta2 * m2[pi][k] + (1.0 - oc.beta2) * g[k] * g[k];
              p[k] -= oc.learning_rate * (m1[pi][k] / bc1) /
                      (std::sqrt(m2[pi][k] / bc2) + oc.eps);
            }
            break;
          }
        }
      }
    }

    const double q = evaluate_quality(net, x_val, y_val);
    result.quality_trace.push_back(q);
    if (quality_score(q, net.task) > best_score) {
      best_score = quality_score(q, net.task);
      best = net;
    }
    if (hook && !hook(epoch, q)) {
      result.stopped_early = true;
      break;
    }
  }

  net = std::move(best);
  result.best_quality = evaluate_quality(net, x_val, y_val);
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

double evaluate_quality(const Network& net, const Tensor& x, const Tensor& y) {
  Tensor logits = forward(net, x, ForwardMode::Infer);
  const int n = x.dim(0);
  switch (net.task) {
    case Task::BinaryClassification: {
      std::vector<double> scores(static_cast<std::size_t>(n));
      std::vector<int> labels(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        scores[i] = 1.0 / (1.0 + std::exp(-logits[i]));
        labels[i] = y[i] > 0.5 ? 1 : 0;
      }
      return roc_auc(scores, labels);
    }
    case Task::MulticlassClassification: {
      const int k = logits.dim(1);
      std::vector<int> preds(static_cast<std::size_t>(n));
      std::vector<int> labels(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        int arg = 0;
        for (int j = 1; j < k; ++j) {
          if (logits.at(i, j) > logits.at(i, arg)) arg = j;
        }
        preds[i] = arg;
        labels[i] = static_cast<int>(y[i]);
      }
      return f1_macro(preds, labels);
    }
    case Task::Regression: {
      std::vector<double> preds(logits.data().begin(), logits.data().end());
      std::vector<double> targ(y.data().begin(), y.data().end());
      return rmse(preds, targ);
    }
  }
  return 0.0;
}

double quality_score(double quality, Task task) {
  return task == Task::Regression ? -quality : quality;
}

Network make_mlp(int input_dim, int hidden, Task task, int num_classes,
                 std::uint64_t seed) {
  Network net;
  net.task = task;
  net.num_classes = num_classes;
  const int out = task == Task::MulticlassClassification ? num_classes : 1;
  net.layers.push_back(make_linear(input_dim, hidden, Rng::derive(seed, 1)));
  net.layers.push_back(make_relu());
  net.layers.push_back(make_linear(hidden, out, Rng::derive(seed, 2)));
  return net;
}

Network make_tiny_cnn(int in_ch, int img_h, int img_w, int num_classes,
                      std::uint64_t seed) {
  Network net;
  net.task = Task::MulticlassClassification;
  net.num_classes = num_classes;
  net.layers.push_back(make_conv2d(in_ch, 8, 3, 3, Rng::derive(seed, 1), 1, 1));
  net.layers.push_back(make_batchnorm(8));
  net.layers.push_back(make_relu());
  net.layers.push_back(make_conv2d(8, 8, 3, 3, Rng::derive(seed, 2), 1, 1));
  net.layers.push_back(make_batchnorm(8));
  net.layers.push_back(make_relu());
  // Residual block over the second conv.
  net.skips.push_back({3, 4});
  net.layers.push_back(make_flatten());
  net.layers.push_back(
      make_linear(8 * img_h * img_w, num_classes, Rng::derive(seed, 3)));
  return net;
}

}  // namespace petra
