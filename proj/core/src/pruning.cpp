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

#include "petra/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "petra/nn.hpp"

namespace petra {

std::string importance_name(ImportanceKind k) {
  switch (k) {
    case ImportanceKind::Magnitude: return "magnitude";
    case ImportanceKind::Taylor: return "taylor";
    case ImportanceKind::HessianDiag: return "hessian";
    case ImportanceKind::BNScale: return "bnscale";
    case ImportanceKind::LAMP: return "lamp";
  }
  return "?";
}

ImportanceKind importance_from_name(const std::string& s) {
  if (s == "magnitude") return ImportanceKind::Magnitude;
  if (s == "taylor") return ImportanceKind::Taylor;
  if (s == "hessian") return ImportanceKind::HessianDiag;
  if (s == "bnscale") return ImportanceKind::BNScale;
  if (s == "lamp") return ImportanceKind::LAMP;
  throw ConfigError("unknown importance criterion: " + s);
}

namespace {

bool layer_prunable(const Layer& l) {
  return l.prunable() && !l.decomp.has_value();
}

int out_channels(const Layer& l) { return l.weights.dim(0); }

std::int64_t channel_span(const Layer& l) {
  return l.weights.size() / out_channels(l);
}

// LAMP (layer-adaptive magnitude pruning): with weights sorted ascending by
// w^2, score(i) = w_i^2 / sum_{j >= i} w_j^2. The largest weight always
// scores exactly 1.
Tensor lamp_scores(const Tensor& sq) {
  const std::int64_t n = sq.size();
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
    if (sq[a] != sq[b]) return sq[a] < sq[b];
    return a < b;
  });
  Tensor out(sq.shape());
  double suffix = 0.0;
  for (std::int64_t i = 0; i < n; ++i) suffix += sq[i];
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t idx = order[static_cast<std::size_t>(i)];
    out[idx] = suffix > 0.0 ? sq[idx] / suffix : 0.0;
    suffix -= sq[idx];
  }
  return out;
}

// Index of the BatchNorm layer directly normalizing layer li's output.
int following_batchnorm(const Network& net, int li) {
  for (std::size_t j = static_cast<std::size_t>(li) + 1; j < net.layers.size(); ++j) {
    const Layer& l = net.layers[j];
    if (l.kind == LayerKind::BatchNorm) return static_cast<int>(j);
    if (l.has_params()) break;  // another weighted layer intervenes
  }
  return -1;
}

}  // namespace

std::vector<LayerScores> importance_scores(const Network& net,
                                           const ImportanceCriterion& criterion,
                                           bool structured, const Tensor* calib_x,
                                           const Tensor* calib_y) {
  const bool needs_grads = criterion.kind == ImportanceKind::Taylor ||
                           criterion.kind == ImportanceKind::HessianDiag;
  if (needs_grads && (calib_x == nullptr || calib_y == nullptr)) {
    throw ConfigError(importance_name(criterion.kind) +
                      " importance requires a calibration batch");
  }
  if (criterion.kind == ImportanceKind::BNScale) {
    const bool has_bn = std::any_of(
        net.layers.begin(), net.layers.end(),
        [](const Layer& l) { return l.kind == LayerKind::BatchNorm; });
    if (!has_bn) throw ConfigError("bnscale importance on a BatchNorm-free network");
  }

  std::vector<LayerGrads> grads;
  if (needs_grads) {
    BackwardResult br = backward(net, *calib_x, *calib_y, CompositeLoss{});
    grads = std::move(br.grads);
  }

  std::vector<LayerScores> result;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const Layer& l = net.layers[i];
    if (!layer_prunable(l)) continue;

    // Per-weight base scores.
    Tensor base(l.weights.shape());
    switch (criterion.kind) {
      case ImportanceKind::Magnitude:
        for (std::int64_t k = 0; k < base.size(); ++k)
          base[k] = std::abs(l.weights[k]);
        break;
      case ImportanceKind::Taylor:
        for (std::int64_t k = 0; k < base.size(); ++k)
          base[k] = std::abs(l.weights[k] * grads[i].weights[k]);
        break;
      case ImportanceKind::HessianDiag:
        // OBD-style 0.5 w^2 h with the Fisher (squared gradient) diagonal.
        for (std::int64_t k = 0; k < base.size(); ++k) {
          const double g = grads[i].weights[k];
          base[k] = 0.5 * l.weights[k] * l.weights[k] * g * g;
        }
        break;
      case ImportanceKind::BNScale: {
        const int bn = following_batchnorm(net, static_cast<int>(i));
        if (bn < 0) {
          // No normalizer to read a scale from (e.g. the task head); fall
          // back to weight magnitude for this layer.
          for (std::int64_t k = 0; k < base.size(); ++k)
            base[k] = std::abs(l.weights[k]);
          break;
        }
        const Layer& bl = net.layers[static_cast<std::size_t>(bn)];
        const std::int64_t span = channel_span(l);
        for (int c = 0; c < out_channels(l); ++c) {
          const double s = std::abs(bl.weights[c]);
          for (std::int64_t k = 0; k < span; ++k) base[c * span + k] = s;
        }
        break;
      }
      case ImportanceKind::LAMP: {
        Tensor sq(l.weights.shape());
        for (std::int64_t k = 0; k < sq.size(); ++k)
          sq[k] = l.weights[k] * l.weights[k];
        base = lamp_scores(sq);
        break;
      }
    }

    LayerScores ls;
    ls.layer_index = static_cast<int>(i);
    if (!structured) {
      ls.scores = std::move(base);
    } else {
      const int oc = out_channels(l);
      const std::int64_t span = channel_span(l);
      if (criterion.kind == ImportanceKind::LAMP) {
        Tensor ch_sq({oc});
        for (int c = 0; c < oc; ++c) {
          double acc = 0.0;
          for (std::int64_t k = 0; k < span; ++k) {
            const double w = l.weights[c * span + k];
            acc += w * w;
          }
          ch_sq[c] = acc;
        }
        ls.scores = lamp_scores(ch_sq);
      } else {
        Tensor ch({oc});
        for (int c = 0; c < oc; ++c) {
          double acc = 0.0;
          for (std::int64_t k = 0; k < span; ++k) acc += base[c * span + k];
          // BNScale is already constant per channel; keep the raw value.
          ch[c] = criterion.kind == ImportanceKind::BNScale ? base[c * span] : acc;
        }
        ls.scores = std::move(ch);
      }
    }
    result.push_back(std::move(ls));
  }
  return result;
}

MaskResult build_mask(const std::vector<LayerScores>& scores, const PruneSpec& spec) {
  if (spec.ratio < 0.0 || spec.ratio >= 1.0) {
    throw ConfigError("prune ratio must be in [0, 1)");
  }
  for (const auto& ls : scores) ls.scores.check_finite("importance scores");

  MaskResult result;
  result.masks.reserve(scores.size());
  for (const auto& ls : scores) {
    LayerScores m;
    m.layer_index = ls.layer_index;
    m.scores = Tensor::full(ls.scores.shape(), 1.0);
    result.masks.push_back(std::move(m));
  }

  auto prune_positions =
      [](const std::vector<std::pair<double, std::int64_t>>& entries,
         std::int64_t k, std::vector<std::int64_t>& out) {
        std::vector<std::size_t> order(entries.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
          if (entries[a].first != entries[b].first)
            return entries[a].first < entries[b].first;
          return entries[a].second < entries[b].second;
        });
        for (std::int64_t i = 0; i < k; ++i) out.push_back(order[i]);
      };

  if (spec.criterion.scope == PruneScope::PerLayer) {
    for (std::size_t li = 0; li < scores.size(); ++li) {
      const Tensor& s = scores[li].scores;
      const std::int64_t n = s.size();
      std::int64_t k = static_cast<std::int64_t>(std::floor(spec.ratio * n));
      if (k >= n) {
        k = n - 1;
        result.warnings.push_back("layer " + std::to_string(scores[li].layer_index) +
                                  ": ratio clamped to keep one weight");
      }
      std::vector<std::pair<double, std::int64_t>> entries;
      entries.reserve(static_cast<std::size_t>(n));
      for (std::int64_t i = 0; i < n; ++i) entries.push_back({s[i], i});
      std::vector<std::int64_t> kill;
      prune_positions(entries, k, kill);
      for (std::int64_t pos : kill) result.masks[li].scores[pos] = 0.0;
    }
  } else {
    std::int64_t total = 0;
    std::vector<std::pair<double, std::int64_t>> entries;
    std::vector<std::pair<std::size_t, std::int64_t>> where;  // (layer, local idx)
    for (std::size_t li = 0; li < scores.size(); ++li) {
      const Tensor& s = scores[li].scores;
      for (std::int64_t i = 0; i < s.size(); ++i) {
        entries.push_back({s[i], total});
        where.push_back({li, i});
        ++total;
      }
    }
    const std::int64_t k = static_cast<std::int64_t>(std::floor(spec.ratio * total));
    std::vector<std::int64_t> kill;
    prune_positions(entries, k, kill);
    for (std::int64_t pos : kill) {
      const auto [li, local] = where[static_cast<std::size_t>(pos)];
      result.masks[li].scores[local] = 0.0;
    }
  }
  return result;
}

void apply_mask(Network& net, const MaskResult& masks) {
  for (const auto& m : masks.masks) {
    Layer& l = net.layers[static_cast<std::size_t>(m.layer_index)];
    Tensor full(l.weights.shape());
    if (m.scores.size() == l.weights.size()) {
      full = m.scores;
    } else if (m.scores.size() == out_channels(l)) {
      const std::int64_t span = channel_span(l);
      for (int c = 0; c < out_channels(l); ++c) {
        for (std::int64_t k = 0; k < span; ++k) full[c * span + k] = m.scores[c];
      }
    } else {
      throw ShapeError("apply_mask: mask shape matches neither weights nor channels");
    }
    if (l.mask.has_value()) {
      for (std::int64_t k = 0; k < full.size(); ++k) full[k] *= (*l.mask)[k];
    }
    for (std::int64_t k = 0; k < full.size(); ++k) l.weights[k] *= full[k];
    l.mask = std::move(full);
  }
}

namespace {

bool channel_constant_mask(const Layer& l, std::vector<bool>& keep) {
  if (!l.mask.has_value()) return false;
  const int oc = out_channels(l);
  const std::int64_t span = channel_span(l);
  keep.assign(static_cast<std::size_t>(oc), true);
  for (int c = 0; c < oc; ++c) {
    const double first = (*l.mask)[c * span];
    for (std::int64_t k = 1; k < span; ++k) {
      if ((*l.mask)[c * span + k] != first) return false;
    }
    keep[static_cast<std::size_t>(c)] = first != 0.0;
  }
  return true;
}

Tensor select_rows(const Tensor& t, const std::vector<bool>& keep) {
  const int oc = t.dim(0);
  const std::int64_t span = t.size() / oc;
  int kept = 0;
  for (bool b : keep) kept += b;
  std::vector<int> shape = t.shape();
  shape[0] = kept;
  Tensor out(shape);
  int row = 0;
  for (int c = 0; c < oc; ++c) {
    if (!keep[static_cast<std::size_t>(c)]) continue;
    std::copy_n(t.data().begin() + c * span, span, out.data().begin() + row * span);
    ++row;
  }
  return out;
}

// Remove input channels/columns of a downstream consumer layer.
void shrink_inputs(Layer& l, const std::vector<bool>& keep) {
  int kept = 0;
  for (bool b : keep) kept += b;
  auto shrink = [&](const Tensor& t) {
    if (l.kind == LayerKind::Linear) {
      const int out = t.dim(0), in = t.dim(1);
      Tensor w({out, kept});
      for (int o = 0; o < out; ++o) {
        int col = 0;
        for (int i = 0; i < in; ++i) {
          if (keep[static_cast<std::size_t>(i)]) w.at(o, col++) = t.at(o, i);
        }
      }
      return w;
    }
    const int oc = t.dim(0), ic = t.dim(1), kh = t.dim(2), kw = t.dim(3);
    Tensor w({oc, kept, kh, kw});
    for (int o = 0; o < oc; ++o) {
      int cc = 0;
      for (int c = 0; c < ic; ++c) {
        if (!keep[static_cast<std::size_t>(c)]) continue;
        for (int u = 0; u < kh; ++u) {
          for (int v = 0; v < kw; ++v) {
            w[((static_cast<std::size_t>(o) * kept + cc) * kh + u) * kw + v] =
                t[((static_cast<std::size_t>(o) * ic + c) * kh + u) * kw + v];
          }
        }
        ++cc;
      }
    }
    return w;
  };
  Tensor neww = shrink(l.weights);
  if (l.mask.has_value()) l.mask = shrink(*l.mask);
  l.weights = std::move(neww);
}

}  // namespace

std::vector<std::string> compact(Network& net) {
  std::vector<std::string> warnings;
  if (!net.skips.empty()) {
    warnings.push_back("compact skipped: residual skips present");
    return warnings;
  }
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    Layer& l = net.layers[i];
    if (!layer_prunable(l) || !l.mask.has_value()) continue;

    std::vector<bool> keep;
    if (!channel_constant_mask(l, keep)) {
      warnings.push_back("layer " + std::to_string(i) +
                         ": unstructured mask, zeros not removable");
      continue;
    }
    const bool any_removed = std::any_of(keep.begin(), keep.end(),
                                         [](bool b) { return !b; });
    if (!any_removed) continue;

    // Find the downstream consumer; give up across Flatten (column mapping
    // depends on spatial extent) and never shrink the task head.
    int consumer = -1;
    bool blocked = false;
    for (std::size_t j = i + 1; j < net.layers.size(); ++j) {
      const Layer& nx = net.layers[j];
      if (nx.kind == LayerKind::Flatten) {
        blocked = true;
        break;
      }
      if (nx.prunable()) {
        consumer = static_cast<int>(j);
        break;
      }
    }
    if (blocked) {
      warnings.push_back("layer " + std::to_string(i) +
                         ": compact blocked by Flatten boundary");
      continue;
    }
    if (consumer < 0) {
      warnings.push_back("layer " + std::to_string(i) +
                         ": output head, not compacted");
      continue;
    }
    if (net.layers[static_cast<std::size_t>(consumer)].decomp.has_value()) {
      warnings.push_back("layer " + std::to_string(i) +
                         ": consumer is decomposed, not compacted");
      continue;
    }

    l.weights = select_rows(l.weights, keep);
    l.bias = select_rows(l.bias, keep);
    l.mask.reset();
    // Channel-wise layers between producer and consumer shrink with it.
    for (std::size_t j = i + 1; j < static_cast<std::size_t>(consumer); ++j) {
      Layer& mid = net.layers[j];
      if (mid.kind == LayerKind::BatchNorm) {
        mid.weights = select_rows(mid.weights, keep);
        mid.bias = select_rows(mid.bias, keep);
        mid.running_mean = select_rows(mid.running_mean, keep);
        mid.running_var = select_rows(mid.running_var, keep);
      }
    }
    shrink_inputs(net.layers[static_cast<std::size_t>(consumer)], keep);
  }
  return warnings;
}

double sparsity(const Network& net) {
  std::int64_t zeros = 0, total = 0;
  for (const Layer& l : net.layers) {
    if (!layer_prunable(l)) continue;
    for (std::int64_t k = 0; k < l.weights.size(); ++k) {
      zeros += l.weights[k] == 0.0;
    }
    total += l.weights.size();
  }
  return total > 0 ? static_cast<double>(zeros) / static_cast<double>(total) : 0.0;
}

void prune(Network& net, const PruneSpec& spec, const Tensor* calib_x,
           const Tensor* calib_y) {
  auto scores = importance_scores(net, spec.criterion, spec.structured, calib_x,
                                  calib_y);
  MaskResult mr = build_mask(scores, spec);
  apply_mask(net, mr);
  if (spec.structured) compact(net);
}

}  // namespace petra
