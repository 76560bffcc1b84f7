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

#include "petra/pareto.hpp"

#include <algorithm>
#include <numeric>

#include "petra/errors.hpp"
#include "petra/rng.hpp"

namespace petra {

bool dominates(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw ShapeError("objective vectors differ in length");
  bool strictly = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return false;
    if (a[i] > b[i]) strictly = true;
  }
  return strictly;
}

std::vector<std::size_t> non_dominated(
    const std::vector<std::vector<double>>& points) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool out = false;
    for (std::size_t j = 0; j < points.size() && !out; ++j) {
      if (j == i) continue;
      if (dominates(points[j], points[i])) out = true;
    }
    if (out) continue;
    bool duplicate = false;
    for (std::size_t k : keep) {
      if (points[k] == points[i]) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) keep.push_back(i);
  }
  return keep;
}

namespace {

// Union-of-boxes volume by sweeping the last dimension (HSO). `pts` are
// already clipped to be >= ref componentwise.
double hv_recursive(std::vector<std::vector<double>> pts,
                    const std::vector<double>& ref, std::size_t d) {
  if (pts.empty()) return 0.0;
  if (d == 1) {
    double best = 0.0;
    for (const auto& p : pts) best = std::max(best, p[0] - ref[0]);
    return best;
  }
  std::sort(pts.begin(), pts.end(),
            [d](const std::vector<double>& a, const std::vector<double>& b) {
              return a[d - 1] > b[d - 1];
            });
  double hv = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double lower = (i + 1 < pts.size()) ? pts[i + 1][d - 1] : ref[d - 1];
    const double height = pts[i][d - 1] - lower;
    if (height <= 0.0) continue;
    std::vector<std::vector<double>> slab(pts.begin(),
                                          pts.begin() + static_cast<long>(i) + 1);
    hv += height * hv_recursive(std::move(slab), ref, d - 1);
  }
  return hv;
}

std::vector<std::vector<double>> clip_to_reference(
    const std::vector<std::vector<double>>& points,
    const std::vector<double>& reference) {
  std::vector<std::vector<double>> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    if (p.size() != reference.size())
      throw ShapeError("point and reference differ in length");
    // A point at or below the reference in some axis spans zero width there
    // and adds no volume; drop it.
    std::vector<double> q(p.size());
    bool any_volume = true;
    for (std::size_t i = 0; i < p.size(); ++i) {
      q[i] = std::max(p[i], reference[i]);
      if (q[i] - reference[i] <= 0.0) any_volume = false;
    }
    if (any_volume) out.push_back(std::move(q));
  }
  return out;
}

}  // namespace

double hypervolume(const std::vector<std::vector<double>>& points,
                   const std::vector<double>& reference) {
  auto pts = clip_to_reference(points, reference);
  if (pts.empty()) return 0.0;
  const std::size_t d = reference.size();
  if (d <= 4) return hv_recursive(std::move(pts), reference, d);
  return hypervolume_monte_carlo(points, reference, 200000, 0x9e3779b9ULL);
}

double hypervolume_monte_carlo(const std::vector<std::vector<double>>& points,
                               const std::vector<double>& reference,
                               std::int64_t samples, std::uint64_t seed) {
  auto pts = clip_to_reference(points, reference);
  if (pts.empty()) return 0.0;
  const std::size_t d = reference.size();
  std::vector<double> hi(d);
  for (std::size_t i = 0; i < d; ++i) {
    hi[i] = reference[i];
    for (const auto& p : pts) hi[i] = std::max(hi[i], p[i]);
  }
  double box = 1.0;
  for (std::size_t i = 0; i < d; ++i) box *= hi[i] - reference[i];
  if (box <= 0.0) return 0.0;

  Rng rng(seed);
  std::int64_t inside = 0;
  std::vector<double> x(d);
  for (std::int64_t s = 0; s < samples; ++s) {
    for (std::size_t i = 0; i < d; ++i) x[i] = rng.uniform(reference[i], hi[i]);
    for (const auto& p : pts) {
      bool dom = true;
      for (std::size_t i = 0; i < d; ++i) {
        if (p[i] < x[i]) {
          dom = false;
          break;
        }
      }
      if (dom) {
        ++inside;
        break;
      }
    }
  }
  return box * static_cast<double>(inside) / static_cast<double>(samples);
}

std::vector<double> hypervolume_contributions(
    const std::vector<std::vector<double>>& points,
    const std::vector<double>& reference) {
  const double total = hypervolume(points, reference);
  std::vector<double> out(points.size(), 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::vector<std::vector<double>> rest;
    rest.reserve(points.size() - 1);
    for (std::size_t j = 0; j < points.size(); ++j)
      if (j != i) rest.push_back(points[j]);
    out[i] = total - hypervolume(rest, reference);
  }
  return out;
}

}  // namespace petra
