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

#ifndef PETRA_PARETO_HPP_
#define PETRA_PARETO_HPP_

#include <cstdint>
#include <vector>

namespace petra {

// All objective vectors are maximization-aligned.

// a dominates b: a >= b componentwise and a > b somewhere.
bool dominates(const std::vector<double>& a, const std::vector<double>& b);

// Indices of the non-dominated points. Duplicates of a kept point are
// dropped so the front contains each objective vector once.
std::vector<std::size_t> non_dominated(const std::vector<std::vector<double>>& points);

// Hypervolume dominated by `points` relative to `reference` (componentwise
// <= every point that should count). Exact sweep up to 4 objectives; Monte
// Carlo beyond that.
double hypervolume(const std::vector<std::vector<double>>& points,
                   const std::vector<double>& reference);

// Monte Carlo estimate, any dimension; exposed for cross-checking.
double hypervolume_monte_carlo(const std::vector<std::vector<double>>& points,
                               const std::vector<double>& reference,
                               std::int64_t samples, std::uint64_t seed);

// Per-point exclusive contribution: hv(all) - hv(all minus the point).
std::vector<double> hypervolume_contributions(
    const std::vector<std::vector<double>>& points,
    const std::vector<double>& reference);

}  // namespace petra

#endif  // PETRA_PARETO_HPP_
