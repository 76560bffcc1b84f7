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

#ifndef PETRA_PRUNING_HPP_
#define PETRA_PRUNING_HPP_

#include <string>
#include <vector>

#include "petra/network.hpp"
#include "petra/tensor.hpp"

namespace petra {

enum class ImportanceKind : std::uint8_t {
  Magnitude = 0,
  Taylor = 1,
  HessianDiag = 2,
  BNScale = 3,
  LAMP = 4,
};

std::string importance_name(ImportanceKind k);
ImportanceKind importance_from_name(const std::string& s);

enum class PruneScope : std::uint8_t { PerLayer = 0, Global = 1 };

struct ImportanceCriterion {
  ImportanceKind kind = ImportanceKind::Magnitude;
  PruneScope scope = PruneScope::PerLayer;
};

struct PruneSpec {
  double ratio = 0.5;  // in [0, 1)
  ImportanceCriterion criterion;
  bool structured = false;  // channel-level when true
};

// Per-weight (or per-channel when structured) non-negative importance.
// Indexed by prunable layer, in network order. Taylor and HessianDiag need
// a calibration batch for gradients; Magnitude, LAMP and BNScale do not.
struct LayerScores {
  int layer_index = 0;
  Tensor scores;  // weight-shaped, or (out_channels) when structured
};

std::vector<LayerScores> importance_scores(const Network& net,
                                           const ImportanceCriterion& criterion,
                                           bool structured,
                                           const Tensor* calib_x = nullptr,
                                           const Tensor* calib_y = nullptr);

struct MaskResult {
  std::vector<LayerScores> masks;  // binary, same indexing as scores
  std::vector<std::string> warnings;
};

// Zeroes exactly floor(ratio*N) lowest-scoring positions; ties broken by
// lower flat index first. PerLayer clamps so at least one weight survives.
MaskResult build_mask(const std::vector<LayerScores>& scores, const PruneSpec& spec);

// Installs masks (structured masks are broadcast over channels) and zeroes
// the masked weights. Size is unchanged; zeros are still stored.
void apply_mask(Network& net, const MaskResult& masks);

// Physically removes all-zero output channels left by structured pruning,
// shrinking downstream input dimensions. Unstructured masks are left alone
// (with a warning): scattered zeros are not removable from dense storage.
std::vector<std::string> compact(Network& net);

// Fraction of prunable weights currently zero.
double sparsity(const Network& net);

void prune(Network& net, const PruneSpec& spec, const Tensor* calib_x = nullptr,
           const Tensor* calib_y = nullptr);

}  // namespace petra

#endif  // PETRA_PRUNING_HPP_
