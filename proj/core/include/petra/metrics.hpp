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

#ifndef PETRA_METRICS_HPP_
#define PETRA_METRICS_HPP_

#include <vector>

namespace petra {

// Probability that a random positive scores above a random negative, ties
// counted half; exact Mann-Whitney rank formulation. Requires both classes.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Unweighted mean of per-class F1; classes absent from both preds and labels
// are skipped.
double f1_macro(const std::vector<int>& preds, const std::vector<int>& labels);

double rmse(const std::vector<double>& preds, const std::vector<double>& targets);

}  // namespace petra

#endif  // PETRA_METRICS_HPP_
