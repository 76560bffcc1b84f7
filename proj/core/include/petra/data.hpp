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

#ifndef PETRA_DATA_HPP_
#define PETRA_DATA_HPP_

#include "petra/tensor.hpp"

namespace petra {

// Feature rows are flattened; y is (n, 1) with labels or regression targets.
struct DataSplit {
  Tensor x_train, y_train;
  Tensor x_val, y_val;
  Tensor x_test, y_test;
};

}  // namespace petra

#endif  // PETRA_DATA_HPP_
