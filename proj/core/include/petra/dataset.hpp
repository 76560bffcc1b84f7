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

#ifndef PETRA_DATASET_HPP_
#define PETRA_DATASET_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "petra/data.hpp"
#include "petra/network.hpp"
#include "petra/tensor.hpp"

namespace petra {

enum class DatasetFormat : std::uint8_t {
  TabularCsv = 0,     // header row, last column is the target
  ImageBinary = 1,    // magic "PIMG", n, c, h, w, u8 pixels, u8 labels
  TimeseriesCsv = 2,  // header row, t lag columns then the target
};

std::string dataset_format_name(DatasetFormat f);
DatasetFormat dataset_format_from_name(const std::string& s);

struct Dataset {
  Tensor features;  // (n, d) flattened rows
  Tensor targets;   // (n, 1)
  Task task = Task::BinaryClassification;
  int num_classes = 2;
  std::vector<int> input_shape;  // (d) tabular, (c, h, w) images
};

// Raw rows, unnormalized and unsplit. Malformed or non-finite cells raise
// DataError with the offending line number.
Dataset load_dataset(const std::string& path, DatasetFormat format, Task task);

// Seeded-shuffle split (train/val/test fractions fixed at 70/15/15) with
// normalization fit on the train split only: per-column z-score for tabular
// rows, /255 for image pixels.
DataSplit split_dataset(const Dataset& ds, std::uint64_t seed,
                        bool normalize = true);

// Built-in generators so runs need no external files.
Dataset synth_two_gaussian(int n, int dim, std::uint64_t seed);
Dataset synth_image_blobs(int n, std::uint64_t seed);  // 10 classes, 1x16x16
Dataset synth_timeseries(int n, int window, std::uint64_t seed);

void save_image_binary(const std::string& path, const Dataset& ds);

}  // namespace petra

#endif  // PETRA_DATASET_HPP_
