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

#ifndef PETRA_CHECKPOINT_HPP_
#define PETRA_CHECKPOINT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "petra/network.hpp"

namespace petra {

// Binary model container.
//
// Layout (all integers little-endian):
//   magic "PTRA", version u32
//   network header: task u8, num_classes u32, skip count u32 + (from,to) pairs
//   layer count u32, then per layer:
//     kind u8, precision u8, flags u8 (1=mask, 2=quant, 4=decomp),
//     stride i32, padding i32, shape table, payloads.
//   Parameter payloads are written at the layer's storage precision
//   (fp32 floats, fp16 half words, or int8 values + fp32 scale).
//   Masks are bit-packed; BatchNorm running stats are fp32.
//
// Writing then reading then writing again produces identical bytes, provided
// the network was precision-snapped (stage boundaries always are).
std::vector<std::uint8_t> serialize_network(const Network& net);
Network deserialize_network(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Network& net, const std::string& path);
Network load_checkpoint(const std::string& path);

}  // namespace petra

#endif  // PETRA_CHECKPOINT_HPP_
