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

#ifndef PETRA_MEASURE_HPP_
#define PETRA_MEASURE_HPP_

#include <optional>
#include <string>

#include "petra/network.hpp"
#include "petra/tensor.hpp"

namespace petra {

// Named measurement profiles. Both run on the host CPU at desk scale; the
// "gpu" profile is a separately tagged batch-parallel path, kept so that
// device-availability semantics (int8 = cpu-only) are exercised end to end.
enum class DeviceProfile : std::uint8_t { CPU = 0, GPU = 1 };

std::string device_profile_name(DeviceProfile d);

bool device_available(const Network& net, DeviceProfile profile);

struct TimingOptions {
  int warmup = 5;
  int repeats = 30;     // latency: median over repeats
  int batch = 64;       // throughput batch size
  int batches = 10;     // throughput: wall-time over this many batched calls
};

// Median single-item forward time in ms; nullopt when the profile is
// unavailable for the network (the report renders that as an infinity sign).
std::optional<double> measure_latency_ms(const Network& net, const Tensor& proto_item,
                                         DeviceProfile profile,
                                         const TimingOptions& opts = {});

// Items per second over batched forwards.
std::optional<double> measure_throughput_ips(const Network& net,
                                             const Tensor& proto_item,
                                             DeviceProfile profile,
                                             const TimingOptions& opts = {});

// All timing runs in the process are serialized through this token so that
// concurrent evaluation workers never time against each other.
class MeasurementToken {
 public:
  MeasurementToken();
  ~MeasurementToken();
  MeasurementToken(const MeasurementToken&) = delete;
  MeasurementToken& operator=(const MeasurementToken&) = delete;
};

}  // namespace petra

#endif  // PETRA_MEASURE_HPP_
