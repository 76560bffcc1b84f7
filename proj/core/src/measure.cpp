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

#include "petra/measure.hpp"

#include <algorithm>
#include <chrono>
#include <mutex>
#include <vector>

#include "petra/nn.hpp"

namespace petra {

namespace {
std::mutex g_timing_mutex;
}

MeasurementToken::MeasurementToken() { g_timing_mutex.lock(); }
MeasurementToken::~MeasurementToken() { g_timing_mutex.unlock(); }

std::string device_profile_name(DeviceProfile d) {
  return d == DeviceProfile::CPU ? "cpu" : "gpu";
}

bool device_available(const Network& net, DeviceProfile profile) {
  // int8 storage is CPU-only in this simulation; fp16/fp32 run on both.
  if (profile == DeviceProfile::GPU && is_int8(net)) return false;
  return true;
}

namespace {

Tensor tile_batch(const Tensor& proto_item, int batch) {
  std::vector<int> shape = proto_item.shape();
  const std::int64_t span = proto_item.size() / shape[0];
  shape[0] = batch;
  Tensor t(shape);
  for (int i = 0; i < batch; ++i) {
    std::copy_n(proto_item.data().begin(), span, t.data().begin() + i * span);
  }
  return t;
}

}  // namespace

std::optional<double> measure_latency_ms(const Network& net, const Tensor& proto_item,
                                         DeviceProfile profile,
                                         const TimingOptions& opts) {
  if (!device_available(net, profile)) return std::nullopt;
  MeasurementToken token;
  Tensor item = tile_batch(proto_item, 1);
  for (int i = 0; i < opts.warmup; ++i) forward(net, item);
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(opts.repeats));
  for (int i = 0; i < opts.repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    forward(net, item);
    const auto t1 = std::chrono::steady_clock::now();
    samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(samples.begin(), samples.end());
  const std::size_t mid = samples.size() / 2;
  return samples.size() % 2 ? samples[mid]
                            : 0.5 * (samples[mid - 1] + samples[mid]);
}

std::optional<double> measure_throughput_ips(const Network& net,
                                             const Tensor& proto_item,
                                             DeviceProfile profile,
                                             const TimingOptions& opts) {
  if (!device_available(net, profile)) return std::nullopt;
  MeasurementToken token;
  // The gpu profile runs wider batches, standing in for batch parallelism.
  const int batch = profile == DeviceProfile::GPU ? opts.batch * 4 : opts.batch;
  Tensor b = tile_batch(proto_item, batch);
  forward(net, b);  // warmup
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < opts.batches; ++i) forward(net, b);
  const auto t1 = std::chrono::steady_clock::now();
  const double secs = std::chrono::duration<double>(t1 - t0).count();
  if (secs <= 0.0) return std::nullopt;
  return static_cast<double>(batch) * opts.batches / secs;
}

}  // namespace petra
