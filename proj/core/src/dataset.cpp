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

#include "petra/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "petra/errors.hpp"
#include "petra/rng.hpp"

namespace petra {

std::string dataset_format_name(DatasetFormat f) {
  switch (f) {
    case DatasetFormat::TabularCsv: return "tabular_csv";
    case DatasetFormat::ImageBinary: return "image_binary";
    case DatasetFormat::TimeseriesCsv: return "timeseries_csv";
  }
  return "?";
}

DatasetFormat dataset_format_from_name(const std::string& s) {
  if (s == "tabular_csv") return DatasetFormat::TabularCsv;
  if (s == "image_binary") return DatasetFormat::ImageBinary;
  if (s == "timeseries_csv") return DatasetFormat::TimeseriesCsv;
  throw ConfigError("unknown dataset format " + s);
}

namespace {

constexpr char kImageMagic[4] = {'P', 'I', 'M', 'G'};

std::vector<double> parse_csv_line(const std::string& line, int line_no) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(cell, &used);
      while (used < cell.size() &&
             (cell[used] == ' ' || cell[used] == '\r' || cell[used] == '\t'))
        ++used;
      if (used != cell.size())
        throw DataError("line " + std::to_string(line_no) +
                        ": trailing characters in cell '" + cell + "'");
      if (!std::isfinite(v))
        throw DataError("line " + std::to_string(line_no) +
                        ": non-finite cell '" + cell + "'");
      out.push_back(v);
    } catch (const DataError&) {
      throw;
    } catch (const std::exception&) {
      throw DataError("line " + std::to_string(line_no) + ": cannot parse cell '" +
                      cell + "'");
    }
  }
  return out;
}

Dataset load_csv(const std::string& path, Task task) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw DataError(path + ": missing header row");

  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<double> row = parse_csv_line(line, line_no);
    if (row.size() < 2)
      throw DataError("line " + std::to_string(line_no) +
                      ": need at least one feature and a target");
    if (!rows.empty() && row.size() != rows.front().size())
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(rows.front().size()) + " columns, got " +
                      std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path + ": no data rows");

  const int n = static_cast<int>(rows.size());
  const int d = static_cast<int>(rows.front().size()) - 1;
  Dataset ds;
  ds.task = task;
  ds.features = Tensor({n, d});
  ds.targets = Tensor({n, 1});
  ds.input_shape = {d};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) ds.features.at(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    ds.targets.at(i, 0) = rows[static_cast<std::size_t>(i)].back();
  }
  if (task == Task::MulticlassClassification) {
    int max_label = 0;
    for (std::int64_t i = 0; i < ds.targets.size(); ++i)
      max_label = std::max(max_label, static_cast<int>(ds.targets[i]));
    ds.num_classes = max_label + 1;
  }
  return ds;
}

template <typename T>
void read_pod(std::ifstream& in, T& out, const std::string& path) {
  in.read(reinterpret_cast<char*>(&out), sizeof(T));
  if (!in) throw DataError(path + ": truncated file");
}

Dataset load_image_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kImageMagic, 4) != 0)
    throw DataError(path + ": bad magic, not an image dataset");
  std::uint32_t n = 0, c = 0, h = 0, w = 0;
  read_pod(in, n, path);
  read_pod(in, c, path);
  read_pod(in, h, path);
  read_pod(in, w, path);
  if (n == 0 || c == 0 || h == 0 || w == 0)
    throw DataError(path + ": zero dimension in header");

  const std::int64_t per_image = static_cast<std::int64_t>(c) * h * w;
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(per_image) * n);
  in.read(reinterpret_cast<char*>(pixels.data()),
          static_cast<std::streamsize>(pixels.size()));
  if (!in) throw DataError(path + ": truncated pixel payload");
  std::vector<std::uint8_t> labels(n);
  in.read(reinterpret_cast<char*>(labels.data()), n);
  if (!in) throw DataError(path + ": truncated label payload");

  Dataset ds;
  ds.task = Task::MulticlassClassification;
  ds.input_shape = {static_cast<int>(c), static_cast<int>(h), static_cast<int>(w)};
  ds.features = Tensor({static_cast<int>(n), static_cast<int>(per_image)});
  ds.targets = Tensor({static_cast<int>(n), 1});
  int max_label = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < per_image; ++j)
      ds.features[i * per_image + j] =
          static_cast<double>(pixels[static_cast<std::size_t>(i * per_image + j)]);
    ds.targets[i] = static_cast<double>(labels[i]);
    max_label = std::max(max_label, static_cast<int>(labels[i]));
  }
  ds.num_classes = max_label + 1;
  return ds;
}

}  // namespace

Dataset load_dataset(const std::string& path, DatasetFormat format, Task task) {
  switch (format) {
    case DatasetFormat::TabularCsv:
      return load_csv(path, task);
    case DatasetFormat::TimeseriesCsv:
      return load_csv(path, Task::Regression);
    case DatasetFormat::ImageBinary:
      return load_image_binary(path);
  }
  throw ConfigError("unknown dataset format");
}

DataSplit split_dataset(const Dataset& ds, std::uint64_t seed, bool normalize) {
  const int n = ds.features.dim(0);
  if (n < 3) throw DataError("dataset too small to split");
  const int d = ds.features.dim(1);

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(Rng::derive(seed, 0x5917u, 0xdau));
  rng.shuffle(order);

  const int n_train = static_cast<int>(0.70 * n);
  const int n_val = static_cast<int>(0.15 * n);
  const int n_test = n - n_train - n_val;
  if (n_train == 0 || n_val == 0 || n_test == 0)
    throw DataError("dataset too small to split");

  auto take = [&](int begin, int count, Tensor& x, Tensor& y) {
    x = Tensor({count, d});
    y = Tensor({count, 1});
    for (int i = 0; i < count; ++i) {
      const int src = order[static_cast<std::size_t>(begin + i)];
      for (int j = 0; j < d; ++j) x.at(i, j) = ds.features.at(src, j);
      y.at(i, 0) = ds.targets.at(src, 0);
    }
  };

  DataSplit split;
  take(0, n_train, split.x_train, split.y_train);
  take(n_train, n_val, split.x_val, split.y_val);
  take(n_train + n_val, n_test, split.x_test, split.y_test);

  if (!normalize) return split;

  if (ds.input_shape.size() == 3) {
    for (Tensor* x : {&split.x_train, &split.x_val, &split.x_test})
      for (std::int64_t i = 0; i < x->size(); ++i) (*x)[i] /= 255.0;
    return split;
  }

  // z-score with train-split statistics
  std::vector<double> mean(static_cast<std::size_t>(d), 0.0);
  std::vector<double> var(static_cast<std::size_t>(d), 0.0);
  for (int i = 0; i < n_train; ++i)
    for (int j = 0; j < d; ++j) mean[static_cast<std::size_t>(j)] += split.x_train.at(i, j);
  for (int j = 0; j < d; ++j) mean[static_cast<std::size_t>(j)] /= n_train;
  for (int i = 0; i < n_train; ++i) {
    for (int j = 0; j < d; ++j) {
      const double dv = split.x_train.at(i, j) - mean[static_cast<std::size_t>(j)];
      var[static_cast<std::size_t>(j)] += dv * dv;
    }
  }
  for (int j = 0; j < d; ++j) var[static_cast<std::size_t>(j)] /= n_train;
  for (Tensor* x : {&split.x_train, &split.x_val, &split.x_test}) {
    for (int i = 0; i < x->dim(0); ++i) {
      for (int j = 0; j < d; ++j) {
        const double sd = std::sqrt(var[static_cast<std::size_t>(j)]);
        x->at(i, j) = (x->at(i, j) - mean[static_cast<std::size_t>(j)]) /
                      (sd > 0.0 ? sd : 1.0);
      }
    }
  }
  return split;
}

Dataset synth_two_gaussian(int n, int dim, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  ds.task = Task::BinaryClassification;
  ds.num_classes = 2;
  ds.input_shape = {dim};
  ds.features = Tensor({n, dim});
  ds.targets = Tensor({n, 1});
  for (int i = 0; i < n; ++i) {
    const int label = (rng.uniform() < 0.5) ? 0 : 1;
    const double center = (label == 0) ? -1.0 : 1.0;
    for (int j = 0; j < dim; ++j)
      ds.features.at(i, j) = center + 1.2 * rng.normal();
    ds.targets.at(i, 0) = label;
  }
  return ds;
}

Dataset synth_image_blobs(int n, std::uint64_t seed) {
  constexpr int kSide = 16;
  Rng rng(seed);
  Dataset ds;
  ds.task = Task::MulticlassClassification;
  ds.num_classes = 10;
  ds.input_shape = {1, kSide, kSide};
  ds.features = Tensor({n, kSide * kSide});
  ds.targets = Tensor({n, 1});
  for (int i = 0; i < n; ++i) {
    const int label = rng.uniform_int(0, 9);
    // Class determines the blob center on a fixed grid; noise jitters it.
    const double cy = 3.0 + 5.0 * (label / 5) + rng.normal();
    const double cx = 1.5 + 3.0 * (label % 5) + rng.normal();
    for (int y = 0; y < kSide; ++y) {
      for (int x = 0; x < kSide; ++x) {
        const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
        double v = 255.0 * std::exp(-d2 / 8.0) + 12.0 * rng.uniform();
        ds.features[static_cast<std::int64_t>(i) * kSide * kSide + y * kSide + x] =
            std::clamp(std::floor(v), 0.0, 255.0);
      }
    }
    ds.targets.at(i, 0) = label;
  }
  return ds;
}

Dataset synth_timeseries(int n, int window, std::uint64_t seed) {
  Rng rng(seed);
  // AR(2) with a slow sinusoid, windowed into (lags -> next value) rows.
  const int total = n + window + 2;
  std::vector<double> series(static_cast<std::size_t>(total), 0.0);
  series[0] = rng.normal();
  series[1] = rng.normal();
  for (int t = 2; t < total; ++t) {
    series[static_cast<std::size_t>(t)] =
        0.6 * series[static_cast<std::size_t>(t - 1)] -
        0.25 * series[static_cast<std::size_t>(t - 2)] +
        0.5 * std::sin(0.05 * t) + 0.3 * rng.normal();
  }
  Dataset ds;
  ds.task = Task::Regression;
  ds.num_classes = 2;
  ds.input_shape = {window};
  ds.features = Tensor({n, window});
  ds.targets = Tensor({n, 1});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < window; ++j)
      ds.features.at(i, j) = series[static_cast<std::size_t>(i + j)];
    ds.targets.at(i, 0) = series[static_cast<std::size_t>(i + window)];
  }
  return ds;
}

void save_image_binary(const std::string& path, const Dataset& ds) {
  if (ds.input_shape.size() != 3)
    throw DataError("save_image_binary needs (c, h, w) shaped data");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(kImageMagic, 4);
  const std::uint32_t n = static_cast<std::uint32_t>(ds.features.dim(0));
  const std::uint32_t c = static_cast<std::uint32_t>(ds.input_shape[0]);
  const std::uint32_t h = static_cast<std::uint32_t>(ds.input_shape[1]);
  const std::uint32_t w = static_cast<std::uint32_t>(ds.input_shape[2]);
  for (std::uint32_t v : {n, c, h, w})
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  for (std::int64_t i = 0; i < ds.features.size(); ++i) {
    const std::uint8_t px = static_cast<std::uint8_t>(
        std::clamp(ds.features[i], 0.0, 255.0));
    out.write(reinterpret_cast<const char*>(&px), 1);
  }
  for (std::int64_t i = 0; i < ds.targets.size(); ++i) {
    const std::uint8_t lbl = static_cast<std::uint8_t>(ds.targets[i]);
    out.write(reinterpret_cast<const char*>(&lbl), 1);
  }
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace petra
