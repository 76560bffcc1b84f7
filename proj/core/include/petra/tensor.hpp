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

#ifndef PETRA_TENSOR_HPP_
#define PETRA_TENSOR_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "petra/errors.hpp"

namespace petra {

// Storage precision tag. Arithmetic is always carried out in double; the tag
// governs on-disk payload width, size accounting, and grid snapping.
enum class Precision : std::uint8_t { F32 = 0, F16 = 1, I8 = 2 };

inline int bytes_per_element(Precision p) {
  switch (p) {
    case Precision::F32: return 4;
    case Precision::F16: return 2;
    case Precision::I8: return 1;
  }
  return 4;
}

// Dense row-major tensor of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int> shape, double v);

  const std::vector<int>& shape() const { return shape_; }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  int ndim() const { return static_cast<int>(shape_.size()); }

  double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  // 2-D accessors (row, col)
  double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * shape_[1] + c]; }
  double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * shape_[1] + c]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  Tensor reshaped(std::vector<int> shape) const;
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool all_finite() const;
  void check_finite(const std::string& context) const;

  std::string shape_str() const;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

std::int64_t shape_product(const std::vector<int>& shape);

// y = x * W^T + b, x: (n, in), W: (out, in), b: (out) or empty.
Tensor matmul_nt(const Tensor& x, const Tensor& w, const Tensor& b);
// plain (m,k)x(k,n) product
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose2d(const Tensor& a);

double dot(const Tensor& a, const Tensor& b);
double l1_norm(const Tensor& a);
double l2_norm(const Tensor& a);
double max_abs(const Tensor& a);

}  // namespace petra

#endif  // PETRA_TENSOR_HPP_
