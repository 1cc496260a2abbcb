// core/include/espum/tensor.h

// Copyright 2026  The espum Authors
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

#ifndef ESPUM_TENSOR_H_
#define ESPUM_TENSOR_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace espum {

// Dense row-major array of doubles. Rank-2 tensors are used for frame
// sequences (frames x channels); conv weights are [out, in, kernel].
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);

  static Tensor Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
    return Tensor({rows, cols}, fill);
  }
  static Tensor FromRows(
      std::initializer_list<std::initializer_list<double>> rows);
  static Tensor FromRows(const std::vector<std::vector<double>> &rows);

  const std::vector<std::size_t> &shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

  double &operator()(std::size_t r, std::size_t c) {
    return values_[r * shape_[1] + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return values_[r * shape_[1] + c];
  }
  double &operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> Row(std::size_t r) {
    return {values_.data() + r * cols(), cols()};
  }
  std::span<const double> Row(std::size_t r) const {
    return {values_.data() + r * cols(), cols()};
  }

  std::vector<double> &values() { return values_; }
  const std::vector<double> &values() const { return values_; }
  double *data() { return values_.data(); }
  const double *data() const { return values_.data(); }

  void Fill(double v);
  bool SameShape(const Tensor &other) const { return shape_ == other.shape_; }
  bool AllFinite() const;
  std::string ShapeString() const;

  bool operator==(const Tensor &) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> values_;
};

// rows x num_classes, one 1.0 per row. Throws kRange on ids outside
// [0, num_classes).
Tensor OneHot(std::span<const int> ids, int num_classes);

double MaxAbsDiff(const Tensor &a, const Tensor &b);

}  // namespace espum

#endif  // ESPUM_TENSOR_H_
