// core/src/tensor.cc

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

#include "espum/tensor.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "espum/error.h"

namespace espum {

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)) {
  std::size_t n = std::accumulate(shape_.begin(), shape_.end(),
                                  std::size_t{1}, std::multiplies<>());
  values_.assign(n, fill);
}

Tensor Tensor::FromRows(
    std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<std::vector<double>> v;
  for (const auto &r : rows) v.emplace_back(r);
  return FromRows(v);
}

Tensor Tensor::FromRows(const std::vector<std::vector<double>> &rows) {
  std::size_t cols = rows.empty() ? 0 : rows.front().size();
  Tensor t = Matrix(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols)
      throw Error(ErrorCode::kShapeMismatch, "ragged rows");
    std::copy(rows[r].begin(), rows[r].end(), t.Row(r).begin());
  }
  return t;
}

void Tensor::Fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Tensor::AllFinite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

std::string Tensor::ShapeString() const {
  std::string s = "[";
  for (std::size_t i = 0; i < shape_.size(); ++i)
    s += (i ? "x" : "") + std::to_string(shape_[i]);
  return s + "]";
}

Tensor OneHot(std::span<const int> ids, int num_classes) {
  Tensor t = Tensor::Matrix(ids.size(), static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= num_classes)
      throw Error(ErrorCode::kRange, "unit id " + std::to_string(ids[i]) +
                                         " outside inventory of " +
                                         std::to_string(num_classes));
    t(i, ids[i]) = 1.0;
  }
  return t;
}

double MaxAbsDiff(const Tensor &a, const Tensor &b) {
  if (!a.SameShape(b))
    throw Error(ErrorCode::kShapeMismatch,
                a.ShapeString() + " vs " + b.ShapeString());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace espum
