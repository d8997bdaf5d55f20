// Copyright 2026 The LGSO Authors
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

#include <cmath>
#include <sstream>

#include "lgso/diffcore.hpp"

namespace lgso::diff {

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : m_(Matrix::Constant(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols), fill)) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values) {
  std::size_t rows = 1;
  std::size_t cols = 1;
  switch (shape.size()) {
    case 0:
      break;
    case 1:
      cols = shape[0];
      break;
    case 2:
      rows = shape[0];
      cols = shape[1];
      break;
    default:
      throw ShapeError("tensor rank " + std::to_string(shape.size()) + " not supported (max 2)");
  }
  if (rows * cols != values.size()) {
    throw ShapeError("tensor shape holds " + std::to_string(rows * cols) + " values, got " +
                     std::to_string(values.size()));
  }
  m_.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::copy(values.begin(), values.end(), m_.data());
}

Tensor Tensor::row(std::span<const double> v) {
  Tensor t(1, v.size());
  std::copy(v.begin(), v.end(), t.m_.data());
  return t;
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_string(*this));
  return m_(0, 0);
}

std::string shape_string(const Tensor& t) {
  std::ostringstream os;
  os << t.rows() << "x" << t.cols();
  return os.str();
}

}  // namespace lgso::diff
