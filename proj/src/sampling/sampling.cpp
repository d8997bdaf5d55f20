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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>

#include "lgso/error.hpp"
#include "lgso/sampling.hpp"

namespace lgso::sampling {

namespace {

constexpr const char* kHistoryMagic = "# lgso-history v1";

// Slack for points placed exactly on the box face.
double box_slack(double center, double eps) { return 1e-12 * std::max({1.0, std::abs(center), eps}); }

}  // namespace

Matrix lhs_sample(std::span<const double> center, double eps, std::size_t count, Rng& rng) {
  if (count == 0) throw ConfigError("latin hypercube needs at least one point");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("neighbourhood half-width must be positive and finite");
  const auto d = center.size();
  Matrix out(count, d);
  std::vector<std::size_t> perm(count);
  const double width = 2.0 * eps / static_cast<double>(count);
  for (std::size_t j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const double lo = center[j] - eps;
    const double hi = center[j] + eps;
    for (std::size_t i = 0; i < count; ++i) {
      const double u = uniform(rng, 0.0, 1.0);
      const double v = lo + (static_cast<double>(perm[i]) + u) * width;
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::clamp(v, lo, hi);
    }
  }
  return out;
}

bool in_box(std::span<const double> point, std::span<const double> center, double eps) {
  for (std::size_t j = 0; j < point.size(); ++j)
    if (std::abs(point[j] - center[j]) > eps + box_slack(center[j], eps)) return false;
  return true;
}

History::History(std::size_t dim_psi, std::size_t dim_x, std::size_t dim_y)
    : dim_psi_(dim_psi), dim_x_(dim_x), dim_y_(dim_y) {
  if (dim_psi == 0 || dim_y == 0) throw ShapeError("history needs positive psi and y dimensions");
}

std::size_t History::size() const {
  std::shared_lock lock(mutex_);
  return iteration_.size();
}

void History::append(const Matrix& psi, const Matrix& x, const Matrix& y, std::uint64_t iteration) {
  const auto n = psi.rows();
  if (static_cast<std::size_t>(psi.cols()) != dim_psi_ || static_cast<std::size_t>(x.cols()) != dim_x_ ||
      static_cast<std::size_t>(y.cols()) != dim_y_)
    throw ShapeError("history record widths (" + std::to_string(psi.cols()) + ", " + std::to_string(x.cols()) + ", " +
                     std::to_string(y.cols()) + ") do not match (" + std::to_string(dim_psi_) + ", " +
                     std::to_string(dim_x_) + ", " + std::to_string(dim_y_) + ")");
  if (x.rows() != n || y.rows() != n) throw ShapeError("history append with unequal row counts");
  if (n == 0) return;
  if (!psi.allFinite() || !x.allFinite() || !y.allFinite()) throw NumericError("non-finite value in history append");

  std::unique_lock lock(mutex_);
  for (Eigen::Index r = 0; r < n; ++r) {
    const std::size_t rec = iteration_.size();
    const bool same = !first_record_.empty() &&
                      std::equal(psi.row(r).data(), psi.row(r).data() + dim_psi_,
                                 points_.end() - static_cast<std::ptrdiff_t>(dim_psi_));
    if (!same) {
      points_.insert(points_.end(), psi.row(r).data(), psi.row(r).data() + dim_psi_);
      first_record_.push_back(rec);
      point_count_.push_back(0);
    }
    point_of_.push_back(static_cast<std::uint32_t>(first_record_.size() - 1));
    ++point_count_.back();
    xs_.insert(xs_.end(), x.row(r).data(), x.row(r).data() + dim_x_);
    ys_.insert(ys_.end(), y.row(r).data(), y.row(r).data() + dim_y_);
    iteration_.push_back(iteration);
  }
}

std::vector<std::size_t> History::query_indices(std::span<const double> center, double eps) const {
  if (center.size() != dim_psi_)
    throw ShapeError("query centre has dimension " + std::to_string(center.size()) + ", expected " +
                     std::to_string(dim_psi_));
  if (!(eps > 0.0)) throw ConfigError("query half-width must be positive");
  std::shared_lock lock(mutex_);
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < first_record_.size(); ++p) {
    if (!in_box({points_.data() + p * dim_psi_, dim_psi_}, center, eps)) continue;
    for (std::size_t k = 0; k < point_count_[p]; ++k) out.push_back(first_record_[p] + k);
  }
  return out;
}

RecordSet History::gather(std::span<const std::size_t> indices) const {
  const auto n = static_cast<Eigen::Index>(indices.size());
  RecordSet out{Matrix(n, dim_psi_), Matrix(n, dim_x_), Matrix(n, dim_y_), {}};
  out.iteration.reserve(indices.size());
  for (Eigen::Index r = 0; r < n; ++r) {
    const std::size_t i = indices[static_cast<std::size_t>(r)];
    if (i >= iteration_.size()) throw Error("history index " + std::to_string(i) + " out of range");
    const double* p = points_.data() + point_of_[i] * dim_psi_;
    std::copy(p, p + dim_psi_, out.psi.row(r).data());
    std::copy(xs_.data() + i * dim_x_, xs_.data() + (i + 1) * dim_x_, out.x.row(r).data());
    std::copy(ys_.data() + i * dim_y_, ys_.data() + (i + 1) * dim_y_, out.y.row(r).data());
    out.iteration.push_back(iteration_[i]);
  }
  return out;
}

RecordSet History::query_ball(std::span<const double> center, double eps) const {
  const auto idx = query_indices(center, eps);
  std::shared_lock lock(mutex_);
  return gather(idx);
}

RecordSet History::records(std::span<const std::size_t> indices) const {
  std::shared_lock lock(mutex_);
  return gather(indices);
}

RecordSet History::all() const {
  std::shared_lock lock(mutex_);
  std::vector<std::size_t> idx(iteration_.size());
  std::iota(idx.begin(), idx.end(), 0);
  return gather(idx);
}

void History::export_file(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write history file '" + path.string() + "'");
  std::shared_lock lock(mutex_);
  out << kHistoryMagic << ' ' << dim_psi_ << ' ' << dim_x_ << ' ' << dim_y_ << '\n';
  out.precision(17);
  for (std::size_t i = 0; i < iteration_.size(); ++i) {
    out << iteration_[i];
    const double* p = points_.data() + point_of_[i] * dim_psi_;
    for (std::size_t j = 0; j < dim_psi_; ++j) out << ',' << p[j];
    for (std::size_t j = 0; j < dim_x_; ++j) out << ',' << xs_[i * dim_x_ + j];
    for (std::size_t j = 0; j < dim_y_; ++j) out << ',' << ys_[i * dim_y_ + j];
    out << '\n';
  }
  if (!out) throw Error("failed writing history file '" + path.string() + "'");
}

std::size_t History::import_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open history file '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  std::size_t dp = 0, dx = 0, dy = 0;
  {
    const std::string magic = kHistoryMagic;
    if (line.rfind(magic, 0) != 0) throw DataError(path.string() + ": not a history file");
    std::istringstream hs(line.substr(magic.size()));
    if (!(hs >> dp >> dx >> dy)) throw DataError(path.string() + ": malformed history header");
  }
  if (dp != dim_psi_ || dx != dim_x_ || dy != dim_y_)
    throw DataError(path.string() + ": record widths (" + std::to_string(dp) + ", " + std::to_string(dx) + ", " +
                    std::to_string(dy) + ") do not match this history");
  std::size_t added = 0;
  const std::size_t width = 1 + dp + dx + dy;
  std::vector<double> vals;
  std::size_t line_no = 1;
  Matrix psi(1, dp), x(1, dx), y(1, dy);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    vals.clear();
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
    }
    if (vals.size() != width)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(width) +
                      " fields, found " + std::to_string(vals.size()));
    for (std::size_t j = 0; j < dp; ++j) psi(0, static_cast<Eigen::Index>(j)) = vals[1 + j];
    for (std::size_t j = 0; j < dx; ++j) x(0, static_cast<Eigen::Index>(j)) = vals[1 + dp + j];
    for (std::size_t j = 0; j < dy; ++j) y(0, static_cast<Eigen::Index>(j)) = vals[1 + dp + dx + j];
    append(psi, x, y, static_cast<std::uint64_t>(vals[0]));
    ++added;
  }
  return added;
}

}  // namespace lgso::sampling
