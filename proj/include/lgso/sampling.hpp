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

#pragma once

#include <cstdint>
#include <filesystem>
#include <shared_mutex>
#include <span>
#include <vector>

#include "lgso/diffcore.hpp"
#include "lgso/rng.hpp"

namespace lgso::sampling {

using diff::Matrix;

/// A flat set of simulator records, one row per record.
struct RecordSet {
  Matrix psi;
  Matrix x;
  Matrix y;
  std::vector<std::uint64_t> iteration;

  std::size_t size() const { return iteration.size(); }
  bool empty() const { return iteration.empty(); }
};

/// Latin hypercube sample of `count` points in the box center +- eps.
/// Returns a count x D matrix.
Matrix lhs_sample(std::span<const double> center, double eps, std::size_t count, Rng& rng);

/// Componentwise (L-infinity) box membership, shared by sampling and retrieval.
bool in_box(std::span<const double> point, std::span<const double> center, double eps);

/// Append-only record store with box queries. Readers may run concurrently;
/// appends take an exclusive lock.
class History {
 public:
  History(std::size_t dim_psi, std::size_t dim_x, std::size_t dim_y);

  std::size_t dim_psi() const { return dim_psi_; }
  std::size_t dim_x() const { return dim_x_; }
  std::size_t dim_y() const { return dim_y_; }
  std::size_t size() const;

  /// Rows of psi, x and y are aligned. Consecutive records with identical psi share storage.
  void append(const Matrix& psi, const Matrix& x, const Matrix& y, std::uint64_t iteration);

  /// Indices (in insertion order) of records whose psi lies in the box.
  std::vector<std::size_t> query_indices(std::span<const double> center, double eps) const;
  RecordSet query_ball(std::span<const double> center, double eps) const;
  RecordSet records(std::span<const std::size_t> indices) const;
  RecordSet all() const;

  /// One record per line: iteration, psi, x, y, comma separated.
  void export_file(const std::filesystem::path& path) const;
  /// Appends the records of an exported file. Returns the number read.
  std::size_t import_file(const std::filesystem::path& path);

 private:
  RecordSet gather(std::span<const std::size_t> indices) const;

  std::size_t dim_psi_, dim_x_, dim_y_;
  mutable std::shared_mutex mutex_;
  std::vector<double> points_;             // distinct psi values, dim_psi_ each
  std::vector<std::uint32_t> point_of_;    // record -> point index
  std::vector<std::size_t> first_record_;  // point -> first record index
  std::vector<std::size_t> point_count_;   // point -> number of records
  std::vector<double> xs_, ys_;
  std::vector<std::uint64_t> iteration_;
};

}  // namespace lgso::sampling
