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

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>
#include <thread>

#include "lgso/error.hpp"
#include "lgso/sampling.hpp"

using namespace lgso;
using namespace lgso::sampling;

namespace {

// Two-sided KS statistic of a sample against U[lo, hi].
double ks_uniform(std::vector<double> v, double lo, double hi) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = (v[i] - lo) / (hi - lo);
    d = std::max({d, std::abs(f - i / n), std::abs((i + 1) / n - f)});
  }
  return d;
}

Matrix rows_of(std::size_t n, std::size_t d, double fill) { return Matrix::Constant(n, d, fill); }

}  // namespace

TEST_CASE("lhs single point and box containment") {
  Rng rng(1);
  std::vector<double> c{2.0, -1.0, 0.5};
  auto one = lhs_sample(c, 0.3, 1, rng);
  CHECK(one.rows() == 1);
  CHECK(in_box({one.row(0).data(), 3}, c, 0.3));
  auto many = lhs_sample(c, 0.3, 500, rng);
  for (Eigen::Index r = 0; r < many.rows(); ++r)
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(std::abs(many(r, j) - c[static_cast<std::size_t>(j)]) <= 0.3);
  CHECK_THROWS_AS(lhs_sample(c, 0.0, 4, rng), ConfigError);
  CHECK_THROWS_AS(lhs_sample(c, 0.1, 0, rng), ConfigError);
}

TEST_CASE("lhs occupies distinct strata") {
  Rng rng(7);
  std::vector<double> c{0.0, 10.0};
  for (int rep = 0; rep < 20; ++rep) {
    auto pts = lhs_sample(c, 1.0, 10, rng);
    for (Eigen::Index j = 0; j < 2; ++j) {
      std::set<int> strata;
      for (Eigen::Index r = 0; r < 10; ++r) {
        const double lo = c[static_cast<std::size_t>(j)] - 1.0;
        strata.insert(std::min(9, static_cast<int>((pts(r, j) - lo) / 0.2)));
      }
      CHECK(strata.size() == 10);
    }
  }
}

TEST_CASE("lhs marginals are uniform") {
  Rng rng(3);
  std::vector<double> c{1.0, -2.0};
  // many small designs pooled, so the check is not just the stratification
  std::vector<double> d0, d1;
  for (int rep = 0; rep < 1000; ++rep) {
    auto pts = lhs_sample(c, 0.5, 10, rng);
    for (Eigen::Index r = 0; r < 10; ++r) {
      d0.push_back(pts(r, 0));
      d1.push_back(pts(r, 1));
    }
  }
  CHECK(ks_uniform(d0, 0.5, 1.5) < 0.05);
  CHECK(ks_uniform(d1, -2.5, -1.5) < 0.05);
  auto big = lhs_sample(c, 0.5, 10000, rng);
  std::vector<double> b(big.col(0).begin(), big.col(0).end());
  CHECK(ks_uniform(b, 0.5, 1.5) < 0.05);
}

TEST_CASE("lhs is deterministic per stream") {
  std::vector<double> c{0.0, 0.0, 0.0};
  Rng a(42), b(42);
  CHECK(lhs_sample(c, 1.0, 16, a) == lhs_sample(c, 1.0, 16, b));
}

TEST_CASE("history append and query") {
  History h(2, 1, 1);
  CHECK(h.size() == 0);
  h.append(Matrix(0, 2), Matrix(0, 1), Matrix(0, 1), 0);
  CHECK(h.size() == 0);

  Matrix psi(3, 2);
  psi << 0.0, 0.0, 0.0, 0.0, 1.0, 1.0;
  Matrix x(3, 1), y(3, 1);
  x << 1, 2, 3;
  y << 10, 20, 30;
  h.append(psi, x, y, 4);
  CHECK(h.size() == 3);

  std::vector<double> c0{0.0, 0.0}, c1{1.0, 1.0};
  auto r0 = h.query_ball(c0, 0.1);
  CHECK(r0.size() == 2);
  CHECK(r0.y(1, 0) == 20);
  CHECK(r0.iteration[0] == 4);
  CHECK(h.query_ball(c1, 1e-12).size() == 1);
  CHECK(h.query_ball(c0, 1e300).size() == 3);
  CHECK(h.query_ball(std::vector<double>{0.5, 0.5}, 1e-9).empty());

  // L-infinity: a corner of the box is inside
  CHECK(h.query_ball(std::vector<double>{0.5, 0.5}, 0.5).size() == 3);

  CHECK_THROWS_AS(h.append(Matrix(1, 3), Matrix(1, 1), Matrix(1, 1), 0), ShapeError);
  CHECK_THROWS_AS(h.append(Matrix(2, 2), Matrix(1, 1), Matrix(2, 1), 0), ShapeError);
  CHECK_THROWS_AS(h.query_ball(c0, 0.0), ConfigError);
  CHECK_THROWS_AS(h.query_ball(std::vector<double>{0.0}, 1.0), ShapeError);
  CHECK(h.size() == 3);
}

TEST_CASE("sampled points are retrieved by the matching query") {
  Rng rng(9);
  for (double eps : {1e-3, 0.2, 0.5, 7.0}) {
    std::vector<double> c{3.3, -0.1, 1e3};
    History h(3, 1, 1);
    auto pts = lhs_sample(c, eps, 200, rng);
    h.append(pts, rows_of(200, 1, 0.0), rows_of(200, 1, 1.0), 0);
    CHECK(h.query_indices(c, eps).size() == 200);
  }
}

TEST_CASE("query results do not depend on insertion order") {
  Rng rng(5);
  std::vector<double> c{0.0, 0.0};
  auto a = lhs_sample(c, 1.0, 50, rng);
  auto b = lhs_sample(std::vector<double>{0.8, 0.8}, 1.0, 50, rng);
  Matrix ya = Matrix::Random(50, 1), yb = Matrix::Random(50, 1);
  History h1(2, 0, 1), h2(2, 0, 1);
  h1.append(a, Matrix(50, 0), ya, 0);
  h1.append(b, Matrix(50, 0), yb, 1);
  h2.append(b, Matrix(50, 0), yb, 1);
  h2.append(a, Matrix(50, 0), ya, 0);
  auto key = [](const RecordSet& r) {
    std::multiset<std::tuple<double, double, double>> s;
    for (std::size_t i = 0; i < r.size(); ++i) {
      const auto ri = static_cast<Eigen::Index>(i);
      s.emplace(r.psi(ri, 0), r.psi(ri, 1), r.y(ri, 0));
    }
    return s;
  };
  std::vector<double> q{0.4, 0.3};
  CHECK(key(h1.query_ball(q, 0.5)) == key(h2.query_ball(q, 0.5)));
}

TEST_CASE("history export round trip") {
  History h(2, 2, 1);
  Matrix psi(4, 2), x(4, 2), y(4, 1);
  psi << 0.1, 0.2, 0.1, 0.2, 1.0 / 3.0, -7.5, 1e-17, 5.0;
  x << 1, 2, 3, 4, 5, 6, 7, 8;
  y << -0.5, 0.25, 3.0 / 7.0, 9.0;
  h.append(psi.topRows(2), x.topRows(2), y.topRows(2), 0);
  h.append(psi.bottomRows(2), x.bottomRows(2), y.bottomRows(2), 3);
  auto path = std::filesystem::temp_directory_path() / "lgso_history_test.csv";
  h.export_file(path);

  History back(2, 2, 1);
  CHECK(back.import_file(path) == 4);
  auto a = h.all(), b = back.all();
  CHECK(a.psi == b.psi);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
  CHECK(a.iteration == b.iteration);

  History wrong(3, 2, 1);
  CHECK_THROWS_AS(wrong.import_file(path), DataError);
  CHECK_THROWS_AS(back.import_file("/nonexistent/h.csv"), DataError);
}

TEST_CASE("concurrent readers during appends") {
  History h(1, 0, 1);
  std::atomic<bool> stop{false};
  std::atomic<bool> torn{false};
  std::vector<std::jthread> readers;
  for (int t = 0; t < 3; ++t)
    readers.emplace_back([&] {
      std::vector<double> c{0.0};
      while (!stop) {
        auto r = h.query_ball(c, 1e9);
        if (r.psi.rows() != static_cast<Eigen::Index>(r.size()) || r.size() % 5 != 0) torn = true;
      }
    });
  for (int i = 0; i < 200; ++i) h.append(Matrix::Constant(5, 1, i), Matrix(5, 0), Matrix::Constant(5, 1, i), i);
  stop = true;
  readers.clear();
  CHECK(h.size() == 1000);
  CHECK_FALSE(torn);
}
