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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "lgso/simulators.hpp"

using namespace lgso;
using namespace lgso::sim;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << body;
  return p;
}

std::string boston_row(double target) {
  std::string s;
  for (int c = 0; c < 13; ++c) s += std::to_string(0.1 * c) + ",";
  return s + std::to_string(target) + "\n";
}

}  // namespace

TEST_CASE("hump shape function") {
  CHECK(three_hump_h(0.0, 0.0) == 0.0);
  CHECK(three_hump_h(1.0, 1.0) == doctest::Approx(2.0 - 1.05 + 1.0 / 6.0 + 1.0 + 1.0).epsilon(1e-14));
  CHECK(three_hump_h(1.0, 1.0) == doctest::Approx(3.1166666666666667));
}

TEST_CASE("hump branch probability and errors") {
  std::vector<double> a{1.0, 0.0}, b{-1.0, 0.5}, zero{0.0, 0.0};
  CHECK(three_hump_branch_probability(a) == 1.0);
  CHECK(three_hump_branch_probability(b) == 0.0);
  CHECK_THROWS_AS(three_hump_branch_probability(zero), NumericError);

  Rng rng(3);
  std::vector<double> x{-1.0, 3.0};
  for (int i = 0; i < 200; ++i) CHECK(three_hump_draw(a, x, rng).branch == 1);
}

TEST_CASE("hump objective") {
  std::vector<double> y{5.0};
  CHECK(three_hump_objective(y) == doctest::Approx(-0.98661).epsilon(1e-5));
  std::vector<double> hi{1e6}, lo{-1e6};
  CHECK(three_hump_objective(hi) == doctest::Approx(0.0));
  CHECK(three_hump_objective(lo) == doctest::Approx(0.0));
  CHECK_THROWS(three_hump_objective(std::vector<double>{}));

  // graph objective agrees with the plain one
  auto p = make_problem("three_hump");
  Matrix ym(3, 1);
  ym << -1.0, 5.0, 12.0;
  Matrix xm = Matrix::Zero(3, 2);
  std::vector<double> yv{-1.0, 5.0, 12.0};
  CHECK(p->objective_value(ym, xm) == doctest::Approx(three_hump_objective(yv)).epsilon(1e-14));
}

TEST_CASE("hump mixture frequencies") {
  for (auto psi : {std::vector<double>{2.0, 1.0}, std::vector<double>{0.3, -1.0}}) {
    const double p = three_hump_branch_probability(psi);
    Rng rng(11);
    std::vector<double> x{-1.0, 3.0};
    const int n = 100000;
    int ones = 0;
    for (int i = 0; i < n; ++i) ones += three_hump_draw(psi, x, rng).branch == 1;
    const double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(ones / double(n) - p) < 3 * se);
  }
}

TEST_CASE("rosenbrock function and gradient") {
  std::vector<double> ones(10, 1.0), twos(10, 2.0);
  CHECK(rosenbrock_f(ones) == 0.0);
  CHECK(rosenbrock_f(twos) == 9.0);
  for (double g : rosenbrock_grad(ones)) CHECK(g == 0.0);
  CHECK_THROWS_AS(rosenbrock_f(std::vector<double>{1.0}), ShapeError);
  ProblemOptions tiny;
  tiny.rosenbrock_dim = 1;
  CHECK_THROWS(make_problem("rosenbrock", tiny));

  auto p = make_problem("rosenbrock");
  CHECK(p->has_analytic());
  CHECK(p->analytic_expected_objective(twos) == 9.0);
  CHECK(p->analytic_expected_objective(ones) == 0.0);

  Rng rng(5);
  std::vector<double> psi(10);
  for (auto& v : psi) v = uniform(rng, -2.0, 3.0);
  const auto g = p->analytic_gradient(psi);
  const double h = 1e-5;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    auto a = psi, b = psi;
    a[i] += h;
    b[i] -= h;
    const double fd = (rosenbrock_f(a) - rosenbrock_f(b)) / (2 * h);
    CHECK(std::abs(fd - g[i]) / std::max(std::abs(g[i]), 1e-6) < 1e-8);
  }
  CHECK_THROWS(make_problem("three_hump")->analytic_gradient(std::vector<double>{1.0, 1.0}));
}

TEST_CASE("rosenbrock monte carlo mean") {
  auto p = make_problem("rosenbrock");
  Simulator sim(*p, 99);
  std::vector<double> psi(10, 1.5);
  const std::size_t n = 100000;
  Matrix rows(n, 10);
  rows.rowwise() = Eigen::Map<const Eigen::RowVectorXd>(psi.data(), 10);
  auto b = sim.run(rows, 0);
  CHECK(sim.calls() == n);
  const double mean = b.y.mean();
  const double sd = std::sqrt(100.0 / 3.0 + 2.0);
  CHECK(std::abs(mean - rosenbrock_f(psi)) < 4 * (sd / std::sqrt(double(n))) * 2);
}

TEST_CASE("mixing matrix") {
  auto m = generate_mixing_matrix(100, 10, 1337);
  CHECK(m.q.rows() == 100);
  CHECK(m.q.cols() == 10);
  CHECK(m.seed == 1337);
  Matrix gram = m.q.transpose() * m.q;
  CHECK((gram - Matrix::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-10);
  auto again = generate_mixing_matrix(100, 10, 1337);
  CHECK(again.q == m.q);
  CHECK(generate_mixing_matrix(100, 10, 7).q != m.q);
  CHECK_THROWS_AS(generate_mixing_matrix(10, 10), ConfigError);
  CHECK_THROWS_AS(generate_mixing_matrix(5, 10), ConfigError);
}

TEST_CASE("submanifold rosenbrock projection") {
  auto p = make_problem("submanifold_rosenbrock");
  auto q = generate_mixing_matrix(100, 10, 1337).q;
  CHECK(p->dim_psi() == 100);

  // null-space moves leave the objective unchanged
  Rng rng(17);
  Eigen::VectorXd psi(100), z(100);
  for (auto& v : psi) v = std_normal(rng);
  for (auto& v : z) v = std_normal(rng);
  Eigen::VectorXd nz = z - q * (q.transpose() * z);
  Eigen::VectorXd moved = psi + 3.0 * nz;
  const double f0 = p->analytic_expected_objective({psi.data(), 100});
  CHECK(p->analytic_expected_objective({moved.data(), 100}) == doctest::Approx(f0).epsilon(1e-10));
  Eigen::VectorXd pure_null = nz;
  CHECK(p->analytic_expected_objective({pure_null.data(), 100}) ==
        doctest::Approx(rosenbrock_f(std::vector<double>(10, 0.0))).epsilon(1e-10));

  // the gradient matches finite differences and lies in the column space of q
  auto g = p->analytic_gradient({psi.data(), 100});
  Eigen::Map<const Eigen::VectorXd> gv(g.data(), 100);
  Eigen::VectorXd residual = gv - q * (q.transpose() * gv);
  CHECK(residual.norm() < 1e-10 * std::max(1.0, gv.norm()));
  const double h = 1e-5;
  for (int i = 0; i < 100; i += 7) {
    Eigen::VectorXd a = psi, b = psi;
    a[i] += h;
    b[i] -= h;
    const double fd =
        (p->analytic_expected_objective({a.data(), 100}) - p->analytic_expected_objective({b.data(), 100})) / (2 * h);
    CHECK(fd == doctest::Approx(g[static_cast<std::size_t>(i)]).epsilon(1e-6));
  }
}

TEST_CASE("nonlinear hump") {
  auto p = make_problem("nonlinear_submanifold_hump");
  CHECK(p->dim_psi() == 40);
  CHECK(p->initial_psi() == std::vector<double>(40, 0.5));
  Simulator sim(*p, 1);
  Matrix zero = Matrix::Zero(1, 40);
  CHECK_THROWS_AS(sim.run(zero, 0), NumericError);
  Matrix init(1, 40);
  init.setConstant(0.5);
  auto b = sim.run(init, 0);
  CHECK(std::isfinite(b.y(0, 0)));
  // random psi values land in a 2-D image bounded by the tanh range
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    Matrix r(1, 40);
    for (auto& v : r.reshaped()) v = 10.0 * std_normal(rng);
    CHECK(std::isfinite(sim.run(r, static_cast<std::uint64_t>(t + 1)).y(0, 0)));
  }
}

TEST_CASE("boston network") {
  const auto w = boston_initial_weights();
  REQUIRE(w.size() == kBostonParams);
  CHECK(w.front() == 0.0215);
  CHECK(w.back() == 22.5328);

  auto data = load_boston_csv(default_boston_csv());
  CHECK(data.features.rows() == 506);
  CHECK(data.features.cols() == 13);
  CHECK(data.targets.size() == 506);

  std::vector<double> zeros(kBostonParams, 0.0);
  zeros.back() = 4.25;
  for (double y : boston_nn_simulate(zeros, data)) CHECK(y == 4.25);

  const auto pred = boston_nn_simulate(w, data);
  CHECK(pred == boston_nn_simulate(w, data));
  CHECK(boston_objective(pred, data.targets) == doctest::Approx(9.196766416612913).epsilon(1e-12));
  CHECK_THROWS_AS(boston_nn_simulate(std::vector<double>(90, 0.0), data), ShapeError);

  std::vector<double> shifted = data.targets;
  for (auto& v : shifted) v += 1.0;
  CHECK(boston_objective(data.targets, data.targets) == 0.0);
  CHECK(boston_objective(shifted, data.targets) == doctest::Approx(1.0));
  CHECK_THROWS_AS(boston_objective(std::vector<double>{1.0}, data.targets), ShapeError);
}

TEST_CASE("boston problem counts one call per dataset pass") {
  auto p = make_problem("boston_nn");
  Simulator sim(*p, 4, 3);
  Matrix psi(2, kBostonParams);
  const auto w = boston_initial_weights();
  for (int r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < kBostonParams; ++c) psi(r, static_cast<Eigen::Index>(c)) = w[c];
  auto b = sim.run(psi, 0);
  CHECK(sim.calls() == 2);
  CHECK(b.y.rows() == 2 * 506);
  CHECK(p->objective_value(b.y, b.x) == doctest::Approx(9.196766416612913).epsilon(1e-12));
  CHECK_THROWS_AS(sim.run(psi, 1), BudgetExhausted);
  CHECK(sim.calls() == 2);
}

TEST_CASE("boston csv parsing") {
  std::string body = "a,b,c,d,e,f,g,h,i,j,k,l,m,target\n";
  for (int r = 0; r < 506; ++r) body += boston_row(20.0 + r % 3);
  CHECK(load_boston_csv(write_temp("lgso_ok.csv", body)).targets.size() == 506);

  std::string noheader;
  for (int r = 0; r < 506; ++r) noheader += boston_row(1.0);
  CHECK(load_boston_csv(write_temp("lgso_nohdr.csv", noheader)).features.rows() == 506);

  std::string short_col = "1,2,3\n" + noheader;
  try {
    load_boston_csv(write_temp("lgso_cols.csv", short_col));
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("expected 14 columns, found 3") != std::string::npos);
  }

  std::string few;
  for (int r = 0; r < 10; ++r) few += boston_row(1.0);
  try {
    load_boston_csv(write_temp("lgso_rows.csv", few));
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("expected 506 records, found 10") != std::string::npos);
  }
  CHECK_THROWS_AS(load_boston_csv("/nonexistent/boston.csv"), DataError);
}

TEST_CASE("simulator streams are independent of parallelism") {
  auto p = make_problem("three_hump");
  Matrix psi(64, 2);
  Rng rng(8);
  for (auto& v : psi.reshaped()) v = uniform(rng, 0.5, 2.0);
  Simulator serial(*p, 21), parallel(*p, 21, UINT64_MAX, 4);
  auto a = serial.run(psi, 5);
  auto b = parallel.run(psi, 5);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
  CHECK(serial.calls() == 64);
  // same tag, same stream; different tag, different draws
  CHECK(serial.run(psi, 5).y == a.y);
  CHECK(serial.run(psi, 6).y != a.y);
}

TEST_CASE("simulator budget and shapes") {
  auto p = make_problem("rosenbrock");
  Simulator sim(*p, 1, 10);
  Matrix psi = Matrix::Constant(6, 10, 2.0);
  sim.run(psi, 0);
  CHECK(sim.remaining() == 4);
  CHECK_THROWS_AS(sim.run(psi, 1), BudgetExhausted);
  CHECK(sim.calls() == 6);
  CHECK_THROWS_AS(sim.run(Matrix::Constant(1, 3, 1.0), 2), ShapeError);
  Matrix bad = Matrix::Constant(1, 10, 1.0);
  bad(0, 3) = std::nan("");
  CHECK_THROWS_AS(sim.run(bad, 3), NumericError);
  CHECK_THROWS_AS(make_problem("nope"), ConfigError);
  CHECK(problem_ids().size() == 5);
  for (const auto& id : problem_ids()) CHECK(make_problem(id)->id() == id);
}
