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

#include "doctest.h"

#include <cmath>
#include <fstream>

#include <Eigen/QR>

#include "lgso/diagnostics.hpp"

using namespace lgso;

namespace {

// y = slope . psi + scale * x + offset, x ~ N(0, 1)
class Plane : public sim::Problem {
 public:
  Plane(std::vector<double> slope, double scale, bool oracle = true) : slope_(std::move(slope)), scale_(scale), oracle_(oracle) {}
  std::string_view id() const override { return "plane"; }
  std::size_t dim_psi() const override { return slope_.size(); }
  std::size_t dim_x() const override { return 1; }
  void sample_input(Rng& rng, std::span<double> x) const override { x[0] = std_normal(rng); }
  void simulate(std::span<const double> psi, std::span<const double> x, Rng&, std::span<double> y) const override {
    double v = 1.0 + scale_ * x[0];
    for (std::size_t i = 0; i < slope_.size(); ++i) v += slope_[i] * psi[i];
    y[0] = v;
  }
  diff::NodeId objective(diff::Graph& g, diff::NodeId y, diff::NodeId) const override { return g.mean(y); }
  bool has_mc_oracle() const override { return oracle_; }
  double default_epsilon() const override { return 0.5; }
  std::vector<double> initial_psi() const override { return std::vector<double>(slope_.size(), 0.0); }

 private:
  std::vector<double> slope_;
  double scale_;
  bool oracle_;
};

}  // namespace

TEST_CASE("bias of the reference against itself is zero") {
  const std::vector<double> psi{1.0, 2.0}, truth{0.3, -4.0};
  auto e = estimate_bias_variance(psi, truth, 5, [&](std::size_t) { return truth; });
  CHECK(e.repeats() == 5);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(e.bias[i] == 0.0);
    CHECK(e.variance[i] == 0.0);
  }
  CHECK_THROWS_AS(estimate_bias_variance(psi, truth, 1, [&](std::size_t) { return truth; }), ConfigError);
}

TEST_CASE("two-repeat variance is half the squared difference") {
  const std::vector<double> truth{1.0, 0.0, -2.0};
  const std::vector<double> g1{0.5, 2.0, -2.5}, g2{1.75, -1.0, 0.0};
  auto e = aggregate_bias({0, 0, 0}, truth, {g1, g2});
  for (std::size_t i = 0; i < 3; ++i) {
    const double b1 = truth[i] - g1[i], b2 = truth[i] - g2[i];
    CHECK(e.bias[i] == doctest::Approx((b1 + b2) / 2));
    CHECK(e.variance[i] == doctest::Approx((b1 - b2) * (b1 - b2) / 2));
  }
  // aggregation depends only on the stored samples
  auto again = aggregate_bias(e.psi, e.truth, e.samples);
  CHECK(again.bias == e.bias);
  CHECK(again.variance == e.variance);
}

TEST_CASE("surrogate bias estimate returns R samples") {
  sim::ProblemOptions two_d;
  two_d.rosenbrock_dim = 2;
  auto problem = sim::make_problem("rosenbrock", two_d);
  BiasConfig cfg;
  cfg.repeats = 2;
  cfg.m_inputs = 50;
  cfg.k_grad = 128;
  cfg.surrogate.generator_hidden = {16, 16, 16};
  cfg.surrogate.critic_hidden = {16, 16};
  cfg.surrogate.critic_output = 16;
  cfg.surrogate.epochs = 3;
  const std::vector<double> psi{2.0, 2.0};
  auto path = estimate_bias_path(*problem, {psi}, cfg);
  REQUIRE(path.size() == 1);
  CHECK(path[0].repeats() == 2);
  CHECK(path[0].truth == problem->analytic_gradient(psi));
  for (double v : path[0].variance) CHECK(v >= 0.0);
  auto again = estimate_bias_path(*problem, {psi}, cfg);
  CHECK(again[0].samples == path[0].samples);

  auto file = std::filesystem::temp_directory_path() / "lgso_bias_test.csv";
  write_bias_report(file, path, "prov");
  std::ifstream in(file);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 1 + 1 + 2);
  std::filesystem::remove(file);
}

TEST_CASE("analytic oracles") {
  auto rosen = sim::make_problem("rosenbrock");
  auto g = oracle_gradient(*rosen, std::vector<double>(10, 1.0));
  CHECK(g.analytic);
  for (double v : g.gradient) CHECK(v == 0.0);

  auto sub = sim::make_problem("submanifold_rosenbrock");
  const std::vector<double> psi(100, 2.0);
  auto sg = oracle_gradient(*sub, psi).gradient;
  const auto q = sim::generate_mixing_matrix(100, 10, 1337).q;
  Eigen::Map<const Eigen::VectorXd> gv(sg.data(), 100);
  Rng rng = make_stream(3, Stream::kTest, {});
  for (int k = 0; k < 5; ++k) {
    Eigen::VectorXd v(100);
    for (auto& c : v) c = std_normal(rng);
    Eigen::VectorXd null = v - q * (q.transpose() * v);
    CHECK(std::abs(null.dot(gv)) < 1e-8);
  }

  CHECK_THROWS_AS(oracle_gradient(Plane({1.0}, 1.0, false), std::vector<double>{0.0}), ConfigError);
}

TEST_CASE("monte carlo oracle uses common random numbers") {
  // with shared noise the +h and -h probes differ only through psi
  Plane plane({2.0, -0.5}, 3.0);
  OracleConfig cfg;
  cfg.samples = 2000;
  cfg.blocks = 10;
  auto g = oracle_gradient(plane, std::vector<double>{0.2, 0.1}, cfg);
  CHECK(!g.analytic);
  CHECK(g.gradient[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(g.gradient[1] == doctest::Approx(-0.5).epsilon(1e-9));
  CHECK(g.standard_error[0] < 1e-9);
  CHECK(oracle_tag(1, 3, 10) == 13);
}

TEST_CASE("hump oracle is self-consistent") {
  auto hump = sim::make_problem("three_hump");
  const std::vector<double> psi{1.0, 1.0};
  OracleConfig a, b;
  a.seed = 1;
  b.seed = 2;
  auto ga = oracle_gradient(*hump, psi, a);
  auto gb = oracle_gradient(*hump, psi, b);
  for (std::size_t i = 0; i < 2; ++i) {
    const double pooled = std::sqrt(ga.standard_error[i] * ga.standard_error[i] + gb.standard_error[i] * gb.standard_error[i]);
    CHECK(pooled > 0.0);
    CHECK(std::abs(ga.gradient[i] - gb.gradient[i]) < 3.0 * pooled);
  }
  MESSAGE("hump gradient at (1,1): " << ga.gradient[0] << ", " << ga.gradient[1] << " se " << ga.standard_error[0]);
}

TEST_CASE("epsilon heuristic") {
  const std::vector<double> grid{0.05, 0.1, 0.2, 0.5, 1.0};
  Plane deterministic({1.0, 1.0}, 0.0);
  auto s = suggest_epsilon(deterministic, std::vector<double>{0.0, 0.0}, grid);
  REQUIRE(s.epsilon);
  CHECK(*s.epsilon == 0.05);
  CHECK(s.checks.size() == grid.size());

  Plane flat({0.0, 0.0}, 0.0);
  CHECK(!suggest_epsilon(flat, std::vector<double>{0.0, 0.0}, grid).epsilon);

  // objective values averaged over 100 calls each
  auto rosen = sim::make_problem("rosenbrock");
  EpsilonConfig cfg;
  cfg.samples = 200;
  cfg.batch = 100;
  auto r = suggest_epsilon(*rosen, std::vector<double>(10, 2.0), grid, cfg);
  REQUIRE(r.epsilon);
  CHECK(*r.epsilon <= 0.5);

  CHECK_THROWS_AS(suggest_epsilon(flat, std::vector<double>{0.0, 0.0}, std::vector<double>{0.2, 0.1}), ConfigError);
}

TEST_CASE("objective evaluation") {
  auto rosen = sim::make_problem("rosenbrock");
  CHECK(evaluate_objective(*rosen, std::vector<double>(10, 2.0)) == doctest::Approx(9.0));
  Plane plane({1.0}, 0.5);
  EvalConfig cfg;
  cfg.samples = 40000;
  CHECK(evaluate_objective(plane, std::vector<double>{2.0}, cfg) == doctest::Approx(3.0).epsilon(0.01));
}

TEST_CASE("sweeps") {
  Plane plane({1.0}, 0.3);
  SweepSetup setup;
  setup.method = Method::kNumDiff;
  setup.numdiff.n_eval = 5;
  setup.numdiff.max_iterations = 10;
  setup.numdiff.seed = 9;
  setup.numdiff.initial_psi = {0.5};
  setup.eval.samples = 100;

  // 1 x 1 grid matches a direct run
  SweepGrid one;
  one.lr = {0.1};
  auto rows = run_sweep(plane, one, setup);
  REQUIRE(rows.size() == 1);
  auto trace = run_numdiff(plane, setup.numdiff);
  EvalConfig eval = setup.eval;
  eval.seed = 9;
  CHECK(rows[0].final_objective == evaluate_objective(plane, trace.final_psi(), eval));
  CHECK(rows[0].calls == 10 * 2 * 5);

  SweepGrid two;
  two.lr = {0.05, 0.2};
  two.step = {0.1, 0.3};
  auto grid = run_sweep(plane, two, setup);
  CHECK(grid.size() == 4);
  // any cell order gives the same rows
  auto cells = sweep_cells(two, setup);
  for (std::size_t i = cells.size(); i-- > 0;) {
    auto r = run_cell(plane, setup, cells[i]);
    CHECK(r.final_objective == grid[i].final_objective);
    CHECK(r.cell.lr == grid[i].cell.lr);
    CHECK(r.cell.step == grid[i].cell.step);
  }

  // failures are recorded and the sweep carries on
  SweepGrid bad;
  bad.step = {-1.0, 0.1};
  auto mixed = run_sweep(plane, bad, setup);
  REQUIRE(mixed.size() == 2);
  CHECK(!mixed[0].error.empty());
  CHECK(std::isnan(mixed[0].final_objective));
  CHECK(mixed[1].error.empty());

  CHECK(parse_method("score_fn") == Method::kScoreFn);
  CHECK_THROWS_AS(parse_method("bock"), ConfigError);
}
