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
#include <filesystem>

#include "lgso/lgso_loop.hpp"

using namespace lgso;

namespace {

// y = (psi - centre)^2 + slope * x, x ~ U(-1, 1). Deterministic when slope is 0.
class Bowl : public sim::Problem {
 public:
  explicit Bowl(double centre, double slope = 0.0) : centre_(centre), slope_(slope) {}
  std::string_view id() const override { return "bowl"; }
  std::size_t dim_psi() const override { return 1; }
  std::size_t dim_x() const override { return 1; }
  void sample_input(Rng& rng, std::span<double> x) const override { x[0] = uniform(rng, -1.0, 1.0); }
  void simulate(std::span<const double> psi, std::span<const double> x, Rng&, std::span<double> y) const override {
    y[0] = (psi[0] - centre_) * (psi[0] - centre_) + slope_ * x[0];
  }
  diff::NodeId objective(diff::Graph& g, diff::NodeId y, diff::NodeId) const override { return g.mean(y); }
  double default_epsilon() const override { return 0.5; }
  std::vector<double> initial_psi() const override { return {1.5}; }

 private:
  double centre_;
  double slope_;
};

// Output independent of psi.
class Flat : public Bowl {
 public:
  Flat() : Bowl(0.0, 1.0) {}
  void simulate(std::span<const double>, std::span<const double> x, Rng&, std::span<double> y) const override {
    y[0] = 5.0 + x[0];
  }
};

// narrow networks keep the loop tests quick
LgsoConfig quick(const sim::Problem& p) {
  auto c = default_config_for(p);
  c.k_grad = 256;
  c.seed = 11;
  c.surrogate.generator_hidden = {32, 32, 32};
  c.surrogate.critic_hidden = {32, 32};
  c.surrogate.critic_output = 64;
  return c;
}

}  // namespace

TEST_CASE("quadratic simulator converges to its minimum") {
  Bowl bowl(3.0);
  auto cfg = quick(bowl);
  cfg.max_iterations = 200;
  cfg.convergence_window = 0;
  cfg.surrogate.max_records = 512;
  auto trace = run_lgso(bowl, cfg);
  REQUIRE(!trace.entries.empty());
  CHECK(std::abs(trace.final_psi()[0] - 3.0) < 0.1);
  MESSAGE("final psi " << trace.final_psi()[0] << " after " << trace.entries.size());
}

TEST_CASE("call accounting grows by N*M per iteration") {
  Bowl bowl(3.0, 0.5);
  auto cfg = quick(bowl);
  cfg.n_psi = 3;
  cfg.m_inputs = 20;
  cfg.max_iterations = 4;
  cfg.convergence_window = 0;
  auto trace = run_lgso(bowl, cfg);
  REQUIRE(trace.entries.size() == 4);
  CHECK(trace.stop == StopReason::kMaxIterations);
  for (std::size_t t = 0; t < trace.entries.size(); ++t) {
    CHECK(trace.entries[t].iteration == t);
    CHECK(trace.entries[t].cum_calls == (t + 1) * 60);
    CHECK(trace.entries[t].psi.size() == 1);
    CHECK(std::isfinite(trace.entries[t].objective_surr));
  }
}

TEST_CASE("history reuse keeps earlier records in the training set") {
  Flat flat;
  auto cfg = quick(flat);
  cfg.m_inputs = 50;
  cfg.optimizer.lr = 1e-9;  // psi stays put
  cfg.max_iterations = 3;
  cfg.convergence_window = 0;
  auto trace = run_lgso(flat, cfg);
  REQUIRE(trace.entries.size() == 3);
  const std::size_t nm = cfg.n_psi * cfg.m_inputs;
  CHECK(trace.entries[0].train_records == nm);
  for (std::size_t t = 1; t < 3; ++t) CHECK(trace.entries[t].train_records >= (t + 1) * nm);

  cfg.reuse_history = false;
  auto fresh = run_lgso(flat, cfg);
  for (const auto& e : fresh.entries) CHECK(e.train_records == nm);
}

TEST_CASE("budget stops the loop before overspending") {
  Bowl bowl(3.0, 0.5);
  auto cfg = quick(bowl);
  cfg.m_inputs = 30;
  cfg.convergence_window = 0;
  sim::Simulator simulator(bowl, cfg.seed, 100);
  auto trace = run_lgso(bowl, cfg, simulator);
  CHECK(trace.stop == StopReason::kBudget);
  CHECK(trace.entries.size() == 3);
  CHECK(simulator.calls() == 90);

  sim::Simulator empty(bowl, cfg.seed, 0);
  auto none = run_lgso(bowl, cfg, empty);
  CHECK(none.entries.empty());
  CHECK(none.final_psi() == bowl.initial_psi());
}

TEST_CASE("runs are reproducible and the trace file round-trips") {
  Bowl bowl(3.0, 0.5);
  auto cfg = quick(bowl);
  cfg.m_inputs = 40;
  cfg.max_iterations = 3;
  cfg.convergence_window = 0;
  auto a = run_lgso(bowl, cfg);
  auto b = run_lgso(bowl, cfg);
  REQUIRE(a.entries.size() == b.entries.size());
  for (std::size_t t = 0; t < a.entries.size(); ++t) {
    CHECK(a.entries[t].psi == b.entries[t].psi);
    CHECK(a.entries[t].objective_surr == b.entries[t].objective_surr);
  }

  auto path = std::filesystem::temp_directory_path() / "lgso_loop_trace.csv";
  write_trace(path, a, "hash=abc");
  std::string prov;
  auto back = read_trace(path, &prov);
  CHECK(prov == "hash=abc");
  REQUIRE(back.entries.size() == a.entries.size());
  for (std::size_t t = 0; t < a.entries.size(); ++t) {
    CHECK(back.entries[t].iteration == a.entries[t].iteration);
    CHECK(back.entries[t].cum_calls == a.entries[t].cum_calls);
    CHECK(back.entries[t].objective_sim == a.entries[t].objective_sim);
    CHECK(back.entries[t].objective_surr == a.entries[t].objective_surr);
    CHECK(back.entries[t].grad_norm == a.entries[t].grad_norm);
    CHECK(back.entries[t].psi == a.entries[t].psi);
  }
  std::filesystem::remove(path);
}

TEST_CASE("convergence rule stops a flat objective") {
  Flat flat;
  auto cfg = quick(flat);
  cfg.m_inputs = 20;
  cfg.max_iterations = 100;
  cfg.convergence_window = 3;
  cfg.convergence_tolerance = 0.5;
  auto trace = run_lgso(flat, cfg);
  CHECK(trace.stop == StopReason::kConverged);
  CHECK(trace.entries.size() == 6);
}

TEST_CASE("default configs per problem") {
  auto hump = default_config_for("three_hump");
  CHECK(hump.epsilon == 0.5);
  CHECK(hump.optimizer.lr == 0.1);
  auto rosen = default_config_for("rosenbrock");
  CHECK(rosen.epsilon == 0.2);
  CHECK(rosen.n_psi == 10);
  CHECK(rosen.initial_psi == std::vector<double>(10, 2.0));
  auto sub = default_config_for("submanifold_rosenbrock");
  sub.n_psi = 20;
  CHECK_NOTHROW(sub.validate(*sim::make_problem("submanifold_rosenbrock")));
  CHECK_THROWS_AS(default_config_for("nope"), ConfigError);

  Bowl bowl(0.0);
  auto bad = quick(bowl);
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(bad.validate(bowl), ConfigError);
  bad = quick(bowl);
  bad.initial_psi = {1.0, 2.0};
  CHECK_THROWS_AS(run_lgso(bowl, bad), ConfigError);
}

TEST_CASE("training failure retries once then stops with the partial trace") {
  Bowl bowl(3.0, 0.5);
  auto cfg = quick(bowl);
  cfg.m_inputs = 20;
  cfg.surrogate.learning_rate = 1e300;
  auto dir = std::filesystem::temp_directory_path() / "lgso_loop_fail";
  std::filesystem::remove_all(dir);
  LgsoHooks hooks;
  hooks.failure_dir = dir;
  sim::Simulator simulator(bowl, cfg.seed);
  auto trace = run_lgso(bowl, cfg, simulator, hooks);
  CHECK(trace.stop == StopReason::kFailed);
  CHECK(trace.entries.empty());
  CHECK(trace.failure.find("iteration 0") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "failed_training_0.csv"));
  std::filesystem::remove_all(dir);
}
