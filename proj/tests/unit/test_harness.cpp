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

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "lgso/harness.hpp"

using namespace lgso;
using namespace lgso::harness;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("lgso_harness_" + name);
  std::filesystem::remove_all(p);
  return p;
}

// small and quick lgso settings on the hump
const char* kQuickLgso = R"(# quick lgso run
problem = three_hump
method = lgso
seed = 4
[lgso]
m_inputs = 20
k_grad = 64
max_iterations = 3
[surrogate]
generator_hidden = 16,16,16
critic_hidden = 16,16
critic_output = 16
epochs = 2
[eval]
samples = 500
)";

const char* kQuickNumdiff = R"(problem = rosenbrock
method = numdiff
seed = 2
numdiff.n_eval = 10
numdiff.max_iterations = 5
)";

}  // namespace

TEST_CASE("config parsing with sections, comments and overrides") {
  auto spec = parse_config(kQuickLgso, "quick.cfg", {"lgso.epsilon=0.25", "budget = 1000"});
  CHECK(spec.problem == "three_hump");
  CHECK(spec.method == Method::kLgso);
  CHECK(spec.seed == 4);
  CHECK(spec.lgso.seed == 4);
  CHECK(spec.lgso.m_inputs == 20);
  CHECK(spec.lgso.epsilon == 0.25);
  CHECK(spec.budget == 1000);
  CHECK(spec.lgso.surrogate.generator_hidden == std::vector<std::size_t>{16, 16, 16});
  CHECK(get_value(spec, "lgso.epsilon") == "0.25");

  // problem defaults
  auto rosen = parse_config("problem = rosenbrock\n");
  CHECK(rosen.lgso.epsilon == 0.2);
  CHECK(rosen.lgso.n_psi == 10);
  CHECK(rosen.lgso.initial_psi == std::vector<double>(10, 2.0));
  CHECK(rosen.lgso.optimizer.lr == 0.1);
  auto nonlin = parse_config("problem = nonlinear_submanifold_hump\n");
  CHECK(nonlin.lgso.initial_psi == std::vector<double>(40, 0.5));

  apply_override(spec, "surrogate.epochs=7");
  CHECK(spec.lgso.surrogate.epochs == 7);
}

TEST_CASE("config errors name the line and key") {
  auto message = [](const std::string& text, std::vector<std::string> overrides = {}) {
    try {
      parse_config(text, "bad.cfg", overrides);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message("method = lgso\nlgso.bogus = 1\n").find("bad.cfg:2: unknown key 'lgso.bogus'") != std::string::npos);
  CHECK(message("\n\nlgso.epsilon = wide\n").find("bad.cfg:3: lgso.epsilon") != std::string::npos);
  CHECK(message("just text\n").find("bad.cfg:1") != std::string::npos);
  CHECK(message("method = bock\n").find("unknown method") != std::string::npos);
  CHECK(message("problem = nowhere\n").find("nowhere") != std::string::npos);
  CHECK(message("", {"seed=-1"}).find("--set 1: seed") != std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/run.cfg"), ConfigError);
  auto spec = parse_config("lgso.n_psi = 0\n");
  CHECK_THROWS_AS(validate(spec), ConfigError);
}

TEST_CASE("config hash is stable across serialization") {
  auto spec = parse_config(kQuickLgso);
  const auto text = serialize(spec);
  auto again = parse_config(text);
  CHECK(serialize(again) == text);
  CHECK(config_hash(again) == config_hash(spec));

  auto moved = spec;
  moved.output_dir = "elsewhere";
  moved.parallelism = 4;
  CHECK(config_hash(moved) == config_hash(spec));
  auto changed = spec;
  apply_override(changed, "lgso.k_grad=65");
  CHECK(config_hash(changed) != config_hash(spec));
  CHECK(hash_hex(0xabcULL) == "0000000000000abc");
  CHECK(provenance(spec).rfind("lgso " + std::string(version()) + " config ", 0) == 0);
}

TEST_CASE("run writes trace, summary and plot data with provenance headers") {
  const auto dir = scratch("run");
  auto spec = parse_config(kQuickLgso, "quick", {"output_dir=" + dir.string(), "lgso.epsilon=0.5"});
  auto r = run(spec);
  CHECK(r.outcome == Outcome::kOk);
  CHECK(r.trace.entries.size() == 3);
  const std::string head = "# " + provenance(spec) + "\n";
  for (const auto& f : {r.trace_file, r.summary_file, r.plot_file}) {
    REQUIRE(std::filesystem::exists(f));
    CHECK(slurp(f).rfind(head, 0) == 0);
  }
  const auto summary = slurp(r.summary_file);
  CHECK(summary.find("config.lgso.epsilon = 0.5\n") != std::string::npos);
  CHECK(summary.find("total_calls = 120\n") != std::string::npos);
  CHECK(summary.find("config_hash = " + hash_hex(config_hash(spec))) != std::string::npos);
  const auto plot = slurp(r.plot_file);
  CHECK(plot.find("cum_calls,objective\n40,") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("same config gives byte-identical traces at any parallelism") {
  const auto a = scratch("det_a"), b = scratch("det_b"), c = scratch("det_c");
  for (const char* cfg : {kQuickLgso, kQuickNumdiff}) {
    run(parse_config(cfg, "x", {"output_dir=" + a.string()}));
    run(parse_config(cfg, "x", {"output_dir=" + b.string()}));
    run(parse_config(cfg, "x", {"output_dir=" + c.string(), "parallelism=3"}));
    const auto ta = slurp(a / "trace.csv");
    CHECK(ta == slurp(b / "trace.csv"));
    CHECK(ta == slurp(c / "trace.csv"));
    CHECK(slurp(a / "plot.csv") == slurp(c / "plot.csv"));
  }
  for (const auto& d : {a, b, c}) std::filesystem::remove_all(d);
}

TEST_CASE("zero budget stops before the first iteration") {
  const auto dir = scratch("budget");
  auto spec = parse_config(kQuickNumdiff, "x", {"output_dir=" + dir.string(), "budget=0"});
  auto r = run(spec);
  CHECK(r.outcome == Outcome::kBudgetExhausted);
  CHECK(r.trace.entries.empty());
  CHECK(r.calls == 0);
  const auto trace = slurp(r.trace_file);
  CHECK(trace == "# " + provenance(spec) + "\niteration,cum_calls,objective_sim,objective_surr,grad_norm,psi_0,psi_1,psi_2,"
                                          "psi_3,psi_4,psi_5,psi_6,psi_7,psi_8,psi_9\n");
  std::filesystem::remove_all(dir);
}

TEST_CASE("output directory environment override") {
  const auto dir = scratch("env");
  setenv("LGSO_OUTPUT_DIR", dir.string().c_str(), 1);
  auto spec = parse_config(kQuickNumdiff, "x", {"output_dir=/nonexistent/ignored"});
  CHECK(output_dir(spec) == dir);
  run(spec);
  unsetenv("LGSO_OUTPUT_DIR");
  CHECK(std::filesystem::exists(dir / "trace.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("compare aligns traces on a shared call grid") {
  const auto dir = scratch("compare");
  std::filesystem::create_directories(dir);
  OptTrace a, b;
  a.method = "lgso";
  a.initial_psi = {0.0};
  b = a;
  for (std::uint64_t t = 0; t < 3; ++t) a.entries.push_back({t, (t + 1) * 100, 10.0 - t, 0, 0, {0.0}, 0, {}});
  for (std::uint64_t t = 0; t < 2; ++t) b.entries.push_back({t, (t + 1) * 150, 5.0 - t, 0, 0, {0.0}, 0, {}});
  write_trace(dir / "a.csv", a, "p");
  write_trace(dir / "b.csv", b, "p");

  auto single = compare_traces({dir / "a.csv"});
  CHECK(single.calls == std::vector<std::uint64_t>{100, 200, 300});
  CHECK(single.objective[0] == std::vector<double>{10.0, 9.0, 8.0});

  auto both = compare_traces({dir / "a.csv", dir / "b.csv"});
  CHECK(both.calls == std::vector<std::uint64_t>{100, 150, 200, 300});
  CHECK(std::isnan(both.objective[1][0]));
  CHECK(both.objective[1][1] == 5.0);
  CHECK(both.objective[1][3] == 4.0);
  CHECK(both.objective[0][1] == 10.0);
  CHECK(std::is_sorted(both.calls.begin(), both.calls.end()));
  write_comparison(dir / "cmp.csv", both);
  const auto text = slurp(dir / "cmp.csv");
  CHECK(text.find("cum_calls,a,b\n100,10,nan\n150,10,5\n") != std::string::npos);

  std::ofstream(dir / "bad.csv") << "# x\niteration,calls,objective_sim,objective_surr,grad_norm\n";
  try {
    compare_traces({dir / "a.csv", dir / "bad.csv"});
    FAIL("expected a schema error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("'calls', expected 'cum_calls'") != std::string::npos);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("problem listing") {
  CHECK(sim::problem_ids().size() == 5);
}

TEST_CASE("bias and sweep commands") {
  const auto dir = scratch("diag");
  auto spec = parse_config(kQuickLgso, "x",
                           {"output_dir=" + dir.string(), "problem=rosenbrock", "problem.rosenbrock_dim=2",
                            "bias.repeats=2", "lgso.m_inputs=20", "surrogate.epochs=2", "surrogate.critic_output=16",
                            "surrogate.generator_hidden=16,16,16", "surrogate.critic_hidden=16,16"});
  auto entries = run_bias(spec);
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].repeats() == 2);
  CHECK(slurp(dir / "bias_report.csv").rfind("# " + provenance(spec), 0) == 0);
  CHECK(std::filesystem::exists(dir / "bias_samples.csv"));

  auto sweep = parse_config(kQuickNumdiff, "x",
                            {"output_dir=" + dir.string(), "sweep.lr=0.05,0.1", "sweep.step=0.1,0.2",
                             "numdiff.max_iterations=2"});
  auto rows = run_sweep_command(sweep);
  CHECK(rows.size() == 4);
  const auto table = slurp(dir / "sweep.csv");
  CHECK(std::count(table.begin(), table.end(), '\n') == 2 + 4);
  std::filesystem::remove_all(dir);
}
