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
#include <string>
#include <thread>
#include <vector>

#include "lgso/lgso.h"

namespace {

const char* kConfig = R"(problem = rosenbrock
method = numdiff
seed = 3
[numdiff]
n_eval = 10
max_iterations = 4
)";

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("lgso_capi_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string get(const lgso_config* c, const char* key) {
  size_t need = 0;
  REQUIRE(lgso_config_get(c, key, nullptr, 0, &need) == LGSO_BUFFER_TOO_SMALL);
  std::string s(need, '\0');
  REQUIRE(lgso_config_get(c, key, s.data(), s.size(), nullptr) == LGSO_OK);
  s.resize(need - 1);
  return s;
}

void count_progress(uint64_t, uint64_t, double, void* user) { ++*static_cast<int*>(user); }

void count_cells(size_t, double, const char*, void* user) { ++*static_cast<int*>(user); }

}  // namespace

TEST_CASE("version and problem listing") {
  CHECK(std::string(lgso_version()).size() > 0);
  REQUIRE(lgso_problem_count() == 5);
  CHECK(std::string(lgso_problem_id(0)) == "three_hump");
  CHECK(lgso_problem_id(5) == nullptr);
  CHECK(std::string(lgso_status_string(LGSO_BUDGET_EXHAUSTED)) == "budget exhausted");
}

TEST_CASE("config handles") {
  lgso_config* c = nullptr;
  REQUIRE(lgso_config_parse(kConfig, &c) == LGSO_OK);
  CHECK(get(c, "numdiff.n_eval") == "10");
  CHECK(get(c, "lgso.epsilon") == "0.2");
  uint64_t before = 0, after = 0;
  CHECK(lgso_config_hash(c, &before) == LGSO_OK);
  CHECK(lgso_config_set(c, "numdiff.step=0.3") == LGSO_OK);
  CHECK(get(c, "numdiff.step") == "0.3");
  CHECK(lgso_config_hash(c, &after) == LGSO_OK);
  CHECK(before != after);

  // a failed override leaves the handle unchanged
  CHECK(lgso_config_set(c, "numdiff.unknown=1") == LGSO_CONFIG_ERROR);
  CHECK(std::string(lgso_last_error()).find("unknown key 'numdiff.unknown'") != std::string::npos);
  CHECK(get(c, "numdiff.step") == "0.3");

  size_t need = 0;
  CHECK(lgso_config_serialize(c, nullptr, 0, &need) == LGSO_BUFFER_TOO_SMALL);
  std::string text(need, '\0');
  CHECK(lgso_config_serialize(c, text.data(), text.size(), nullptr) == LGSO_OK);
  lgso_config* again = nullptr;
  REQUIRE(lgso_config_parse(text.c_str(), &again) == LGSO_OK);
  uint64_t round = 0;
  lgso_config_hash(again, &round);
  CHECK(round == after);
  CHECK(lgso_config_validate(again) == LGSO_OK);
  lgso_config_free(again);
  lgso_config_free(c);
}

TEST_CASE("error reporting") {
  lgso_config* c = nullptr;
  CHECK(lgso_config_parse("seed = 1\nlgso.epsilon = -\n", &c) == LGSO_CONFIG_ERROR);
  CHECK(c == nullptr);
  CHECK(std::string(lgso_last_error()).find("<config>:2") != std::string::npos);
  CHECK(lgso_config_load("/nonexistent.cfg", &c) == LGSO_CONFIG_ERROR);
  CHECK(lgso_config_parse(nullptr, &c) == LGSO_INVALID_ARGUMENT);
  CHECK(lgso_config_set(nullptr, "a=b") == LGSO_INVALID_ARGUMENT);
  CHECK(lgso_run(nullptr, nullptr, nullptr, nullptr) == LGSO_INVALID_ARGUMENT);

  // error text is per thread
  std::string other;
  std::thread t([&] { other = lgso_last_error(); });
  t.join();
  CHECK(other.empty());
  CHECK(!std::string(lgso_last_error()).empty());

  REQUIRE(lgso_config_parse("lgso.n_psi = 0\n", &c) == LGSO_OK);
  CHECK(lgso_config_validate(c) == LGSO_CONFIG_ERROR);
  lgso_config_free(c);
}

TEST_CASE("runs through the C interface") {
  const auto dir = scratch("run");
  lgso_config* c = nullptr;
  REQUIRE(lgso_config_parse(kConfig, &c) == LGSO_OK);
  REQUIRE(lgso_config_set(c, ("output_dir=" + dir.string()).c_str()) == LGSO_OK);
  int calls = 0;
  lgso_result* r = nullptr;
  REQUIRE(lgso_run(c, count_progress, &calls, &r) == LGSO_OK);
  CHECK(calls == 4);
  CHECK(lgso_result_iterations(r) == 4);
  CHECK(lgso_result_calls(r) == 4 * 2 * 10 * 10);
  CHECK(std::string(lgso_result_stop_reason(r)) == "max_iterations");
  REQUIRE(lgso_result_dim(r) == 10);
  std::vector<double> psi(10);
  CHECK(lgso_result_final_psi(r, psi.data(), psi.size()) == LGSO_OK);
  CHECK(psi[0] < 2.0);
  CHECK(std::isfinite(lgso_result_final_objective(r)));
  CHECK(std::filesystem::exists(dir / "trace.csv"));
  CHECK(std::filesystem::path(lgso_result_output_dir(r)) == dir);
  lgso_result_free(r);

  REQUIRE(lgso_config_set(c, "budget=0") == LGSO_OK);
  CHECK(lgso_run(c, nullptr, nullptr, &r) == LGSO_BUDGET_EXHAUSTED);
  REQUIRE(r != nullptr);
  CHECK(lgso_result_iterations(r) == 0);
  lgso_result_free(r);

  const std::string trace = (dir / "trace.csv").string();
  const char* traces[] = {trace.c_str()};
  size_t rows = 0;
  CHECK(lgso_compare(traces, 1, (dir / "cmp.csv").string().c_str(), &rows) == LGSO_OK);
  CHECK(rows == 0);
  const char* missing[] = {"/nonexistent/trace.csv"};
  CHECK(lgso_compare(missing, 1, (dir / "cmp.csv").string().c_str(), &rows) == LGSO_CONFIG_ERROR);

  REQUIRE(lgso_config_set(c, "budget=unlimited") == LGSO_OK);
  REQUIRE(lgso_config_set(c, "sweep.lr=0.05,0.1") == LGSO_OK);
  REQUIRE(lgso_config_set(c, "sweep.step=0.1,0.2") == LGSO_OK);
  REQUIRE(lgso_config_set(c, "numdiff.max_iterations=1") == LGSO_OK);
  int cells = 0;
  CHECK(lgso_sweep(c, count_cells, &cells, &rows) == LGSO_OK);
  CHECK(rows == 4);
  CHECK(cells == 4);
  lgso_config_free(c);
  std::filesystem::remove_all(dir);
}

TEST_CASE("bias through the C interface") {
  const auto dir = scratch("bias");
  lgso_config* c = nullptr;
  REQUIRE(lgso_config_parse("problem = rosenbrock\nproblem.rosenbrock_dim = 2\nbias.repeats = 2\n"
                            "lgso.m_inputs = 20\nlgso.k_grad = 32\nsurrogate.epochs = 1\n"
                            "surrogate.generator_hidden = 8,8,8\nsurrogate.critic_hidden = 8,8\n"
                            "surrogate.critic_output = 8\n",
                            &c) == LGSO_OK);
  REQUIRE(lgso_config_set(c, ("output_dir=" + dir.string()).c_str()) == LGSO_OK);
  size_t points = 0;
  CHECK(lgso_bias(c, &points) == LGSO_OK);
  CHECK(points == 1);
  CHECK(std::filesystem::exists(dir / "bias_report.csv"));
  lgso_config_free(c);
  std::filesystem::remove_all(dir);
}
