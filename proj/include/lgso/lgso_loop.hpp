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

#include <functional>

#include "lgso/sampling.hpp"
#include "lgso/simulators.hpp"
#include "lgso/surrogate.hpp"
#include "lgso/trace.hpp"

namespace lgso {

struct AdamSettings {
  double lr = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  diff::AdamConfig config() const { return {lr, beta1, beta2, eps}; }
};

struct LgsoConfig {
  std::size_t n_psi = 2;           // psi points per iteration
  std::size_t m_inputs = 100;      // inputs per psi point
  std::size_t k_grad = 512;        // Monte Carlo samples for the gradient
  double epsilon = 0.5;            // neighbourhood half-width
  AdamSettings optimizer;
  std::size_t max_iterations = 1000;
  std::size_t convergence_window = 20;  // 0 disables the rule
  double convergence_tolerance = 1e-3;
  bool reuse_history = true;
  surrogate::SurrogateConfig surrogate;
  std::uint64_t seed = 0;
  std::vector<double> initial_psi;  // empty: the problem's default

  void validate(const sim::Problem& problem) const;
};

/// Defaults for a problem: its recommended epsilon and initial point, and one
/// psi sample per parameter dimension.
LgsoConfig default_config_for(const sim::Problem& problem);
LgsoConfig default_config_for(std::string_view problem_id);

struct LgsoHooks {
  std::function<void(const TraceEntry&)> on_iteration;
  /// Directory for a snapshot of the failed training set when training diverges twice.
  std::filesystem::path failure_dir;
  /// History records imported before the first iteration.
  std::filesystem::path warm_start;
};

/// Runs the optimizer, drawing every simulator call through `simulator`.
/// Stops at max_iterations, on convergence, or when the next iteration would
/// exceed the simulator's budget.
OptTrace run_lgso(const sim::Problem& problem, const LgsoConfig& config, sim::Simulator& simulator,
                  const LgsoHooks& hooks = {});
/// As above with an unbounded simulator seeded from the config.
OptTrace run_lgso(const sim::Problem& problem, const LgsoConfig& config);

/// Simulator calls spent on one psi point: M for single-record problems,
/// enough calls to cover M records otherwise.
std::size_t calls_per_point(const sim::Problem& problem, std::size_t m_inputs);

}  // namespace lgso
