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
#include <span>
#include <vector>

#include "lgso/lgso_loop.hpp"

namespace lgso {

struct NumDiffConfig {
  double step = 0.1;           // probe offset h
  std::size_t n_eval = 100;    // simulator calls per probe
  AdamSettings optimizer;
  std::size_t max_iterations = 1000;
  std::size_t convergence_window = 20;
  double convergence_tolerance = 1e-3;
  std::uint64_t seed = 0;
  std::vector<double> initial_psi;

  void validate(const sim::Problem& problem) const;
};

/// Evaluates the objective at a probe point. `probe` numbers the probes of
/// one estimate: 2i for psi + h e_i, 2i + 1 for psi - h e_i.
using ProbeObjective = std::function<double(std::span<const double> psi, std::size_t probe)>;

struct CentralDifference {
  std::vector<double> gradient;
  std::vector<double> plus, minus;  // objective at psi +- h e_i
};

/// (f(psi + h e_i) - f(psi - h e_i)) / 2h per component.
CentralDifference central_difference(std::span<const double> psi, double h, const ProbeObjective& f);

/// Central differences of the simulator objective; every probe averages
/// n_eval fresh calls, 2 D n_eval calls in total. `tag` selects the random
/// streams: probe j uses simulator tag tag * 2D + j.
surrogate::GradEstimate numdiff_gradient(const sim::Problem& problem, std::span<const double> psi,
                                         const NumDiffConfig& config, sim::Simulator& simulator,
                                         std::uint64_t tag);

OptTrace run_numdiff(const sim::Problem& problem, const NumDiffConfig& config, sim::Simulator& simulator,
                     const std::function<void(const TraceEntry&)>& on_iteration = {});
OptTrace run_numdiff(const sim::Problem& problem, const NumDiffConfig& config);

struct ScoreFnConfig {
  std::size_t policy_samples = 10;  // S
  std::size_t n_eval = 100;         // simulator calls per policy sample
  double initial_sigma = 0.1;
  double baseline_decay = 0.9;
  AdamSettings optimizer;
  std::size_t max_iterations = 10000;
  std::size_t convergence_window = 20;
  double convergence_tolerance = 1e-3;
  std::uint64_t seed = 0;
  std::vector<double> initial_psi;

  void validate(const sim::Problem& problem) const;
};

/// Diagonal Gaussian over psi.
struct GaussianPolicy {
  std::vector<double> mean;
  std::vector<double> log_sigma;
};

struct ScoreGradient {
  std::vector<double> mean_grad;
  std::vector<double> log_sigma_grad;
  double objective = 0.0;  // average f over the draws
};

/// f at one policy draw; `sample` indexes the draw within the estimate.
using DrawObjective = std::function<double(std::span<const double> psi, std::size_t sample)>;

/// REINFORCE estimate of the gradient of E_policy[f] with respect to the
/// mean and the log standard deviation, centred by `baseline`.
ScoreGradient score_fn_gradient(const GaussianPolicy& policy, std::size_t samples, const DrawObjective& f,
                                double baseline, Rng& rng);
/// Same with f estimated from n_eval simulator calls per draw. Draw s uses
/// simulator tag tag * S + s.
ScoreGradient score_fn_gradient(const sim::Problem& problem, const GaussianPolicy& policy,
                                const ScoreFnConfig& config, double baseline, sim::Simulator& simulator,
                                std::uint64_t tag, Rng& rng);

/// Smallest standard deviation the policy may reach.
inline constexpr double kMinPolicySigma = 1e-6;

/// Optimizes the policy mean; the trace records the mean after each step.
OptTrace run_score_fn(const sim::Problem& problem, const ScoreFnConfig& config, sim::Simulator& simulator,
                      const std::function<void(const TraceEntry&)>& on_iteration = {});
OptTrace run_score_fn(const sim::Problem& problem, const ScoreFnConfig& config);

}  // namespace lgso
