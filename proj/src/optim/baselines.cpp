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

#include <cmath>
#include <limits>

#include "lgso/baselines.hpp"

namespace lgso {

namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double d : v) s += d * d;
  return std::sqrt(s);
}

void check_common(const sim::Problem& problem, std::size_t n_eval, const AdamSettings& opt,
                  const std::vector<double>& initial, std::string_view section) {
  const std::string s(section);
  if (n_eval == 0) throw ConfigError(s + ".n_eval must be at least 1");
  if (!(opt.lr > 0.0)) throw ConfigError(s + ".lr must be positive");
  if (!initial.empty() && initial.size() != problem.dim_psi())
    throw ConfigError("initial psi has " + std::to_string(initial.size()) + " components, problem '" +
                      std::string(problem.id()) + "' needs " + std::to_string(problem.dim_psi()));
}

}  // namespace

void NumDiffConfig::validate(const sim::Problem& problem) const {
  if (!(step > 0.0) || !std::isfinite(step)) throw ConfigError("numdiff.step must be positive");
  check_common(problem, n_eval, optimizer, initial_psi, "numdiff");
}

void ScoreFnConfig::validate(const sim::Problem& problem) const {
  if (policy_samples < 2) throw ConfigError("score_fn.policy_samples must be at least 2");
  if (!(initial_sigma > 0.0)) throw ConfigError("score_fn.initial_sigma must be positive");
  if (baseline_decay < 0.0 || baseline_decay >= 1.0) throw ConfigError("score_fn.baseline_decay must lie in [0, 1)");
  check_common(problem, n_eval, optimizer, initial_psi, "score_fn");
}

CentralDifference central_difference(std::span<const double> psi, double h, const ProbeObjective& f) {
  if (!(h > 0.0)) throw ConfigError("central difference step must be positive");
  CentralDifference out;
  const std::size_t d = psi.size();
  out.gradient.resize(d);
  out.plus.resize(d);
  out.minus.resize(d);
  std::vector<double> probe(psi.begin(), psi.end());
  for (std::size_t i = 0; i < d; ++i) {
    probe[i] = psi[i] + h;
    out.plus[i] = f(probe, 2 * i);
    probe[i] = psi[i] - h;
    out.minus[i] = f(probe, 2 * i + 1);
    probe[i] = psi[i];
    if (!std::isfinite(out.plus[i]) || !std::isfinite(out.minus[i]))
      throw NumericError("non-finite objective at probe " + std::to_string(i) + " of the central difference");
    out.gradient[i] = (out.plus[i] - out.minus[i]) / (2.0 * h);
  }
  return out;
}

surrogate::GradEstimate numdiff_gradient(const sim::Problem& problem, std::span<const double> psi,
                                         const NumDiffConfig& config, sim::Simulator& simulator,
                                         std::uint64_t tag) {
  const std::uint64_t probes = 2 * psi.size();
  auto cd = central_difference(psi, config.step, [&](std::span<const double> p, std::size_t j) {
    return simulator.estimate_objective(p, config.n_eval, tag * probes + j);
  });
  (void)problem;
  surrogate::GradEstimate g;
  g.gradient = std::move(cd.gradient);
  g.samples = probes * config.n_eval;
  double sum = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) sum += cd.plus[i] + cd.minus[i];
  g.objective = sum / static_cast<double>(probes);
  return g;
}

OptTrace run_numdiff(const sim::Problem& problem, const NumDiffConfig& config, sim::Simulator& simulator,
                     const std::function<void(const TraceEntry&)>& on_iteration) {
  config.validate(problem);
  OptTrace trace;
  trace.method = "numdiff";
  std::vector<double> psi = config.initial_psi.empty() ? problem.initial_psi() : config.initial_psi;
  problem.check_psi(psi);
  trace.initial_psi = psi;
  diff::AdamState adam(config.optimizer.config());
  const std::uint64_t per_iteration = 2 * psi.size() * config.n_eval;

  for (std::uint64_t t = 0; t < config.max_iterations; ++t) {
    if (!simulator.can_afford(per_iteration)) {
      trace.stop = StopReason::kBudget;
      return trace;
    }
    const auto g = numdiff_gradient(problem, psi, config, simulator, t);
    TraceEntry e;
    e.iteration = t;
    e.cum_calls = simulator.calls();
    e.objective_sim = g.objective;
    e.objective_surr = std::numeric_limits<double>::quiet_NaN();
    e.grad_norm = norm2(g.gradient);
    diff::adam_update(psi, g.gradient, adam, "psi");
    e.psi = psi;
    trace.entries.push_back(e);
    if (on_iteration) on_iteration(trace.entries.back());
    if (has_converged(trace.entries, config.convergence_window, config.convergence_tolerance)) {
      trace.stop = StopReason::kConverged;
      return trace;
    }
  }
  trace.stop = StopReason::kMaxIterations;
  return trace;
}

OptTrace run_numdiff(const sim::Problem& problem, const NumDiffConfig& config) {
  sim::Simulator simulator(problem, config.seed);
  return run_numdiff(problem, config, simulator);
}

ScoreGradient score_fn_gradient(const GaussianPolicy& policy, std::size_t samples, const DrawObjective& f,
                                double baseline, Rng& rng) {
  if (samples < 2) throw ConfigError("score function estimate needs at least 2 samples");
  const std::size_t d = policy.mean.size();
  if (policy.log_sigma.size() != d) throw Error("policy mean and log sigma differ in length");
  std::vector<std::vector<double>> noise(samples, std::vector<double>(d));
  std::vector<double> values(samples);
  std::vector<double> draw(d);
  double total = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t i = 0; i < d; ++i) {
      noise[s][i] = std_normal(rng);
      draw[i] = policy.mean[i] + std::exp(policy.log_sigma[i]) * noise[s][i];
    }
    values[s] = f(draw, s);
    if (!std::isfinite(values[s])) throw NumericError("non-finite objective at policy draw " + std::to_string(s));
    total += values[s];
  }
  ScoreGradient out;
  out.objective = total / static_cast<double>(samples);
  if (!std::isfinite(baseline)) baseline = out.objective;
  out.mean_grad.assign(d, 0.0);
  out.log_sigma_grad.assign(d, 0.0);
  // d/dmu log N = eps / sigma, d/dlog sigma log N = eps^2 - 1 with eps the unit draw
  for (std::size_t s = 0; s < samples; ++s) {
    const double adv = values[s] - baseline;
    for (std::size_t i = 0; i < d; ++i) {
      const double e = noise[s][i];
      out.mean_grad[i] += adv * e / std::exp(policy.log_sigma[i]);
      out.log_sigma_grad[i] += adv * (e * e - 1.0);
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    out.mean_grad[i] /= static_cast<double>(samples);
    out.log_sigma_grad[i] /= static_cast<double>(samples);
  }
  return out;
}

ScoreGradient score_fn_gradient(const sim::Problem& problem, const GaussianPolicy& policy,
                                const ScoreFnConfig& config, double baseline, sim::Simulator& simulator,
                                std::uint64_t tag, Rng& rng) {
  (void)problem;
  const std::uint64_t s_count = config.policy_samples;
  return score_fn_gradient(
      policy, config.policy_samples,
      [&](std::span<const double> psi, std::size_t s) {
        return simulator.estimate_objective(psi, config.n_eval, tag * s_count + s);
      },
      baseline, rng);
}

OptTrace run_score_fn(const sim::Problem& problem, const ScoreFnConfig& config, sim::Simulator& simulator,
                      const std::function<void(const TraceEntry&)>& on_iteration) {
  config.validate(problem);
  OptTrace trace;
  trace.method = "score_fn";
  GaussianPolicy policy;
  policy.mean = config.initial_psi.empty() ? problem.initial_psi() : config.initial_psi;
  problem.check_psi(policy.mean);
  trace.initial_psi = policy.mean;
  const std::size_t d = policy.mean.size();
  policy.log_sigma.assign(d, std::log(config.initial_sigma));
  const double log_floor = std::log(kMinPolicySigma);

  // mean and log sigma share one Adam state
  std::vector<double> params(2 * d);
  std::vector<double> grads(2 * d);
  diff::AdamState adam(config.optimizer.config());
  double baseline = std::numeric_limits<double>::quiet_NaN();
  const std::uint64_t per_iteration = config.policy_samples * config.n_eval;
  bool warned = false;

  for (std::uint64_t t = 0; t < config.max_iterations; ++t) {
    if (!simulator.can_afford(per_iteration)) {
      trace.stop = StopReason::kBudget;
      return trace;
    }
    Rng rng = make_stream(config.seed, Stream::kPolicy, {t});
    const auto g = score_fn_gradient(problem, policy, config, baseline, simulator, t, rng);
    baseline = std::isfinite(baseline) ? config.baseline_decay * baseline + (1.0 - config.baseline_decay) * g.objective
                                       : g.objective;
    for (std::size_t i = 0; i < d; ++i) {
      params[i] = policy.mean[i];
      params[d + i] = policy.log_sigma[i];
      grads[i] = g.mean_grad[i];
      grads[d + i] = g.log_sigma_grad[i];
    }
    diff::adam_update(params, grads, adam, "policy");
    for (std::size_t i = 0; i < d; ++i) {
      policy.mean[i] = params[i];
      policy.log_sigma[i] = params[d + i];
      if (policy.log_sigma[i] < log_floor) {
        policy.log_sigma[i] = log_floor;
        if (!warned) {
          trace.warnings.push_back("policy sigma clamped to " + std::to_string(kMinPolicySigma) + " at iteration " +
                                   std::to_string(t));
          warned = true;
        }
      }
    }
    TraceEntry e;
    e.iteration = t;
    e.cum_calls = simulator.calls();
    e.objective_sim = g.objective;
    e.objective_surr = std::numeric_limits<double>::quiet_NaN();
    e.grad_norm = norm2(g.mean_grad);
    e.psi = policy.mean;
    trace.entries.push_back(e);
    if (on_iteration) on_iteration(trace.entries.back());
    if (has_converged(trace.entries, config.convergence_window, config.convergence_tolerance)) {
      trace.stop = StopReason::kConverged;
      return trace;
    }
  }
  trace.stop = StopReason::kMaxIterations;
  return trace;
}

OptTrace run_score_fn(const sim::Problem& problem, const ScoreFnConfig& config) {
  sim::Simulator simulator(problem, config.seed);
  return run_score_fn(problem, config, simulator);
}

}  // namespace lgso
