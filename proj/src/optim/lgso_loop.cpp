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
#include <fstream>

#include "lgso/lgso_loop.hpp"

namespace lgso {

void LgsoConfig::validate(const sim::Problem& problem) const {
  if (n_psi == 0) throw ConfigError("lgso.n_psi must be at least 1");
  if (m_inputs == 0) throw ConfigError("lgso.m_inputs must be at least 1");
  if (k_grad == 0) throw ConfigError("lgso.k_grad must be at least 1");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("lgso.epsilon must be positive");
  if (!(optimizer.lr > 0.0)) throw ConfigError("lgso.lr must be positive");
  if (convergence_tolerance < 0.0) throw ConfigError("lgso.convergence_tolerance must be non-negative");
  if (!initial_psi.empty() && initial_psi.size() != problem.dim_psi())
    throw ConfigError("initial psi has " + std::to_string(initial_psi.size()) + " components, problem '" +
                      std::string(problem.id()) + "' needs " + std::to_string(problem.dim_psi()));
  surrogate.validate();
}

LgsoConfig default_config_for(const sim::Problem& problem) {
  LgsoConfig c;
  c.epsilon = problem.default_epsilon();
  c.n_psi = problem.dim_psi();
  c.initial_psi = problem.initial_psi();
  return c;
}

LgsoConfig default_config_for(std::string_view problem_id) {
  return default_config_for(*sim::make_problem(problem_id));
}

std::size_t calls_per_point(const sim::Problem& problem, std::size_t m_inputs) {
  const std::size_t per = problem.records_per_call();
  return per <= 1 ? m_inputs : std::max<std::size_t>(1, (m_inputs + per - 1) / per);
}

namespace {

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double d : v) s += d * d;
  return std::sqrt(s);
}

void dump_failure(const std::filesystem::path& dir, std::uint64_t iteration, const sampling::RecordSet& r,
                  const std::string& what) {
  if (dir.empty()) return;
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / ("failed_training_" + std::to_string(iteration) + ".csv"));
  out.precision(17);
  out << "# " << what << '\n';
  for (std::size_t i = 0; i < r.size(); ++i) {
    const auto ri = static_cast<Eigen::Index>(i);
    out << r.iteration[i];
    for (Eigen::Index j = 0; j < r.psi.cols(); ++j) out << ',' << r.psi(ri, j);
    for (Eigen::Index j = 0; j < r.x.cols(); ++j) out << ',' << r.x(ri, j);
    for (Eigen::Index j = 0; j < r.y.cols(); ++j) out << ',' << r.y(ri, j);
    out << '\n';
  }
}

}  // namespace

OptTrace run_lgso(const sim::Problem& problem, const LgsoConfig& config, sim::Simulator& simulator,
                  const LgsoHooks& hooks) {
  config.validate(problem);
  OptTrace trace;
  trace.method = "lgso";
  std::vector<double> psi = config.initial_psi.empty() ? problem.initial_psi() : config.initial_psi;
  problem.check_psi(psi);
  trace.initial_psi = psi;

  sampling::History history(problem.dim_psi(), problem.dim_x(), problem.dim_y());
  if (!hooks.warm_start.empty()) history.import_file(hooks.warm_start);
  diff::AdamState adam(config.optimizer.config());
  const std::size_t per_point = calls_per_point(problem, config.m_inputs);
  const std::size_t calls_per_iteration = config.n_psi * per_point;
  const auto d = static_cast<Eigen::Index>(problem.dim_psi());

  for (std::uint64_t t = 0; t < config.max_iterations; ++t) {
    if (!simulator.can_afford(calls_per_iteration)) {
      trace.stop = StopReason::kBudget;
      return trace;
    }
    // sample the neighbourhood and simulate
    Rng lhs_rng = make_stream(config.seed, Stream::kLhs, {t});
    const diff::Matrix points = sampling::lhs_sample(psi, config.epsilon, config.n_psi, lhs_rng);
    diff::Matrix rows(static_cast<Eigen::Index>(calls_per_iteration), d);
    for (Eigen::Index i = 0; i < points.rows(); ++i)
      rows.middleRows(i * static_cast<Eigen::Index>(per_point), static_cast<Eigen::Index>(per_point)).rowwise() =
          points.row(i);
    const auto batch = simulator.run(rows, t);
    history.append(batch.psi, batch.x, batch.y, t);

    TraceEntry e;
    e.iteration = t;
    e.cum_calls = simulator.calls();
    e.objective_sim = problem.objective_value(batch.y, batch.x);

    // train the local surrogate
    sampling::RecordSet train;
    if (config.reuse_history) {
      train = history.query_ball(psi, config.epsilon);
    } else {
      train = {batch.psi, batch.x, batch.y, std::vector<std::uint64_t>(static_cast<std::size_t>(batch.y.rows()), t)};
    }
    e.train_records = train.size();
    std::optional<surrogate::SurrogateModel> model;
    std::string failure;
    for (std::uint64_t attempt = 0; attempt < 2 && !model; ++attempt) {
      try {
        model = surrogate::train_surrogate(train, config.surrogate,
                                           derive_seed(config.seed, Stream::kSurrogateTrain, {t, attempt}),
                                           problem.conditioning_inputs());
      } catch (const surrogate::TrainingDiverged& err) {
        failure = err.what();
      }
    }
    if (!model) {
      dump_failure(hooks.failure_dir, t, train, failure);
      trace.stop = StopReason::kFailed;
      trace.failure = "surrogate training failed twice at iteration " + std::to_string(t) + ": " + failure;
      return trace;
    }
    if (!model->info.stats.empty()) e.monitor = model->info.stats.front();

    // gradient through the frozen surrogate and a step on psi
    Rng grad_rng = make_stream(config.seed, Stream::kSurrogateGrad, {t});
    const auto est = surrogate::surrogate_grad(*model, psi, config.k_grad, problem, grad_rng);
    e.objective_surr = est.objective;
    e.grad_norm = norm2(est.gradient);
    diff::adam_update(psi, est.gradient, adam, "psi");
    e.psi = psi;
    trace.entries.push_back(e);
    if (hooks.on_iteration) hooks.on_iteration(trace.entries.back());

    if (has_converged(trace.entries, config.convergence_window, config.convergence_tolerance)) {
      trace.stop = StopReason::kConverged;
      return trace;
    }
  }
  trace.stop = StopReason::kMaxIterations;
  return trace;
}

OptTrace run_lgso(const sim::Problem& problem, const LgsoConfig& config) {
  sim::Simulator simulator(problem, config.seed);
  return run_lgso(problem, config, simulator);
}

}  // namespace lgso
