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
#include <limits>

#include "lgso/diagnostics.hpp"
#include "lgso/table.hpp"

namespace lgso {

namespace {

std::ofstream open_table(const std::filesystem::path& path, const std::string& provenance) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "# " << provenance << '\n';
  return out;
}

}  // namespace

// --- oracle ---------------------------------------------------------------------

std::uint64_t oracle_tag(std::size_t coordinate, std::size_t block, std::size_t blocks) {
  return static_cast<std::uint64_t>(coordinate) * blocks + block;
}

OracleGradient oracle_gradient(const sim::Problem& problem, std::span<const double> psi, const OracleConfig& config) {
  problem.check_psi(psi);
  OracleGradient out;
  if (problem.has_analytic()) {
    out.gradient = problem.analytic_gradient(psi);
    out.standard_error.assign(psi.size(), 0.0);
    out.analytic = true;
    return out;
  }
  if (!problem.has_mc_oracle())
    throw ConfigError("no reference gradient for problem '" + std::string(problem.id()) + "'");
  if (!(config.step > 0.0)) throw ConfigError("oracle step must be positive");
  if (config.blocks < 2 || config.samples < config.blocks)
    throw ConfigError("oracle needs at least 2 blocks and one sample per block");

  sim::Simulator simulator(problem, derive_seed(config.seed, Stream::kOracle, {}), UINT64_MAX, config.parallelism);
  const std::size_t per_block = (config.samples + config.blocks - 1) / config.blocks;
  const std::size_t calls = std::max<std::size_t>(1, (per_block + problem.records_per_call() - 1) /
                                                         problem.records_per_call());
  out.gradient.assign(psi.size(), 0.0);
  out.standard_error.assign(psi.size(), 0.0);
  std::vector<double> probe(psi.begin(), psi.end());
  std::vector<double> diffs(config.blocks);
  for (std::size_t i = 0; i < psi.size(); ++i) {
    for (std::size_t b = 0; b < config.blocks; ++b) {
      const auto tag = oracle_tag(i, b, config.blocks);
      probe[i] = psi[i] + config.step;
      const double plus = simulator.estimate_objective(probe, calls, tag);
      probe[i] = psi[i] - config.step;
      const double minus = simulator.estimate_objective(probe, calls, tag);
      probe[i] = psi[i];
      diffs[b] = (plus - minus) / (2.0 * config.step);
    }
    double mean = 0.0;
    for (double d : diffs) mean += d;
    mean /= static_cast<double>(diffs.size());
    double var = 0.0;
    for (double d : diffs) var += (d - mean) * (d - mean);
    var /= static_cast<double>(diffs.size() - 1);
    out.gradient[i] = mean;
    out.standard_error[i] = std::sqrt(var / static_cast<double>(diffs.size()));
  }
  return out;
}

// --- bias -------------------------------------------------------------------------

BiasEntry aggregate_bias(std::vector<double> psi, std::vector<double> truth, std::vector<std::vector<double>> samples) {
  if (samples.size() < 2) throw ConfigError("bias estimate needs at least 2 repeats");
  const std::size_t d = truth.size();
  BiasEntry e;
  e.bias.assign(d, 0.0);
  e.variance.assign(d, 0.0);
  const double r = static_cast<double>(samples.size());
  for (const auto& s : samples) {
    if (s.size() != d)
      throw Error("gradient sample has " + std::to_string(s.size()) + " components, expected " + std::to_string(d));
    for (std::size_t i = 0; i < d; ++i) e.bias[i] += (truth[i] - s[i]) / r;
  }
  for (const auto& s : samples)
    for (std::size_t i = 0; i < d; ++i) {
      const double dev = truth[i] - s[i] - e.bias[i];
      e.variance[i] += dev * dev / (r - 1.0);
    }
  e.psi = std::move(psi);
  e.truth = std::move(truth);
  e.samples = std::move(samples);
  return e;
}

BiasEntry estimate_bias_variance(std::span<const double> psi, std::span<const double> truth, std::size_t repeats,
                                 const GradientSource& source) {
  if (repeats < 2) throw ConfigError("bias estimate needs at least 2 repeats");
  std::vector<std::vector<double>> samples;
  samples.reserve(repeats);
  for (std::size_t r = 0; r < repeats; ++r) samples.push_back(source(r));
  return aggregate_bias({psi.begin(), psi.end()}, {truth.begin(), truth.end()}, std::move(samples));
}

BiasEntry estimate_bias_variance(const sim::Problem& problem, std::span<const double> psi,
                                 std::span<const double> truth, const BiasConfig& config) {
  problem.check_psi(psi);
  if (truth.size() != psi.size()) throw Error("reference gradient and psi differ in length");
  const std::size_t n_psi = config.n_psi ? config.n_psi : problem.dim_psi();
  const double eps = config.epsilon > 0.0 ? config.epsilon : problem.default_epsilon();
  const std::size_t per_point = calls_per_point(problem, config.m_inputs);
  config.surrogate.validate();

  auto source = [&](std::size_t r) {
    const std::uint64_t ri = r;
    Rng lhs_rng = make_stream(config.seed, Stream::kBias, {ri, 0});
    const auto points = sampling::lhs_sample(psi, eps, n_psi, lhs_rng);
    diff::Matrix rows(static_cast<Eigen::Index>(n_psi * per_point), points.cols());
    for (Eigen::Index i = 0; i < points.rows(); ++i)
      rows.middleRows(i * static_cast<Eigen::Index>(per_point), static_cast<Eigen::Index>(per_point)).rowwise() =
          points.row(i);
    sim::Simulator simulator(problem, derive_seed(config.seed, Stream::kBias, {ri, 1}), UINT64_MAX,
                             config.parallelism);
    auto batch = simulator.run(rows, 0);
    sampling::RecordSet records{std::move(batch.psi), std::move(batch.x), std::move(batch.y),
                                std::vector<std::uint64_t>(rows.rows(), 0)};
    std::optional<surrogate::SurrogateModel> model;
    for (std::uint64_t attempt = 0; attempt < 2 && !model; ++attempt) {
      try {
        model = surrogate::train_surrogate(records, config.surrogate,
                                           derive_seed(config.seed, Stream::kBias, {ri, 2, attempt}),
                                           problem.conditioning_inputs());
      } catch (const surrogate::TrainingDiverged&) {
        if (attempt == 1) throw;
      }
    }
    Rng grad_rng = make_stream(config.seed, Stream::kBias, {ri, 3});
    return surrogate::surrogate_grad(*model, psi, config.k_grad, problem, grad_rng).gradient;
  };
  return estimate_bias_variance(psi, truth, config.repeats, source);
}

std::vector<BiasEntry> estimate_bias_path(const sim::Problem& problem, const std::vector<std::vector<double>>& path,
                                          const BiasConfig& config) {
  std::vector<BiasEntry> out;
  for (std::size_t t = 0; t < path.size(); ++t) {
    BiasConfig c = config;
    c.seed = derive_seed(config.seed, Stream::kBias, {1000 + t});
    const auto truth = oracle_gradient(problem, path[t], config.oracle).gradient;
    out.push_back(estimate_bias_variance(problem, path[t], truth, c));
  }
  return out;
}

void write_bias_report(const std::filesystem::path& path, const std::vector<BiasEntry>& entries,
                       const std::string& provenance) {
  auto out = open_table(path, provenance);
  out << "point,component,psi,truth,bias,variance,repeats\n";
  for (std::size_t t = 0; t < entries.size(); ++t) {
    const auto& e = entries[t];
    for (std::size_t i = 0; i < e.truth.size(); ++i)
      out << t << ',' << i << ',' << format_number(e.psi[i]) << ',' << format_number(e.truth[i]) << ','
          << format_number(e.bias[i]) << ',' << format_number(e.variance[i]) << ',' << e.repeats() << '\n';
  }
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

void write_bias_samples(const std::filesystem::path& path, const std::vector<BiasEntry>& entries,
                        const std::string& provenance) {
  auto out = open_table(path, provenance);
  out << "point,repeat";
  const std::size_t d = entries.empty() ? 0 : entries.front().truth.size();
  for (std::size_t i = 0; i < d; ++i) out << ",grad_" << i;
  out << '\n';
  for (std::size_t t = 0; t < entries.size(); ++t)
    for (std::size_t r = 0; r < entries[t].samples.size(); ++r) {
      out << t << ',' << r;
      for (double v : entries[t].samples[r]) out << ',' << format_number(v);
      out << '\n';
    }
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

// --- epsilon heuristic ---------------------------------------------------------------

EpsilonSuggestion suggest_epsilon(const sim::Problem& problem, std::span<const double> psi,
                                  std::span<const double> candidates, const EpsilonConfig& config) {
  problem.check_psi(psi);
  if (candidates.empty()) throw ConfigError("epsilon grid is empty");
  for (std::size_t i = 1; i < candidates.size(); ++i)
    if (!(candidates[i] > candidates[i - 1])) throw ConfigError("epsilon grid must be strictly ascending");
  if (config.samples < 2 || config.batch == 0) throw ConfigError("epsilon check needs samples >= 2 and batch >= 1");

  sim::Simulator simulator(problem, derive_seed(config.seed, Stream::kEpsilon, {}));
  const auto n = static_cast<Eigen::Index>(config.samples);
  const auto per = static_cast<Eigen::Index>(config.batch);
  // n objective values at one point, each over `batch` calls
  auto values = [&](std::span<const double> p, std::uint64_t tag) {
    diff::Matrix rows(n * per, static_cast<Eigen::Index>(p.size()));
    for (Eigen::Index c = 0; c < rows.cols(); ++c) rows.col(c).setConstant(p[static_cast<std::size_t>(c)]);
    const auto batch = simulator.run(rows, tag);
    const auto rec = static_cast<Eigen::Index>(problem.records_per_call()) * per;
    std::vector<double> v(config.samples);
    for (Eigen::Index s = 0; s < n; ++s)
      v[static_cast<std::size_t>(s)] =
          problem.objective_value(batch.y.middleRows(s * rec, rec), batch.x.middleRows(s * rec, rec));
    return v;
  };

  const auto centre = values(psi, 0);
  double mean = 0.0;
  for (double v : centre) mean += v;
  mean /= static_cast<double>(centre.size());
  double variance = 0.0;
  for (double v : centre) variance += (v - mean) * (v - mean);
  variance /= static_cast<double>(centre.size() - 1);

  EpsilonSuggestion out;
  std::vector<double> probe(psi.begin(), psi.end());
  for (double eps : candidates) {
    double spread = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
      probe[i] = psi[i] - eps;
      const auto lo = values(probe, 1 + 2 * i);
      probe[i] = psi[i] + eps;
      const auto hi = values(probe, 2 + 2 * i);
      probe[i] = psi[i];
      double axis = 0.0;
      for (std::size_t s = 0; s < lo.size(); ++s) axis += std::abs(lo[s] - hi[s]);
      spread += axis / static_cast<double>(lo.size());
    }
    spread /= static_cast<double>(psi.size());
    EpsilonCheck check{eps, spread, variance, spread > variance};
    out.checks.push_back(check);
    if (check.passes && !out.epsilon) out.epsilon = eps;
  }
  return out;
}

// --- evaluation and sweeps ------------------------------------------------------------

double evaluate_objective(const sim::Problem& problem, std::span<const double> psi, const EvalConfig& config) {
  problem.check_psi(psi);
  if (problem.has_analytic()) return problem.analytic_expected_objective(psi);
  if (config.samples == 0) throw ConfigError("objective evaluation needs at least one sample");
  const std::size_t per = problem.records_per_call();
  const std::size_t calls = std::max<std::size_t>(1, (config.samples + per - 1) / per);
  sim::Simulator simulator(problem, derive_seed(config.seed, Stream::kEvaluate, {}), UINT64_MAX, config.parallelism);
  return simulator.estimate_objective(psi, calls, 0);
}

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kLgso: return "lgso";
    case Method::kNumDiff: return "numdiff";
    case Method::kScoreFn: return "score_fn";
  }
  return "?";
}

Method parse_method(std::string_view s) {
  if (s == "lgso") return Method::kLgso;
  if (s == "numdiff") return Method::kNumDiff;
  if (s == "score_fn") return Method::kScoreFn;
  throw ConfigError("unknown method '" + std::string(s) + "' (expected lgso, numdiff or score_fn)");
}

std::vector<SweepCell> sweep_cells(const SweepGrid& grid, const SweepSetup& setup) {
  SweepCell base;
  switch (setup.method) {
    case Method::kLgso:
      base = {setup.lgso.optimizer.lr, setup.lgso.n_psi, setup.lgso.epsilon, 0.0};
      break;
    case Method::kNumDiff:
      base = {setup.numdiff.optimizer.lr, 0, 0.0, setup.numdiff.step};
      break;
    case Method::kScoreFn:
      base = {setup.score_fn.optimizer.lr, setup.score_fn.policy_samples, 0.0, 0.0};
      break;
  }
  auto or_base = [](const auto& axis, auto value) {
    using T = decltype(value);
    return axis.empty() ? std::vector<T>{value} : std::vector<T>(axis.begin(), axis.end());
  };
  const auto lrs = or_base(grid.lr, base.lr);
  const auto ns = or_base(grid.n_psi, base.n_psi);
  const auto eps = or_base(grid.epsilon, base.epsilon);
  const auto steps = or_base(grid.step, base.step);
  std::vector<SweepCell> cells;
  for (double lr : lrs)
    for (std::size_t n : ns)
      for (double e : eps)
        for (double h : steps) cells.push_back({lr, n, e, h});
  return cells;
}

SweepRow run_cell(const sim::Problem& problem, const SweepSetup& setup, const SweepCell& cell) {
  SweepRow row;
  row.cell = cell;
  try {
    const std::uint64_t seed = setup.method == Method::kLgso      ? setup.lgso.seed
                               : setup.method == Method::kNumDiff ? setup.numdiff.seed
                                                                  : setup.score_fn.seed;
    sim::Simulator simulator(problem, seed, setup.budget, setup.parallelism);
    OptTrace trace;
    switch (setup.method) {
      case Method::kLgso: {
        auto c = setup.lgso;
        c.optimizer.lr = cell.lr;
        c.n_psi = cell.n_psi;
        c.epsilon = cell.epsilon;
        trace = run_lgso(problem, c, simulator);
        break;
      }
      case Method::kNumDiff: {
        auto c = setup.numdiff;
        c.optimizer.lr = cell.lr;
        c.step = cell.step;
        trace = run_numdiff(problem, c, simulator);
        break;
      }
      case Method::kScoreFn: {
        auto c = setup.score_fn;
        c.optimizer.lr = cell.lr;
        c.policy_samples = cell.n_psi;
        trace = run_score_fn(problem, c, simulator);
        break;
      }
    }
    if (trace.stop == StopReason::kFailed) throw NumericError(trace.failure);
    EvalConfig eval = setup.eval;
    eval.seed = seed;
    row.final_objective = evaluate_objective(problem, trace.final_psi(), eval);
    row.calls = simulator.calls();
    row.converged = trace.stop == StopReason::kConverged;
  } catch (const std::exception& e) {
    row.final_objective = std::numeric_limits<double>::quiet_NaN();
    row.error = e.what();
  }
  return row;
}

std::vector<SweepRow> run_sweep(const sim::Problem& problem, const SweepGrid& grid, const SweepSetup& setup,
                                const std::function<void(const SweepRow&)>& on_cell) {
  std::vector<SweepRow> rows;
  for (const auto& cell : sweep_cells(grid, setup)) {
    rows.push_back(run_cell(problem, setup, cell));
    if (on_cell) on_cell(rows.back());
  }
  return rows;
}

void write_sweep(const std::filesystem::path& path, const std::vector<SweepRow>& rows, const std::string& provenance) {
  auto out = open_table(path, provenance);
  out << "lr,n_psi,epsilon,step,final_objective,calls,converged,error\n";
  for (const auto& r : rows) {
    std::string err = r.error;
    for (char& ch : err)
      if (ch == ',' || ch == '\n') ch = ' ';
    out << format_number(r.cell.lr) << ',' << r.cell.n_psi << ',' << format_number(r.cell.epsilon) << ','
        << format_number(r.cell.step) << ',' << format_number(r.final_objective) << ',' << r.calls << ','
        << (r.converged ? 1 : 0) << ',' << err << '\n';
  }
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace lgso
