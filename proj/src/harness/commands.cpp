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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "lgso/harness.hpp"
#include "lgso/table.hpp"

namespace lgso::harness {

namespace {

std::ofstream open_output(const std::filesystem::path& path, const std::string& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "# " << header << '\n';
  return out;
}

std::filesystem::path prepare_dir(const RunSpec& spec) {
  auto dir = output_dir(spec);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

void write_summary(const std::filesystem::path& path, const RunSpec& spec, const RunResult& r) {
  auto out = open_output(path, provenance(spec));
  const double last_sim =
      r.trace.entries.empty() ? std::numeric_limits<double>::quiet_NaN() : r.trace.entries.back().objective_sim;
  std::string psi;
  for (std::size_t i = 0; i < r.final_psi.size(); ++i) psi += (i ? "," : "") + format_number(r.final_psi[i]);
  out << "method = " << r.trace.method << '\n'
      << "problem = " << spec.problem << '\n'
      << "stop = " << stop_reason_name(r.trace.stop) << '\n'
      << "iterations = " << r.trace.entries.size() << '\n'
      << "total_calls = " << r.calls << '\n'
      << "final_objective = " << format_number(r.final_objective) << '\n'
      << "final_objective_sim = " << format_number(last_sim) << '\n'
      << "final_psi = " << psi << '\n'
      << "wall_seconds = " << format_number(std::round(r.wall_seconds * 1000.0) / 1000.0) << '\n'
      << "config_hash = " << hash_hex(r.hash) << '\n'
      << "version = " << version() << '\n';
  if (!r.trace.failure.empty()) out << "failure = " << r.trace.failure << '\n';
  for (const auto& w : r.trace.warnings) out << "warning = " << w << '\n';
  out << "# effective configuration\n";
  std::istringstream cfg(serialize(spec));
  for (std::string line; std::getline(cfg, line);) out << "config." << line << '\n';
}

void write_plot(const std::filesystem::path& path, const RunSpec& spec, const OptTrace& trace) {
  auto out = open_output(path, provenance(spec));
  out << "cum_calls,objective\n";
  for (const auto& e : trace.entries) out << e.cum_calls << ',' << format_number(e.objective_sim) << '\n';
}

}  // namespace

SweepSetup sweep_setup(const RunSpec& spec) {
  SweepSetup s;
  s.method = spec.method;
  s.lgso = spec.lgso;
  s.numdiff = spec.numdiff;
  s.score_fn = spec.score_fn;
  s.budget = spec.budget;
  s.parallelism = spec.parallelism;
  s.eval = spec.eval;
  return s;
}

RunResult execute(const RunSpec& spec, const Progress& progress) {
  validate(spec);
  auto problem = sim::make_problem(spec.problem, spec.problem_options);
  const auto start = std::chrono::steady_clock::now();
  sim::Simulator simulator(*problem, spec.seed, spec.budget, spec.parallelism);
  RunResult r;
  switch (spec.method) {
    case Method::kLgso: {
      LgsoHooks hooks;
      hooks.on_iteration = progress;
      hooks.failure_dir = output_dir(spec);
      r.trace = run_lgso(*problem, spec.lgso, simulator, hooks);
      break;
    }
    case Method::kNumDiff: r.trace = run_numdiff(*problem, spec.numdiff, simulator, progress); break;
    case Method::kScoreFn: r.trace = run_score_fn(*problem, spec.score_fn, simulator, progress); break;
  }
  r.final_psi = r.trace.final_psi();
  r.final_objective = evaluate_objective(*problem, r.final_psi, spec.eval);
  r.calls = simulator.calls();
  r.hash = config_hash(spec);
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.outcome = r.trace.stop == StopReason::kBudget   ? Outcome::kBudgetExhausted
              : r.trace.stop == StopReason::kFailed ? Outcome::kRuntimeError
                                                    : Outcome::kOk;
  return r;
}

RunResult run(const RunSpec& spec, const Progress& progress) {
  validate(spec);
  const auto dir = prepare_dir(spec);
  auto r = execute(spec, progress);
  r.trace_file = dir / "trace.csv";
  r.summary_file = dir / "summary.txt";
  r.plot_file = dir / "plot.csv";
  write_trace(r.trace_file, r.trace, provenance(spec));
  write_summary(r.summary_file, spec, r);
  write_plot(r.plot_file, spec, r.trace);
  return r;
}

Comparison compare_traces(const std::vector<std::filesystem::path>& traces) {
  if (traces.empty()) throw ConfigError("compare needs at least one trace file");
  Comparison c;
  std::vector<OptTrace> loaded;
  std::set<std::uint64_t> grid;
  for (const auto& p : traces) {
    loaded.push_back(read_trace(p));
    for (const auto& e : loaded.back().entries) grid.insert(e.cum_calls);
    std::string label = p.stem().string();
    if (std::find(c.labels.begin(), c.labels.end(), label) != c.labels.end())
      label += "_" + std::to_string(c.labels.size());
    c.labels.push_back(label);
  }
  c.calls.assign(grid.begin(), grid.end());
  for (const auto& t : loaded) {
    std::vector<double> col(c.calls.size(), std::numeric_limits<double>::quiet_NaN());
    std::size_t k = 0;
    double last = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t row = 0; row < c.calls.size(); ++row) {
      while (k < t.entries.size() && t.entries[k].cum_calls <= c.calls[row]) last = t.entries[k++].objective_sim;
      col[row] = last;
    }
    c.objective.push_back(std::move(col));
  }
  return c;
}

void write_comparison(const std::filesystem::path& path, const Comparison& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& l : c.labels)
    for (unsigned char ch : l + "\n") {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
  auto out = open_output(path, "lgso " + std::string(version()) + " compare " + hash_hex(h));
  out << "cum_calls";
  for (const auto& l : c.labels) out << ',' << l;
  out << '\n';
  for (std::size_t row = 0; row < c.calls.size(); ++row) {
    out << c.calls[row];
    for (const auto& col : c.objective) out << ',' << format_number(col[row]);
    out << '\n';
  }
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::vector<BiasEntry> run_bias(const RunSpec& spec) {
  validate(spec);
  auto problem = sim::make_problem(spec.problem, spec.problem_options);
  std::vector<std::vector<double>> points = spec.bias.points;
  if (!spec.bias.trace.empty()) {
    const auto t = read_trace(spec.bias.trace);
    for (std::size_t i = 0; i < t.entries.size(); i += spec.bias.stride) points.push_back(t.entries[i].psi);
  }
  if (points.empty()) points.push_back(spec.lgso.initial_psi.empty() ? problem->initial_psi() : spec.lgso.initial_psi);
  for (const auto& p : points)
    if (p.size() != problem->dim_psi()) throw ConfigError("bias point dimension does not match the problem");

  BiasConfig cfg;
  cfg.repeats = spec.bias.repeats;
  cfg.n_psi = spec.lgso.n_psi;
  cfg.m_inputs = spec.lgso.m_inputs;
  cfg.k_grad = spec.lgso.k_grad;
  cfg.epsilon = spec.lgso.epsilon;
  cfg.surrogate = spec.lgso.surrogate;
  cfg.oracle.samples = spec.bias.oracle_samples;
  cfg.oracle.step = spec.bias.oracle_step;
  cfg.oracle.seed = spec.seed;
  cfg.oracle.parallelism = spec.parallelism;
  cfg.seed = spec.seed;
  cfg.parallelism = spec.parallelism;
  auto entries = estimate_bias_path(*problem, points, cfg);
  const auto dir = prepare_dir(spec);
  write_bias_report(dir / "bias_report.csv", entries, provenance(spec));
  write_bias_samples(dir / "bias_samples.csv", entries, provenance(spec));
  return entries;
}

std::vector<SweepRow> run_sweep_command(const RunSpec& spec, const std::function<void(const SweepRow&)>& on_cell) {
  validate(spec);
  auto problem = sim::make_problem(spec.problem, spec.problem_options);
  auto rows = run_sweep(*problem, spec.sweep, sweep_setup(spec), on_cell);
  const auto dir = prepare_dir(spec);
  write_sweep(dir / "sweep.csv", rows, provenance(spec));
  return rows;
}

}  // namespace lgso::harness
