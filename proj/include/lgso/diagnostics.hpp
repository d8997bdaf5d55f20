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

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lgso/baselines.hpp"
#include "lgso/lgso_loop.hpp"

namespace lgso {

// --- reference gradients ----------------------------------------------------

struct OracleConfig {
  double step = 0.05;                  // central difference offset
  std::size_t samples = 1'000'000;     // simulator calls per probe
  std::size_t blocks = 100;            // batches used for the standard error
  std::uint64_t seed = 0;
  unsigned parallelism = 1;
};

struct OracleGradient {
  std::vector<double> gradient;
  std::vector<double> standard_error;  // zero for closed forms
  bool analytic = false;
};

/// Exact gradient when the problem has one, otherwise central differences of
/// the expected objective with common random numbers for the +h and -h probes.
/// Throws ConfigError for problems with neither.
OracleGradient oracle_gradient(const sim::Problem& problem, std::span<const double> psi,
                               const OracleConfig& config = {});

/// Simulator tag used by block b of coordinate i; identical for both probes.
std::uint64_t oracle_tag(std::size_t coordinate, std::size_t block, std::size_t blocks);

// --- bias and variance of the surrogate gradient ------------------------------

struct BiasConfig {
  std::size_t repeats = 10;  // R
  std::size_t n_psi = 0;     // 0: dim psi
  std::size_t m_inputs = 100;
  std::size_t k_grad = 512;
  double epsilon = 0;        // 0: problem default
  surrogate::SurrogateConfig surrogate;
  OracleConfig oracle;
  std::uint64_t seed = 0;
  unsigned parallelism = 1;
};

struct BiasEntry {
  std::vector<double> psi;
  std::vector<double> truth;
  std::vector<std::vector<double>> samples;  // R surrogate gradients
  std::vector<double> bias;                  // mean of truth - sample
  std::vector<double> variance;              // unbiased, of truth - sample

  std::size_t repeats() const { return samples.size(); }
};

/// Pure aggregation of stored gradient samples against a reference.
BiasEntry aggregate_bias(std::vector<double> psi, std::vector<double> truth,
                         std::vector<std::vector<double>> samples);

/// Gradient estimate number r at psi.
using GradientSource = std::function<std::vector<double>(std::size_t r)>;

BiasEntry estimate_bias_variance(std::span<const double> psi, std::span<const double> truth, std::size_t repeats,
                                 const GradientSource& source);
/// R independent surrogates, each trained on fresh LHS points and fresh
/// simulator draws around psi, differentiated at psi.
BiasEntry estimate_bias_variance(const sim::Problem& problem, std::span<const double> psi,
                                 std::span<const double> truth, const BiasConfig& config);
/// As above with the oracle gradient as reference, at every point of a path.
std::vector<BiasEntry> estimate_bias_path(const sim::Problem& problem, const std::vector<std::vector<double>>& path,
                                          const BiasConfig& config);

/// Long table: point, component, psi, truth, bias, variance, repeats.
void write_bias_report(const std::filesystem::path& path, const std::vector<BiasEntry>& entries,
                       const std::string& provenance);
/// One row per surrogate gradient: point, repeat, grad_0..grad_{D-1}.
void write_bias_samples(const std::filesystem::path& path, const std::vector<BiasEntry>& entries,
                        const std::string& provenance);

// --- neighbourhood size heuristic --------------------------------------------

struct EpsilonConfig {
  std::size_t samples = 1000;  // paired evaluations per axis and per side
  std::size_t batch = 1;       // simulator calls behind one objective value
  std::uint64_t seed = 0;
};

struct EpsilonCheck {
  double epsilon = 0.0;
  double spread = 0.0;    // mean over axes of E|R(psi - eps e_i) - R(psi + eps e_i)|
  double variance = 0.0;  // Var R at psi
  bool passes = false;
};

struct EpsilonSuggestion {
  std::optional<double> epsilon;  // empty when no candidate passes
  std::vector<EpsilonCheck> checks;
};

/// Smallest candidate with spread > variance. Candidates must be ascending.
EpsilonSuggestion suggest_epsilon(const sim::Problem& problem, std::span<const double> psi,
                                  std::span<const double> candidates, const EpsilonConfig& config = {});

// --- objective evaluation and sweeps -----------------------------------------

struct EvalConfig {
  std::size_t samples = 10000;
  std::uint64_t seed = 0;
  unsigned parallelism = 1;
};

/// E[R] at psi: the closed form when there is one, otherwise the objective of
/// `samples` fresh simulator calls.
double evaluate_objective(const sim::Problem& problem, std::span<const double> psi, const EvalConfig& config = {});

enum class Method { kLgso, kNumDiff, kScoreFn };
std::string_view method_name(Method m);
Method parse_method(std::string_view s);

struct SweepGrid {
  std::vector<double> lr;
  std::vector<std::size_t> n_psi;  // psi samples (lgso) or policy samples (score_fn)
  std::vector<double> epsilon;
  std::vector<double> step;        // numdiff offset
};

struct SweepSetup {
  Method method = Method::kLgso;
  LgsoConfig lgso;
  NumDiffConfig numdiff;
  ScoreFnConfig score_fn;
  std::uint64_t budget = UINT64_MAX;
  unsigned parallelism = 1;
  EvalConfig eval;
};

struct SweepCell {
  double lr = 0.0;
  std::size_t n_psi = 0;
  double epsilon = 0.0;
  double step = 0.0;
};

struct SweepRow {
  SweepCell cell;
  double final_objective = 0.0;
  std::uint64_t calls = 0;
  bool converged = false;
  std::string error;  // empty on success
};

/// Cells in row-major order over (lr, n_psi, epsilon, step). Empty axes hold
/// the setup's own value.
std::vector<SweepCell> sweep_cells(const SweepGrid& grid, const SweepSetup& setup);
/// Runs one cell with the setup's seed.
SweepRow run_cell(const sim::Problem& problem, const SweepSetup& setup, const SweepCell& cell);
std::vector<SweepRow> run_sweep(const sim::Problem& problem, const SweepGrid& grid, const SweepSetup& setup,
                                const std::function<void(const SweepRow&)>& on_cell = {});
void write_sweep(const std::filesystem::path& path, const std::vector<SweepRow>& rows, const std::string& provenance);

}  // namespace lgso
