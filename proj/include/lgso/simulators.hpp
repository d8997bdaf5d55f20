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

// Stochastic benchmark simulators. A Problem describes one black-box
// simulator: how to draw its stochastic inputs x ~ q(x), how to produce an
// outcome y from (psi, x), and the objective R over a batch of outcomes.
// Optimizers never see a Problem directly; they go through Simulator, which
// owns the call counter and the budget.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lgso/diffcore.hpp"
#include "lgso/rng.hpp"

namespace lgso::sim {

using diff::Matrix;

/// One (psi, x, y) training triple.
struct SimRecord {
  std::vector<double> psi;
  std::vector<double> x;
  std::vector<double> y;
  std::uint64_t iteration = 0;
};

class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string_view id() const = 0;
  virtual std::size_t dim_psi() const = 0;
  virtual std::size_t dim_x() const = 0;
  virtual std::size_t dim_y() const { return 1; }
  /// Leading input columns that carry information about the output.
  virtual std::size_t conditioning_inputs() const { return dim_x(); }

  /// Draws x ~ q(x) into `x` (length dim_x()).
  virtual void sample_input(Rng& rng, std::span<double> x) const = 0;
  /// One simulator evaluation. Uses only (psi, x, rng).
  virtual void simulate(std::span<const double> psi, std::span<const double> x, Rng& rng,
                        std::span<double> y) const = 0;
  /// Builds R over a batch: y is n x dim_y, x is n x dim_x. Returns a scalar node.
  virtual diff::NodeId objective(diff::Graph& g, diff::NodeId y, diff::NodeId x) const = 0;

  virtual bool has_analytic() const { return false; }
  /// True when a Monte Carlo gradient of E[R] is a usable reference.
  virtual bool has_mc_oracle() const { return false; }
  /// E[R] as a closed form of psi. Throws for problems without one.
  virtual double analytic_expected_objective(std::span<const double> psi) const;
  virtual std::vector<double> analytic_gradient(std::span<const double> psi) const;

  /// Records produced by one simulator call. Toys produce one; a problem
  /// whose natural unit is a pass over a dataset produces one per row.
  virtual std::size_t records_per_call() const { return 1; }
  /// One call: fills `x` and `y` with records_per_call() rows.
  virtual void simulate_call(std::span<const double> psi, Rng& rng, Matrix& x, Matrix& y) const;

  virtual double default_epsilon() const = 0;
  virtual std::vector<double> initial_psi() const = 0;

  /// Evaluates the objective on concrete batches.
  double objective_value(const Matrix& y, const Matrix& x) const;
  void check_psi(std::span<const double> psi) const;
};

struct ProblemOptions {
  std::size_t rosenbrock_dim = 10;
  std::uint64_t mixing_seed = 1337;
  std::filesystem::path boston_csv;  // empty: bundled data directory
};

/// Problem ids in listing order.
std::vector<std::string> problem_ids();
std::unique_ptr<Problem> make_problem(std::string_view id, const ProblemOptions& options = {});

// --- Three hump -----------------------------------------------------------

/// h(psi) = 2 p1^2 - 1.05 p1^4 + p1^6 / 6 + p1 p2 + p2^2.
double three_hump_h(double p1, double p2);
/// clamp(psi1 / ||psi||_2, 0, 1). Throws for psi = 0.
double three_hump_branch_probability(std::span<const double> psi2);

struct HumpDraw {
  int branch;  // 1 or 2
  double y;
};
/// One draw of the probabilistic three hump simulator at a 2-D psi.
HumpDraw three_hump_draw(std::span<const double> psi2, std::span<const double> x, Rng& rng);
/// sigmoid(y - 10) - sigmoid(y) averaged over the batch.
double three_hump_objective(std::span<const double> y);

// --- Rosenbrock family ----------------------------------------------------

/// sum_{i<n} (p_i - p_{i+1})^2 + (1 - p_i)^2. Throws for n < 2.
double rosenbrock_f(std::span<const double> psi);
std::vector<double> rosenbrock_grad(std::span<const double> psi);

struct MixingMatrix {
  Matrix q;  // in_dim x out_dim with orthonormal columns
  std::uint64_t seed;
};
/// QR of a seeded in_dim x out_dim standard-normal matrix. Requires in_dim > out_dim.
MixingMatrix generate_mixing_matrix(std::size_t in_dim, std::size_t out_dim, std::uint64_t seed = 1337);

// --- Boston regression network ---------------------------------------------

struct BostonDataset {
  Matrix features;              // 506 x 13, raw
  std::vector<double> targets;  // 506
};

inline constexpr std::size_t kBostonRows = 506;
inline constexpr std::size_t kBostonFeatures = 13;
inline constexpr std::size_t kBostonParams = 6 * 13 + 6 + 6 + 1;

/// Comma-separated, 14 numeric columns, optional single header row.
BostonDataset load_boston_csv(const std::filesystem::path& path);
std::filesystem::path default_boston_csv();
/// The fixed starting weights of the 13-6-1 tanh network.
std::vector<double> boston_initial_weights();
/// Predictions of the network for every record.
std::vector<double> boston_nn_simulate(std::span<const double> psi, const BostonDataset& data);
/// Prediction for one feature row.
double boston_nn_predict(std::span<const double> psi, std::span<const double> features);
/// Root-mean-square error.
double boston_objective(std::span<const double> y, std::span<const double> targets);

// --- Black-box access ---------------------------------------------------------

class BudgetExhausted : public Error {
 public:
  using Error::Error;
};

/// Result of a batch of simulator calls.
struct SimBatch {
  Matrix psi;
  Matrix x;
  Matrix y;
};

/// Evaluation-only access to a Problem. Every simulator call made by an
/// optimizer passes through here and is counted against the budget.
class Simulator {
 public:
  Simulator(const Problem& problem, std::uint64_t seed, std::uint64_t budget = UINT64_MAX,
            unsigned parallelism = 1);

  const Problem& problem() const { return problem_; }
  std::uint64_t calls() const { return calls_; }
  std::uint64_t budget() const { return budget_; }
  std::uint64_t remaining() const { return budget_ - calls_; }
  bool can_afford(std::uint64_t n) const { return n <= remaining(); }

  /// Runs one call per row of `psi`. Call r draws its input and its noise from
  /// the stream (seed, tag, r), so results do not depend on parallelism.
  /// The result holds psi.rows() * records_per_call() records, call-major.
  /// When `x` is given it is used instead of fresh inputs (single-record
  /// problems only).
  SimBatch run(const Matrix& psi, std::uint64_t tag, const Matrix* x = nullptr);

  /// Objective at a single psi averaged over `n` fresh calls (one batch).
  double estimate_objective(std::span<const double> psi, std::size_t n, std::uint64_t tag);

 private:
  const Problem& problem_;
  std::uint64_t seed_;
  std::uint64_t budget_;
  unsigned parallelism_;
  std::uint64_t calls_ = 0;
};

}  // namespace lgso::sim
