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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lgso/diffcore.hpp"
#include "lgso/error.hpp"
#include "lgso/rng.hpp"
#include "lgso/sampling.hpp"
#include "lgso/simulators.hpp"

namespace lgso::surrogate {

using diff::Matrix;
using sampling::RecordSet;

enum class Kind { kCramerGan, kCouplingFlow };

std::string_view kind_name(Kind k);
Kind parse_kind(std::string_view s);

struct SurrogateConfig {
  Kind kind = Kind::kCramerGan;
  std::size_t noise_dim = 10;
  std::vector<std::size_t> generator_hidden{100, 100, 100};
  std::vector<std::size_t> critic_hidden{100, 100};
  std::size_t critic_output = 256;
  double learning_rate = 8e-4;
  std::size_t batch_size = 512;
  std::size_t epochs = 15;
  std::size_t critic_steps = 1;
  double gradient_penalty = 10.0;
  double beta1 = 0.5;
  double beta2 = 0.999;
  // coupling flow
  std::size_t flow_layers = 4;
  std::size_t flow_hidden = 64;
  double flow_learning_rate = 1e-3;
  // 0 keeps every record; otherwise a seeded uniform subset of this size
  std::size_t max_records = 0;

  void validate() const;
};

/// Affine maps into network coordinates: psi and x to [-1, 1] over the
/// training box, y to zero mean and unit variance.
struct Standardization {
  std::vector<double> psi_center, psi_scale;
  std::vector<double> x_center, x_scale;
  std::vector<double> y_mean, y_scale;

  static Standardization fit(const RecordSet& records, std::size_t x_columns);
};

struct DenseLayer {
  Matrix weight;  // in x out
  Matrix bias;    // 1 x out
  diff::Activation activation = diff::Activation::kIdentity;
};
using Mlp = std::vector<DenseLayer>;

/// Distribution comparison of two 1-D samples.
struct MonitorStats {
  double js_divergence = 0.0;
  double ks_statistic = 0.0;
  double mean_diff = 0.0;
  double variance_diff = 0.0;
  double third_moment_diff = 0.0;
};
MonitorStats monitor_stats(std::span<const double> real, std::span<const double> generated);

struct TrainingInfo {
  std::size_t records = 0;
  std::size_t epochs = 0;
  std::size_t steps = 0;
  double final_generator_loss = 0.0;
  double final_critic_loss = 0.0;
  std::vector<MonitorStats> stats;  // one per output dimension
};

/// Raised when a loss turns non-finite. Carries where it happened and the
/// last finite losses.
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(const std::string& what, std::size_t epoch, std::size_t step, double last_gen, double last_critic)
      : NumericError(what), epoch(epoch), step(step), last_generator_loss(last_gen), last_critic_loss(last_critic) {}
  std::size_t epoch, step;
  double last_generator_loss, last_critic_loss;
};

class SurrogateModel {
 public:
  Kind kind = Kind::kCramerGan;
  std::size_t dim_psi = 0;
  std::size_t dim_x = 0;      // record width
  std::size_t x_columns = 0;  // leading x columns the networks see
  std::size_t dim_y = 0;
  std::size_t noise_dim = 0;
  Standardization norm;
  Mlp generator;               // GAN: concat(z, x, psi) -> y
  std::vector<Mlp> couplings;  // flow: concat(kept half, x, psi) -> (log scale, shift)
  TrainingInfo info;

  /// Adds the sampling path to `g`. z is n x noise_dim, x is n x dim_x, psi
  /// is n x dim_psi; returns the n x dim_y output in simulator units.
  diff::NodeId build_sample(diff::Graph& g, diff::NodeId z, diff::NodeId x, diff::NodeId psi) const;
  Matrix sample(const Matrix& z, const Matrix& x, const Matrix& psi) const;
  Matrix draw_noise(std::size_t n, Rng& rng) const;

  /// Flow only: maps outputs back to base noise. `log_det` (optional) gets
  /// the per-row log |det d(y_std)/dz| of the forward map.
  Matrix flow_inverse(const Matrix& y, const Matrix& x, const Matrix& psi, Matrix* log_det = nullptr) const;

  void save(const std::filesystem::path& path) const;
  static SurrogateModel load(const std::filesystem::path& path);
};

/// Trains a surrogate from scratch on `records`. `x_columns` limits the
/// conditioning to the leading input columns (0 means all).
SurrogateModel train_surrogate(const RecordSet& records, const SurrogateConfig& config, std::uint64_t seed,
                               std::size_t x_columns = 0);

struct GradEstimate {
  std::vector<double> gradient;
  std::size_t samples = 0;
  double objective = 0.0;
};

using InputSampler = std::function<void(Rng&, std::span<double>)>;
using ObjectiveBuilder = std::function<diff::NodeId(diff::Graph&, diff::NodeId y, diff::NodeId x)>;

/// Monte Carlo gradient of E[R(S(z, x; psi))] with respect to psi using
/// `samples` draws of (z, x).
GradEstimate surrogate_grad(const SurrogateModel& model, std::span<const double> psi, std::size_t samples,
                            const InputSampler& sample_x, const ObjectiveBuilder& objective, Rng& rng);
GradEstimate surrogate_grad(const SurrogateModel& model, std::span<const double> psi, std::size_t samples,
                            const sim::Problem& problem, Rng& rng);

}  // namespace lgso::surrogate
