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
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <Eigen/QR>

#include "lgso/simulators.hpp"

#ifndef LGSO_DATA_DIR
#define LGSO_DATA_DIR "data"
#endif

namespace lgso::sim {

namespace {

double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }

void sample_hump_input(Rng& rng, std::span<double> x) {
  x[0] = uniform(rng, -2.0, 0.0);
  x[1] = uniform(rng, 2.0, 5.0);
}

diff::NodeId hump_objective(diff::Graph& g, diff::NodeId y) {
  auto hi = g.sigmoid(g.add_scalar(y, -10.0));
  auto lo = g.sigmoid(y);
  return g.mean(g.sub(hi, lo));
}

void sample_rosenbrock_input(Rng& rng, std::span<double> x) {
  const double mu = uniform(rng, -10.0, 10.0);
  x[0] = mu + std_normal(rng);
}

// --- problems ---------------------------------------------------------------

class ThreeHump final : public Problem {
 public:
  std::string_view id() const override { return "three_hump"; }
  std::size_t dim_psi() const override { return 2; }
  std::size_t dim_x() const override { return 2; }
  void sample_input(Rng& rng, std::span<double> x) const override { sample_hump_input(rng, x); }
  void simulate(std::span<const double> psi, std::span<const double> x, Rng& rng,
                std::span<double> y) const override {
    y[0] = three_hump_draw(psi, x, rng).y;
  }
  diff::NodeId objective(diff::Graph& g, diff::NodeId y, diff::NodeId) const override {
    return hump_objective(g, y);
  }
  bool has_mc_oracle() const override { return true; }
  double default_epsilon() const override { return 0.5; }
  std::vector<double> initial_psi() const override { return {2.0, 1.0}; }
};

class Rosenbrock final : public Problem {
 public:
  explicit Rosenbrock(std::size_t dim) : dim_(dim) {
    if (dim < 2) throw ConfigError("rosenbrock needs dimension >= 2, got " + std::to_string(dim));
  }
  std::string_view id() const override { return "rosenbrock"; }
  std::size_t dim_psi() const override { return dim_; }
  std::size_t dim_x() const override { return 1; }
  void sample_input(Rng& rng, std::span<double> x) const override { sample_rosenbrock_input(rng, x); }
  void simulate(std::span<const double> psi, std::span<const double> x, Rng& rng,
                std::span<double> y) const override {
    y[0] = rosenbrock_f(psi) + x[0] + std_normal(rng);
  }
  diff::NodeId objective(diff::Graph& g, diff::NodeId y, diff::NodeId) const override { return g.mean(y); }
  bool has_analytic() const override { return true; }
  double analytic_expected_objective(std::span<const double> psi) const override {
    check_psi(psi);
    return rosenbrock_f(psi);
  }
  std::vector<double> analytic_gradient(std::span<const double> psi) const override {
    check_psi(psi);
    return rosenbrock_grad(psi);
  }
  double default_epsilon() const override { return 0.2; }
  std::vector<double> initial_psi() const override { return std::vector<double>(dim_, 2.0); }

 private:
  std::size_t dim_;
};

// psi (100) is projected to psi' = Q^T psi (10) and fed to Rosenbrock.
class SubmanifoldRosenbrock final : public Problem {
 public:
  explicit SubmanifoldRosenbrock(std::uint64_t seed) : mix_(generate_mixing_matrix(100, 10, seed)) {}
  std::string_view id() const override { return "submanifold_rosenbrock"; }
  std::size_t dim_psi() const override { return 100; }
  std::size_t dim_x() const override { return 1; }
  void sample_input(Rng& rng, std::span<double> x) const override { sample_rosenbrock_input(rng, x); }
  void simulate(std::span<const double> psi, std::span<const double> x, Rng& rng,
                std::span<double> y) const override {
    const auto p = project(psi);
    y[0] = rosenbrock_f(p) + x[0] + std_normal(rng);
  }
  diff::NodeId objective(diff::Graph& g, diff::NodeId y, diff::NodeId) const override { return g.mean(y); }
  bool has_analytic() const override { return true; }
  double analytic_expected_objective(std::span<const double> psi) const override {
    check_psi(psi);
    return rosenbrock_f(project(psi));
  }
  std::vector<double> analytic_gradient(std::span<const double> psi) const override {
    check_psi(psi);
    const auto inner = rosenbrock_grad(project(psi));
    Eigen::Map<const Eigen::VectorXd> gi(inner.data(), static_cast<Eigen::Index>(inner.size()));
    Eigen::VectorXd full = mix_.q * gi;
    return {full.data(), full.data() + full.size()};
  }
  double default_epsilon() const override { return 0.2; }
  std::vector<double> initial_psi() const override { return std::vector<double>(100, 2.0); }
  const MixingMatrix& mixing() const { return mix_; }

 private:
  std::vector<double> project(std::span<const double> psi) const {
    Eigen::Map<const Eigen::VectorXd> v(psi.data(), static_cast<Eigen::Index>(psi.size()));
    Eigen::VectorXd p = mix_.q.transpose() * v;
    return {p.data(), p.data() + p.size()};
  }
  MixingMatrix mix_;
};

// psi (40) is embedded as B tanh(A psi) (2) and fed to the three hump simulator.
class NonlinearSubmanifoldHump final : public Problem {
 public:
  explicit NonlinearSubmanifoldHump(std::uint64_t seed)
      : a_(generate_mixing_matrix(40, 16, seed).q.transpose()),
        b_(generate_mixing_matrix(16, 2, seed + 1).q.transpose()) {}
  std::string_view id() const override { return "nonlinear_submanifold_hump"; }
  std::size_t dim_psi() const override { return 40; }
  std::size_t dim_x() const override { return 2; }
  void sample_input(Rng& rng, std::span<double> x) const override { sample_hump_input(rng, x); }
  void simulate(std::span<const double> psi, std::span<const double> x, Rng& rng,
                std::span<double> y) const override {
    const auto e = embed(psi);
    y[0] = three_hump_draw(e, x, rng).y;
  }
  diff::NodeId objective(diff::Graph& g, diff::NodeId y, diff::NodeId) const override {
    return hump_objective(g, y);
  }
  bool has_mc_oracle() const override { return true; }
  double default_epsilon() const override { return 0.5; }
  std::vector<double> initial_psi() const override { return std::vector<double>(40, 0.5); }

  std::vector<double> embed(std::span<const double> psi) const {
    Eigen::Map<const Eigen::VectorXd> v(psi.data(), static_cast<Eigen::Index>(psi.size()));
    Eigen::VectorXd e = b_ * (a_ * v).array().tanh().matrix();
    return {e.data(), e.data() + e.size()};
  }
  const Matrix& a() const { return a_; }
  const Matrix& b() const { return b_; }

 private:
  Matrix a_;  // 16 x 40
  Matrix b_;  // 2 x 16
};

// Inputs are dataset rows: 13 raw features followed by the row's target. The
// target rides along so the objective can score a batch; the network ignores it.
class BostonNN final : public Problem {
 public:
  explicit BostonNN(BostonDataset data) : data_(std::move(data)) {}
  std::string_view id() const override { return "boston_nn"; }
  std::size_t dim_psi() const override { return kBostonParams; }
  std::size_t dim_x() const override { return kBostonFeatures + 1; }
  std::size_t conditioning_inputs() const override { return kBostonFeatures; }
  void sample_input(Rng& rng, std::span<double> x) const override {
    std::uniform_int_distribution<std::size_t> pick(0, data_.targets.size() - 1);
    const std::size_t r = pick(rng);
    for (std::size_t c = 0; c < kBostonFeatures; ++c) x[c] = data_.features(r, c);
    x[kBostonFeatures] = data_.targets[r];
  }
  void simulate(std::span<const double> psi, std::span<const double> x, Rng&,
                std::span<double> y) const override {
    y[0] = boston_nn_predict(psi, x.first(kBostonFeatures));
  }
  std::size_t records_per_call() const override { return kBostonRows; }
  void simulate_call(std::span<const double> psi, Rng&, Matrix& x, Matrix& y) const override {
    const auto pred = boston_nn_simulate(psi, data_);
    for (std::size_t r = 0; r < kBostonRows; ++r) {
      const auto ri = static_cast<Eigen::Index>(r);
      x.row(ri).head(kBostonFeatures) = data_.features.row(ri);
      x(ri, kBostonFeatures) = data_.targets[r];
      y(ri, 0) = pred[r];
    }
  }
  diff::NodeId objective(diff::Graph& g, diff::NodeId y, diff::NodeId x) const override {
    auto t = g.slice_cols(x, kBostonFeatures, kBostonFeatures + 1);
    return g.sqrt(g.mean(g.square(g.sub(y, t))));
  }
  double default_epsilon() const override { return 0.2; }
  std::vector<double> initial_psi() const override { return boston_initial_weights(); }

 private:
  BostonDataset data_;
};

}  // namespace

// --- Problem base -------------------------------------------------------------

double Problem::analytic_expected_objective(std::span<const double>) const {
  throw Error("problem '" + std::string(id()) + "' has no analytic expected objective");
}

std::vector<double> Problem::analytic_gradient(std::span<const double>) const {
  throw Error("problem '" + std::string(id()) + "' has no analytic gradient");
}

void Problem::simulate_call(std::span<const double> psi, Rng& rng, Matrix& x, Matrix& y) const {
  std::span<double> xr(x.row(0).data(), dim_x());
  sample_input(rng, xr);
  simulate(psi, xr, rng, {y.row(0).data(), dim_y()});
}

double Problem::objective_value(const Matrix& y, const Matrix& x) const {
  if (y.rows() == 0) throw Error("objective of an empty batch");
  diff::Graph g;
  auto yn = g.input("y");
  auto xn = g.input("x");
  auto r = objective(g, yn, xn);
  g.set_input(yn, diff::Tensor(y));
  g.set_input(xn, diff::Tensor(x));
  const diff::NodeId t[] = {r};
  g.forward_to(t);
  return g.value(r).item();
}

void Problem::check_psi(std::span<const double> psi) const {
  if (psi.size() != dim_psi())
    throw ShapeError("problem '" + std::string(id()) + "' expects psi of dimension " + std::to_string(dim_psi()) +
                     ", got " + std::to_string(psi.size()));
  for (double v : psi)
    if (!std::isfinite(v)) throw NumericError("non-finite psi component");
}

std::vector<std::string> problem_ids() {
  return {"three_hump", "rosenbrock", "submanifold_rosenbrock", "nonlinear_submanifold_hump", "boston_nn"};
}

std::unique_ptr<Problem> make_problem(std::string_view id, const ProblemOptions& options) {
  if (id == "three_hump") return std::make_unique<ThreeHump>();
  if (id == "rosenbrock") return std::make_unique<Rosenbrock>(options.rosenbrock_dim);
  if (id == "submanifold_rosenbrock") return std::make_unique<SubmanifoldRosenbrock>(options.mixing_seed);
  if (id == "nonlinear_submanifold_hump") return std::make_unique<NonlinearSubmanifoldHump>(options.mixing_seed);
  if (id == "boston_nn") {
    const auto path = options.boston_csv.empty() ? default_boston_csv() : options.boston_csv;
    return std::make_unique<BostonNN>(load_boston_csv(path));
  }
  throw ConfigError("unknown problem '" + std::string(id) + "'");
}

// --- Three hump -------------------------------------------------------------------

double three_hump_h(double p1, double p2) {
  const double p1sq = p1 * p1;
  return 2.0 * p1sq - 1.05 * p1sq * p1sq + p1sq * p1sq * p1sq / 6.0 + p1 * p2 + p2 * p2;
}

double three_hump_branch_probability(std::span<const double> psi2) {
  if (psi2.size() != 2) throw ShapeError("three hump expects a 2-D psi, got " + std::to_string(psi2.size()));
  const double norm = std::hypot(psi2[0], psi2[1]);
  if (!(norm > 0.0)) throw NumericError("three hump mixture weight undefined at psi = 0");
  return std::clamp(psi2[0] / norm, 0.0, 1.0);
}

HumpDraw three_hump_draw(std::span<const double> psi2, std::span<const double> x, Rng& rng) {
  const double p = three_hump_branch_probability(psi2);
  const double h = three_hump_h(psi2[0], psi2[1]);
  const int branch = uniform(rng, 0.0, 1.0) < p ? 1 : 2;
  const double mu = x[branch - 1] * h + std_normal(rng);
  return {branch, mu + std_normal(rng)};
}

double three_hump_objective(std::span<const double> y) {
  if (y.empty()) throw Error("objective of an empty batch");
  double acc = 0.0;
  for (double v : y) acc += logistic(v - 10.0) - logistic(v);
  return acc / static_cast<double>(y.size());
}

// --- Rosenbrock ----------------------------------------------------------------

double rosenbrock_f(std::span<const double> psi) {
  if (psi.size() < 2) throw ShapeError("rosenbrock needs at least 2 components, got " + std::to_string(psi.size()));
  double f = 0.0;
  for (std::size_t i = 0; i + 1 < psi.size(); ++i) {
    const double d = psi[i] - psi[i + 1];
    const double e = 1.0 - psi[i];
    f += d * d + e * e;
  }
  return f;
}

std::vector<double> rosenbrock_grad(std::span<const double> psi) {
  if (psi.size() < 2) throw ShapeError("rosenbrock needs at least 2 components, got " + std::to_string(psi.size()));
  std::vector<double> g(psi.size(), 0.0);
  for (std::size_t i = 0; i + 1 < psi.size(); ++i) {
    const double d = psi[i] - psi[i + 1];
    g[i] += 2.0 * d - 2.0 * (1.0 - psi[i]);
    g[i + 1] -= 2.0 * d;
  }
  return g;
}

MixingMatrix generate_mixing_matrix(std::size_t in_dim, std::size_t out_dim, std::uint64_t seed) {
  if (in_dim <= out_dim)
    throw ConfigError("mixing matrix needs in_dim > out_dim, got " + std::to_string(in_dim) + " <= " +
                      std::to_string(out_dim));
  Rng rng(seed);
  Eigen::MatrixXd g(in_dim, out_dim);
  for (Eigen::Index r = 0; r < g.rows(); ++r)
    for (Eigen::Index c = 0; c < g.cols(); ++c) g(r, c) = std_normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd thin = qr.householderQ() * Eigen::MatrixXd::Identity(in_dim, out_dim);
  return {Matrix(thin), seed};
}

// --- Boston ------------------------------------------------------------------------

std::filesystem::path default_boston_csv() {
  if (const char* env = std::getenv("LGSO_BOSTON_CSV")) return env;
  return std::filesystem::path(LGSO_DATA_DIR) / "boston.csv";
}

BostonDataset load_boston_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open Boston dataset '" + path.string() + "'");
  BostonDataset data;
  data.features.resize(kBostonRows, kBostonFeatures);
  std::string line;
  std::size_t row = 0;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (line_no == 1 && row == 0) continue;  // header
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": non-numeric value");
    }
    if (vals.size() != kBostonFeatures + 1)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(kBostonFeatures + 1) + " columns, found " + std::to_string(vals.size()));
    if (row >= kBostonRows)
      throw DataError(path.string() + ": more than " + std::to_string(kBostonRows) + " records");
    for (std::size_t c = 0; c < kBostonFeatures; ++c) data.features(row, c) = vals[c];
    data.targets.push_back(vals[kBostonFeatures]);
    ++row;
  }
  if (row != kBostonRows)
    throw DataError(path.string() + ": expected " + std::to_string(kBostonRows) + " records, found " +
                    std::to_string(row));
  if (!data.features.allFinite()) throw DataError(path.string() + ": non-finite feature value");
  return data;
}

std::vector<double> boston_initial_weights() {
  return {
      0.0215, 0.0763, 0.0879, 0.0102, 0.095,   0.0508,  0.088,    0.101,  0.0782,  0.0684, 0.0658, 0.0509,
      0.0207, 0.0618, 0.0756, 0.00784, 0.0968, 0.0685,  0.0113,   0.0745, 0.00154, 0.0772, 0.0472, 0.000906,
      0.0723, 0.0779, 0.0594, 0.0785,  0.0918, 0.0634,  0.0853,   0.105,  0.00407, 0.0789, 0.0035, 0.0581,
      0.0375, 0.0632, 0.0669, 0.00293, 0.0901, 0.0208,  0.0388,   0.0893, 0.00104, 0.0598, 0.0745, 0.08,
      0.0283, 0.0106, 0.0371, 0.0667,  0.0331, 0.0356,  0.0661,   0.0554, 0.084,   0.0398, 0.00286, 0.0281,
      0.0246, 0.0208, 0.0358, 0.033,   0.0421, 0.0505,  0.00544,  0.0269, 0.00527, 0.0569, 0.00538, 0.0786,
      0.102,  0.0452, 0.0444, 0.105,   0.0765, 0.0689,  0.0249,   0.0933, 0.037,   0.0762, 0.0882, 0.0505,
      0.0688, 0.0666, 0.101,  0.0857,  0.0488, 0.0303,  22.5328,
  };
}

double boston_nn_predict(std::span<const double> psi, std::span<const double> features) {
  if (psi.size() != kBostonParams)
    throw ShapeError("Boston network expects " + std::to_string(kBostonParams) + " weights, got " +
                     std::to_string(psi.size()));
  if (features.size() != kBostonFeatures)
    throw ShapeError("Boston network expects " + std::to_string(kBostonFeatures) + " features");
  // Layout: W1 (6x13 row-major), b1 (6), W2 (1x6), b2 (1).
  const double* w1 = psi.data();
  const double* b1 = w1 + 6 * 13;
  const double* w2 = b1 + 6;
  const double b2 = w2[6];
  double out = b2;
  for (std::size_t j = 0; j < 6; ++j) {
    double a = b1[j];
    for (std::size_t k = 0; k < kBostonFeatures; ++k) a += w1[j * kBostonFeatures + k] * features[k];
    out += w2[j] * std::tanh(a);
  }
  return out;
}

std::vector<double> boston_nn_simulate(std::span<const double> psi, const BostonDataset& data) {
  std::vector<double> out(static_cast<std::size_t>(data.features.rows()));
  for (std::size_t r = 0; r < out.size(); ++r) {
    std::span<const double> row(data.features.row(static_cast<Eigen::Index>(r)).data(), kBostonFeatures);
    out[r] = boston_nn_predict(psi, row);
  }
  return out;
}

double boston_objective(std::span<const double> y, std::span<const double> targets) {
  if (y.size() != targets.size())
    throw ShapeError("RMSE needs equal lengths, got " + std::to_string(y.size()) + " and " +
                     std::to_string(targets.size()));
  if (y.empty()) throw Error("RMSE of an empty batch");
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += (y[i] - targets[i]) * (y[i] - targets[i]);
  return std::sqrt(acc / static_cast<double>(y.size()));
}

// --- Simulator -------------------------------------------------------------------------

Simulator::Simulator(const Problem& problem, std::uint64_t seed, std::uint64_t budget, unsigned parallelism)
    : problem_(problem), seed_(seed), budget_(budget), parallelism_(std::max(1u, parallelism)) {}

SimBatch Simulator::run(const Matrix& psi, std::uint64_t tag, const Matrix* x) {
  const auto n = static_cast<std::size_t>(psi.rows());
  const std::size_t per = problem_.records_per_call();
  const auto dx = static_cast<Eigen::Index>(problem_.dim_x());
  const auto dy = static_cast<Eigen::Index>(problem_.dim_y());
  if (static_cast<std::size_t>(psi.cols()) != problem_.dim_psi())
    throw ShapeError("simulator expects psi rows of width " + std::to_string(problem_.dim_psi()) + ", got " +
                     std::to_string(psi.cols()));
  if (x) {
    if (per != 1) throw Error("problem '" + std::string(problem_.id()) + "' does not accept explicit inputs");
    if (static_cast<std::size_t>(x->rows()) != n || x->cols() != dx)
      throw ShapeError("simulator input batch has the wrong shape");
  }
  if (!can_afford(n))
    throw BudgetExhausted("simulator budget exhausted: " + std::to_string(calls_) + " of " +
                          std::to_string(budget_) + " calls used, " + std::to_string(n) + " requested");
  for (Eigen::Index r = 0; r < psi.rows(); ++r) problem_.check_psi({psi.row(r).data(), problem_.dim_psi()});

  const auto per_i = static_cast<Eigen::Index>(per);
  SimBatch out{Matrix(n * per, psi.cols()), Matrix(n * per, dx), Matrix(n * per, dy)};
  auto work = [&](std::size_t lo, std::size_t hi) {
    Matrix xc(per_i, dx), yc(per_i, dy);
    for (std::size_t r = lo; r < hi; ++r) {
      const auto ri = static_cast<Eigen::Index>(r);
      std::span<const double> p(psi.row(ri).data(), problem_.dim_psi());
      Rng rng = make_stream(seed_, Stream::kSimulate, {tag, r});
      if (x) {
        xc.row(0) = x->row(ri);
        problem_.simulate(p, {xc.row(0).data(), problem_.dim_x()}, rng, {yc.row(0).data(), problem_.dim_y()});
      } else {
        problem_.simulate_call(p, rng, xc, yc);
      }
      out.psi.middleRows(ri * per_i, per_i).rowwise() = psi.row(ri);
      out.x.middleRows(ri * per_i, per_i) = xc;
      out.y.middleRows(ri * per_i, per_i) = yc;
    }
  };
  const std::size_t workers = std::min<std::size_t>(parallelism_, n);
  if (workers <= 1) {
    work(0, n);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(n, lo + chunk);
      if (lo < hi) pool.emplace_back(work, lo, hi);
    }
  }
  calls_ += n;
  return out;
}

double Simulator::estimate_objective(std::span<const double> psi, std::size_t n, std::uint64_t tag) {
  if (n == 0) throw Error("objective estimate needs at least one call");
  Matrix p(n, psi.size());
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < psi.size(); ++c) p(r, c) = psi[c];
  auto batch = run(p, tag);
  return problem_.objective_value(batch.y, batch.x);
}

}  // namespace lgso::sim
