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
#include <numeric>

#include "detail.hpp"

namespace lgso::surrogate {

using diff::Graph;
using diff::NodeId;
using diff::Tensor;
using detail::LayerNodes;

namespace {

// Lexicographic order over (psi, x, y) so that training does not depend on
// how the caller happened to order the records.
std::vector<std::size_t> canonical_order(const RecordSet& r) {
  std::vector<std::size_t> idx(r.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto cmp_rows = [](const Matrix& m, Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (m(a, c) != m(b, c)) return m(a, c) < m(b, c) ? -1 : 1;
    return 0;
  };
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
    if (int c = cmp_rows(r.psi, ia, ib)) return c < 0;
    if (int c = cmp_rows(r.x, ia, ib)) return c < 0;
    if (int c = cmp_rows(r.y, ia, ib)) return c < 0;
    return a < b;
  });
  return idx;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

// Network-coordinate copies of the training data, in canonical order.
struct TrainingData {
  Matrix y;     // standardised outputs
  Matrix cond;  // rescaled x (leading columns) and psi
  Matrix y_raw;
  Matrix x_raw, psi_raw;
};

TrainingData prepare(const RecordSet& records, const Standardization& s, std::size_t x_columns,
                     std::span<const std::size_t> order) {
  TrainingData d;
  d.y_raw = gather_rows(records.y, order);
  d.x_raw = gather_rows(records.x, order);
  d.psi_raw = gather_rows(records.psi, order);
  const auto n = static_cast<Eigen::Index>(order.size());
  d.y.resize(n, d.y_raw.cols());
  for (Eigen::Index j = 0; j < d.y.cols(); ++j)
    d.y.col(j) = (d.y_raw.col(j).array() - s.y_mean[j]) / s.y_scale[j];
  const auto xc = static_cast<Eigen::Index>(x_columns);
  d.cond.resize(n, xc + d.psi_raw.cols());
  for (Eigen::Index j = 0; j < xc; ++j)
    d.cond.col(j) = (d.x_raw.col(j).array() - s.x_center[j]) / s.x_scale[j];
  for (Eigen::Index j = 0; j < d.psi_raw.cols(); ++j)
    d.cond.col(xc + j) = (d.psi_raw.col(j).array() - s.psi_center[j]) / s.psi_scale[j];
  return d;
}

// Near-equal batch boundaries covering n rows.
std::vector<std::size_t> batch_bounds(std::size_t n, std::size_t batch) {
  const std::size_t count = (n + batch - 1) / batch;
  std::vector<std::size_t> b{0};
  for (std::size_t k = 1; k <= count; ++k) b.push_back(n * k / count);
  return b;
}

Matrix normal_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (auto& v : m.reshaped()) v = std_normal(rng);
  return m;
}

void check_loss(double v, const char* what, std::size_t epoch, std::size_t step, double last_gen, double last_crit) {
  if (!std::isfinite(v))
    throw TrainingDiverged(std::string(what) + " loss became non-finite at epoch " + std::to_string(epoch) +
                               ", step " + std::to_string(step),
                           epoch, step, last_gen, last_crit);
}

// --- Cramer GAN -------------------------------------------------------------

struct GanGraph {
  Graph g;
  detail::CramerInputs in;
  std::vector<LayerNodes> gen, critic;
  detail::CramerNodes out;
};

void build_gan(GanGraph& m, const SurrogateConfig& cfg, std::size_t dim_y, std::size_t dim_cond, Rng& rng) {
  Graph& g = m.g;
  m.in = {g.input("y"),     g.input("cond"),  g.input("z1"),  g.input("z2"),
          g.input("alpha"), g.input("one_minus_alpha"), g.input("ones")};
  m.gen = detail::parameter_layers(g, cfg.noise_dim + dim_cond, cfg.generator_hidden, dim_y, "generator", rng, false);
  m.critic = detail::parameter_layers(g, dim_y + dim_cond, cfg.critic_hidden, cfg.critic_output, "critic", rng, false);
  m.out = detail::build_cramer(g, m.in, m.gen, m.critic, dim_y, cfg.gradient_penalty);
}

void train_gan(SurrogateModel& model, const TrainingData& data, const SurrogateConfig& cfg, std::uint64_t seed) {
  Rng init = make_stream(seed, Stream::kSurrogateTrain, {0});
  GanGraph m;
  const auto dim_cond = static_cast<std::size_t>(data.cond.cols());
  build_gan(m, cfg, model.dim_y, dim_cond, init);
  const auto gen_params = detail::layer_parameters(m.gen);
  const auto critic_params = detail::layer_parameters(m.critic);
  diff::AdamState gen_opt({cfg.learning_rate, cfg.beta1, cfg.beta2, 1e-8});
  diff::AdamState critic_opt({cfg.learning_rate, cfg.beta1, cfg.beta2, 1e-8});

  const auto n = static_cast<std::size_t>(data.y.rows());
  const auto bounds = batch_bounds(n, cfg.batch_size);
  std::vector<std::size_t> perm(n);
  double last_gen = 0.0, last_crit = 0.0;
  std::size_t step = 0;
  Matrix yb, cb;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng = make_stream(seed, Stream::kSurrogateTrain, {1, epoch});
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
      const std::span<const std::size_t> rows(perm.data() + bounds[b], bounds[b + 1] - bounds[b]);
      const std::size_t bs = rows.size();
      m.g.set_input(m.in.y, Tensor(gather_rows(data.y, rows)));
      m.g.set_input(m.in.cond, Tensor(gather_rows(data.cond, rows)));
      m.g.set_input(m.in.ones, Tensor(bs, 1, 1.0));
      try {
        for (std::size_t k = 0; k < cfg.critic_steps; ++k) {
          Matrix a(bs, 1);
          for (auto& v : a.reshaped()) v = uniform(rng, 0.0, 1.0);
          m.g.set_input(m.in.alpha, Tensor(a));
          m.g.set_input(m.in.one_minus_alpha, Tensor(Matrix(1.0 - a.array())));
          m.g.set_input(m.in.z1, Tensor(normal_matrix(bs, cfg.noise_dim, rng)));
          m.g.set_input(m.in.z2, Tensor(normal_matrix(bs, cfg.noise_dim, rng)));
          const NodeId t[] = {m.out.critic_loss};
          m.g.forward_to(t);
          const double loss = m.g.value(m.out.critic_loss).item();
          check_loss(loss, "critic", epoch, step, last_gen, last_crit);
          last_crit = loss;
          auto grads = m.g.backward(m.out.critic_loss, critic_params);
          diff::adam_update(m.g, critic_params, grads, critic_opt);
        }
        m.g.set_input(m.in.z1, Tensor(normal_matrix(bs, cfg.noise_dim, rng)));
        m.g.set_input(m.in.z2, Tensor(normal_matrix(bs, cfg.noise_dim, rng)));
        const NodeId t[] = {m.out.generator_loss};
        m.g.forward_to(t);
        const double loss = m.g.value(m.out.generator_loss).item();
        check_loss(loss, "generator", epoch, step, last_gen, last_crit);
        last_gen = loss;
        auto grads = m.g.backward(m.out.generator_loss, gen_params);
        diff::adam_update(m.g, gen_params, grads, gen_opt);
      } catch (const TrainingDiverged&) {
        throw;
      } catch (const NumericError& e) {
        throw TrainingDiverged(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", step " +
                                   std::to_string(step),
                               epoch, step, last_gen, last_crit);
      }
      ++step;
    }
  }
  model.generator = detail::extract_layers(m.g, m.gen);
  model.info.epochs = cfg.epochs;
  model.info.steps = step;
  model.info.final_generator_loss = last_gen;
  model.info.final_critic_loss = last_crit;
}

// --- coupling flow -----------------------------------------------------------

void train_flow(SurrogateModel& model, const TrainingData& data, const SurrogateConfig& cfg, std::uint64_t seed) {
  Rng init = make_stream(seed, Stream::kSurrogateTrain, {0});
  Graph g;
  const NodeId y = g.input("y"), cond = g.input("cond");
  const auto dim_cond = static_cast<std::size_t>(data.cond.cols());
  std::vector<std::vector<LayerNodes>> nets;
  std::vector<NodeId> params;
  for (std::size_t l = 0; l < cfg.flow_layers; ++l) {
    const auto sp = detail::coupling_split(l, model.dim_y);
    const std::size_t keep = sp.keep_end - sp.keep_begin, move = sp.move_end - sp.move_begin;
    nets.push_back(detail::parameter_layers(g, keep + dim_cond, {cfg.flow_hidden, cfg.flow_hidden}, 2 * move,
                                            "coupling" + std::to_string(l), init, true));
    for (auto p : detail::layer_parameters(nets.back())) params.push_back(p);
  }
  NodeId log_det{};
  const NodeId z = detail::flow_inverse(g, y, cond, nets, model.dim_y, &log_det);
  // negative log-likelihood per record, up to a constant
  const NodeId nll = g.mean(g.add(g.scale(g.row_sum(g.square(z)), 0.5), log_det));

  diff::AdamState opt({cfg.flow_learning_rate, 0.9, 0.999, 1e-8});
  const auto n = static_cast<std::size_t>(data.y.rows());
  const auto bounds = batch_bounds(n, cfg.batch_size);
  std::vector<std::size_t> perm(n);
  double last = 0.0;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng = make_stream(seed, Stream::kSurrogateTrain, {1, epoch});
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
      const std::span<const std::size_t> rows(perm.data() + bounds[b], bounds[b + 1] - bounds[b]);
      g.set_input(y, Tensor(gather_rows(data.y, rows)));
      g.set_input(cond, Tensor(gather_rows(data.cond, rows)));
      const NodeId t[] = {nll};
      g.forward_to(t);
      const double loss = g.value(nll).item();
      check_loss(loss, "flow", epoch, step, last, 0.0);
      last = loss;
      try {
        auto grads = g.backward(nll, params);
        diff::adam_update(g, params, grads, opt);
      } catch (const NumericError& e) {
        throw TrainingDiverged(e.what(), epoch, step, last, 0.0);
      }
      ++step;
    }
  }
  for (const auto& net : nets) model.couplings.push_back(detail::extract_layers(g, net));
  model.info.epochs = cfg.epochs;
  model.info.steps = step;
  model.info.final_generator_loss = last;
}

void record_monitor_stats(SurrogateModel& model, const TrainingData& data, std::uint64_t seed) {
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(data.y_raw.rows()), 4096);
  std::vector<std::size_t> rows(n);
  const std::size_t total = static_cast<std::size_t>(data.y_raw.rows());
  for (std::size_t i = 0; i < n; ++i) rows[i] = i * total / n;
  Rng rng = make_stream(seed, Stream::kMonitor, {});
  const Matrix x = gather_rows(data.x_raw, rows);
  const Matrix psi = gather_rows(data.psi_raw, rows);
  const Matrix gen = model.sample(model.draw_noise(n, rng), x, psi);
  const Matrix real = gather_rows(data.y_raw, rows);
  model.info.stats.clear();
  for (Eigen::Index j = 0; j < real.cols(); ++j) {
    std::vector<double> a(real.col(j).begin(), real.col(j).end()), b(gen.col(j).begin(), gen.col(j).end());
    model.info.stats.push_back(monitor_stats(a, b));
  }
}

}  // namespace

SurrogateModel train_surrogate(const RecordSet& records, const SurrogateConfig& config, std::uint64_t seed,
                               std::size_t x_columns) {
  config.validate();
  if (records.empty()) throw Error("cannot train a surrogate on an empty record set");
  const auto dim_x = static_cast<std::size_t>(records.x.cols());
  if (x_columns == 0 || x_columns > dim_x) x_columns = dim_x;
  if (records.psi.rows() != records.y.rows() || records.x.rows() != records.y.rows())
    throw ShapeError("record set has unequal row counts");

  auto order = canonical_order(records);
  if (config.max_records > 0 && order.size() > config.max_records) {
    std::vector<std::size_t> rank(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;
    Rng pick = make_stream(seed, Stream::kSurrogateTrain, {2});
    std::shuffle(order.begin(), order.end(), pick);
    order.resize(config.max_records);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rank[a] < rank[b]; });
  }

  SurrogateModel model;
  model.kind = config.kind;
  model.dim_psi = static_cast<std::size_t>(records.psi.cols());
  model.dim_x = dim_x;
  model.x_columns = x_columns;
  model.dim_y = static_cast<std::size_t>(records.y.cols());
  model.noise_dim = config.kind == Kind::kCramerGan ? config.noise_dim : model.dim_y;

  RecordSet kept{gather_rows(records.psi, order), gather_rows(records.x, order), gather_rows(records.y, order), {}};
  kept.iteration.assign(order.size(), 0);
  model.norm = Standardization::fit(kept, x_columns);
  std::vector<std::size_t> identity(order.size());
  std::iota(identity.begin(), identity.end(), 0);
  const auto data = prepare(kept, model.norm, x_columns, identity);
  model.info.records = order.size();

  if (config.kind == Kind::kCramerGan)
    train_gan(model, data, config, seed);
  else
    train_flow(model, data, config, seed);
  record_monitor_stats(model, data, seed);
  return model;
}

}  // namespace lgso::surrogate
