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
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "detail.hpp"

namespace lgso::surrogate {

using diff::Graph;
using diff::NodeId;
using diff::Tensor;

std::string_view kind_name(Kind k) { return k == Kind::kCramerGan ? "cramer_gan" : "coupling_flow"; }

Kind parse_kind(std::string_view s) {
  if (s == "cramer_gan") return Kind::kCramerGan;
  if (s == "coupling_flow") return Kind::kCouplingFlow;
  throw ConfigError("unknown surrogate kind '" + std::string(s) + "' (expected cramer_gan or coupling_flow)");
}

void SurrogateConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("surrogate.") + name + " must be positive");
  };
  positive(static_cast<double>(noise_dim), "noise_dim");
  positive(learning_rate, "learning_rate");
  positive(static_cast<double>(batch_size), "batch_size");
  positive(static_cast<double>(epochs), "epochs");
  positive(static_cast<double>(critic_steps), "critic_steps");
  positive(static_cast<double>(critic_output), "critic_output");
  positive(flow_learning_rate, "flow_learning_rate");
  positive(static_cast<double>(flow_layers), "flow_layers");
  positive(static_cast<double>(flow_hidden), "flow_hidden");
  if (gradient_penalty < 0.0) throw ConfigError("surrogate.gradient_penalty must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("surrogate Adam betas must lie in [0, 1)");
  for (auto h : generator_hidden) positive(static_cast<double>(h), "generator_hidden");
  for (auto h : critic_hidden) positive(static_cast<double>(h), "critic_hidden");
}

Standardization Standardization::fit(const RecordSet& r, std::size_t x_columns) {
  if (r.empty()) throw Error("cannot standardise an empty record set");
  Standardization s;
  auto box = [](const Matrix& m, std::size_t cols, std::vector<double>& center, std::vector<double>& scale) {
    for (std::size_t j = 0; j < cols; ++j) {
      const auto c = m.col(static_cast<Eigen::Index>(j));
      const double lo = c.minCoeff(), hi = c.maxCoeff();
      center.push_back(0.5 * (lo + hi));
      const double half = 0.5 * (hi - lo);
      scale.push_back(half > 1e-12 * std::max(1.0, std::abs(center.back())) ? half : 1.0);
    }
  };
  box(r.psi, static_cast<std::size_t>(r.psi.cols()), s.psi_center, s.psi_scale);
  box(r.x, x_columns, s.x_center, s.x_scale);
  for (Eigen::Index j = 0; j < r.y.cols(); ++j) {
    const auto c = r.y.col(j).array();
    const double mean = c.mean();
    const double sd = std::sqrt((c - mean).square().mean());
    s.y_mean.push_back(mean);
    s.y_scale.push_back(sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 1.0);
  }
  return s;
}

NodeId SurrogateModel::build_sample(Graph& g, NodeId z, NodeId x, NodeId psi) const {
  NodeId cond = detail::conditioning(g, norm, x, psi, dim_x, x_columns);
  NodeId y_std;
  if (kind == Kind::kCramerGan) {
    auto layers = detail::constant_layers(g, generator, "generator");
    y_std = detail::apply_layers(g, g.concat_cols({z, cond}), layers).output;
  } else {
    std::vector<std::vector<detail::LayerNodes>> nets;
    for (std::size_t l = 0; l < couplings.size(); ++l)
      nets.push_back(detail::constant_layers(g, couplings[l], "coupling" + std::to_string(l)));
    y_std = detail::flow_forward(g, z, cond, nets, dim_y);
  }
  return detail::unstandardize_y(g, norm, y_std);
}

Matrix SurrogateModel::sample(const Matrix& z, const Matrix& x, const Matrix& psi) const {
  const auto n = z.rows();
  if (static_cast<std::size_t>(z.cols()) != noise_dim || static_cast<std::size_t>(x.cols()) != dim_x ||
      static_cast<std::size_t>(psi.cols()) != dim_psi || x.rows() != n || psi.rows() != n)
    throw ShapeError("surrogate sample expects z " + std::to_string(noise_dim) + ", x " + std::to_string(dim_x) +
                     ", psi " + std::to_string(dim_psi) + " columns with equal rows");
  Graph g;
  auto zn = g.input("z"), xn = g.input("x"), pn = g.input("psi");
  auto y = build_sample(g, zn, xn, pn);
  g.set_input(zn, Tensor(z));
  g.set_input(xn, Tensor(x));
  g.set_input(pn, Tensor(psi));
  const NodeId t[] = {y};
  g.forward_to(t);
  return g.value(y).matrix();
}

Matrix SurrogateModel::draw_noise(std::size_t n, Rng& rng) const {
  Matrix z(n, noise_dim);
  for (auto& v : z.reshaped()) v = std_normal(rng);
  return z;
}

Matrix SurrogateModel::flow_inverse(const Matrix& y, const Matrix& x, const Matrix& psi, Matrix* log_det) const {
  if (kind != Kind::kCouplingFlow) throw Error("flow_inverse needs a coupling-flow surrogate");
  Graph g;
  auto yn = g.input("y"), xn = g.input("x"), pn = g.input("psi");
  NodeId cond = detail::conditioning(g, norm, xn, pn, dim_x, x_columns);
  std::vector<std::vector<detail::LayerNodes>> nets;
  for (std::size_t l = 0; l < couplings.size(); ++l)
    nets.push_back(detail::constant_layers(g, couplings[l], "coupling" + std::to_string(l)));
  NodeId ld{};
  NodeId z = detail::flow_inverse(g, detail::standardize_y(g, norm, yn), cond, nets, dim_y, &ld);
  g.set_input(yn, Tensor(y));
  g.set_input(xn, Tensor(x));
  g.set_input(pn, Tensor(psi));
  const NodeId t[] = {z, ld};
  g.forward_to(t);
  if (log_det) *log_det = g.value(ld).matrix();
  return g.value(z).matrix();
}

// --- snapshot files -----------------------------------------------------------

namespace {

constexpr const char* kSnapshotMagic = "lgso-surrogate";
constexpr int kSnapshotVersion = 1;

std::string_view activation_name(diff::Activation a) {
  switch (a) {
    case diff::Activation::kIdentity: return "identity";
    case diff::Activation::kTanh: return "tanh";
    case diff::Activation::kSigmoid: return "sigmoid";
    case diff::Activation::kLeakyRelu: return "leaky_relu";
  }
  return "identity";
}

diff::Activation parse_activation(const std::string& s) {
  if (s == "identity") return diff::Activation::kIdentity;
  if (s == "tanh") return diff::Activation::kTanh;
  if (s == "sigmoid") return diff::Activation::kSigmoid;
  if (s == "leaky_relu") return diff::Activation::kLeakyRelu;
  throw DataError("unknown activation '" + s + "' in surrogate snapshot");
}

void write_vector(std::ostream& out, const char* key, const std::vector<double>& v) {
  out << key << ' ' << v.size();
  for (double d : v) out << ' ' << d;
  out << '\n';
}

void write_mlp(std::ostream& out, const char* key, const Mlp& mlp) {
  out << key << ' ' << mlp.size() << '\n';
  for (const auto& l : mlp) {
    out << "layer " << l.weight.rows() << ' ' << l.weight.cols() << ' ' << activation_name(l.activation) << '\n';
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) out << (c ? " " : "") << l.weight(r, c);
      out << '\n';
    }
    for (Eigen::Index c = 0; c < l.bias.cols(); ++c) out << (c ? " " : "") << l.bias(0, c);
    out << '\n';
  }
}

class Reader {
 public:
  Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  void expect(const std::string& key) {
    std::string got;
    if (!(in_ >> got) || got != key) fail("expected '" + key + "'" + (got.empty() ? "" : ", found '" + got + "'"));
  }
  template <class T>
  T get() {
    T v{};
    if (!(in_ >> v)) fail("truncated or malformed value");
    return v;
  }
  std::vector<double> vec(const std::string& key) {
    expect(key);
    const auto n = get<std::size_t>();
    std::vector<double> v(n);
    for (auto& d : v) d = get<double>();
    return v;
  }
  Mlp mlp(const std::string& key) {
    expect(key);
    const auto layers = get<std::size_t>();
    Mlp m;
    for (std::size_t i = 0; i < layers; ++i) {
      expect("layer");
      const auto rows = get<std::size_t>(), cols = get<std::size_t>();
      DenseLayer l;
      l.activation = parse_activation(get<std::string>());
      l.weight.resize(rows, cols);
      for (auto& v : l.weight.reshaped<Eigen::RowMajor>()) v = get<double>();
      l.bias.resize(1, cols);
      for (auto& v : l.bias.reshaped()) v = get<double>();
      m.push_back(std::move(l));
    }
    return m;
  }
  [[noreturn]] void fail(const std::string& what) { throw DataError(path_ + ": " + what); }

 private:
  std::istream& in_;
  std::string path_;
};

}  // namespace

void SurrogateModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write surrogate snapshot '" + path.string() + "'");
  out.precision(17);
  out << kSnapshotMagic << ' ' << kSnapshotVersion << '\n';
  out << "kind " << kind_name(kind) << '\n';
  out << "dims " << dim_psi << ' ' << dim_x << ' ' << x_columns << ' ' << dim_y << ' ' << noise_dim << '\n';
  write_vector(out, "psi_center", norm.psi_center);
  write_vector(out, "psi_scale", norm.psi_scale);
  write_vector(out, "x_center", norm.x_center);
  write_vector(out, "x_scale", norm.x_scale);
  write_vector(out, "y_mean", norm.y_mean);
  write_vector(out, "y_scale", norm.y_scale);
  out << "training " << info.records << ' ' << info.epochs << ' ' << info.steps << ' ' << info.final_generator_loss
      << ' ' << info.final_critic_loss << '\n';
  write_mlp(out, "generator", generator);
  out << "couplings " << couplings.size() << '\n';
  for (const auto& c : couplings) write_mlp(out, "coupling", c);
  if (!out) throw Error("failed writing surrogate snapshot '" + path.string() + "'");
}

SurrogateModel SurrogateModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open surrogate snapshot '" + path.string() + "'");
  Reader rd(in, path.string());
  rd.expect(kSnapshotMagic);
  const int version = rd.get<int>();
  if (version != kSnapshotVersion) rd.fail("unsupported snapshot version " + std::to_string(version));
  SurrogateModel m;
  rd.expect("kind");
  try {
    m.kind = parse_kind(rd.get<std::string>());
  } catch (const ConfigError& e) {
    rd.fail(e.what());
  }
  rd.expect("dims");
  m.dim_psi = rd.get<std::size_t>();
  m.dim_x = rd.get<std::size_t>();
  m.x_columns = rd.get<std::size_t>();
  m.dim_y = rd.get<std::size_t>();
  m.noise_dim = rd.get<std::size_t>();
  m.norm.psi_center = rd.vec("psi_center");
  m.norm.psi_scale = rd.vec("psi_scale");
  m.norm.x_center = rd.vec("x_center");
  m.norm.x_scale = rd.vec("x_scale");
  m.norm.y_mean = rd.vec("y_mean");
  m.norm.y_scale = rd.vec("y_scale");
  rd.expect("training");
  m.info.records = rd.get<std::size_t>();
  m.info.epochs = rd.get<std::size_t>();
  m.info.steps = rd.get<std::size_t>();
  m.info.final_generator_loss = rd.get<double>();
  m.info.final_critic_loss = rd.get<double>();
  m.generator = rd.mlp("generator");
  rd.expect("couplings");
  const auto nc = rd.get<std::size_t>();
  for (std::size_t i = 0; i < nc; ++i) m.couplings.push_back(rd.mlp("coupling"));
  if (m.norm.psi_center.size() != m.dim_psi || m.norm.x_center.size() != m.x_columns ||
      m.norm.y_mean.size() != m.dim_y || m.x_columns > m.dim_x)
    rd.fail("standardisation sizes do not match the declared dimensions");
  return m;
}

// --- monitoring ---------------------------------------------------------------

MonitorStats monitor_stats(std::span<const double> real, std::span<const double> gen) {
  if (real.empty() || gen.empty()) throw Error("monitor statistics need two non-empty samples");
  MonitorStats s;
  auto moments = [](std::span<const double> v) {
    double m = 0.0;
    for (double d : v) m += d;
    m /= static_cast<double>(v.size());
    double m2 = 0.0, m3 = 0.0;
    for (double d : v) {
      m2 += (d - m) * (d - m);
      m3 += (d - m) * (d - m) * (d - m);
    }
    return std::array<double, 3>{m, m2 / static_cast<double>(v.size()), m3 / static_cast<double>(v.size())};
  };
  const auto a = moments(real), b = moments(gen);
  s.mean_diff = std::abs(a[0] - b[0]);
  s.variance_diff = std::abs(a[1] - b[1]);
  s.third_moment_diff = std::abs(a[2] - b[2]);

  std::vector<double> ra(real.begin(), real.end()), gb(gen.begin(), gen.end());
  std::sort(ra.begin(), ra.end());
  std::sort(gb.begin(), gb.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  const double na = static_cast<double>(ra.size()), nb = static_cast<double>(gb.size());
  while (i < ra.size() && j < gb.size()) {
    const double v = std::min(ra[i], gb[j]);
    while (i < ra.size() && ra[i] == v) ++i;
    while (j < gb.size() && gb[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  s.ks_statistic = d;

  const double lo = std::min(ra.front(), gb.front());
  const double hi = std::max(ra.back(), gb.back());
  if (hi > lo) {
    constexpr int kBins = 50;
    std::array<double, kBins> p{}, q{};
    auto bin = [&](double v) { return std::min(kBins - 1, static_cast<int>((v - lo) / (hi - lo) * kBins)); };
    for (double v : ra) p[static_cast<std::size_t>(bin(v))] += 1.0 / na;
    for (double v : gb) q[static_cast<std::size_t>(bin(v))] += 1.0 / nb;
    double js = 0.0;
    for (int k = 0; k < kBins; ++k) {
      const double m = 0.5 * (p[k] + q[k]);
      if (p[k] > 0) js += 0.5 * p[k] * std::log(p[k] / m);
      if (q[k] > 0) js += 0.5 * q[k] * std::log(q[k] / m);
    }
    s.js_divergence = std::max(0.0, js);
  }
  return s;
}

}  // namespace lgso::surrogate
