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

#include "detail.hpp"

namespace lgso::surrogate::detail {

std::vector<diff::Activation> hidden_activations(std::size_t hidden_count) {
  std::vector<diff::Activation> acts(hidden_count, diff::Activation::kTanh);
  if (hidden_count > 0) acts.back() = diff::Activation::kLeakyRelu;
  return acts;
}

std::vector<LayerNodes> constant_layers(Graph& g, const Mlp& mlp, const std::string& prefix) {
  std::vector<LayerNodes> out;
  for (std::size_t i = 0; i < mlp.size(); ++i) {
    const auto tag = prefix + "/" + std::to_string(i);
    out.push_back({g.constant(diff::Tensor(mlp[i].weight), tag + "/w"), g.constant(diff::Tensor(mlp[i].bias), tag + "/b"),
                   mlp[i].activation});
  }
  return out;
}

std::vector<LayerNodes> parameter_layers(Graph& g, std::size_t in, const std::vector<std::size_t>& hidden,
                                         std::size_t out, const std::string& prefix, Rng& rng, bool zero_last) {
  std::vector<std::size_t> widths{in};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(out);
  const auto acts = hidden_activations(hidden.size());
  std::vector<LayerNodes> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const bool last = i + 2 == widths.size();
    const double limit = std::sqrt(6.0 / static_cast<double>(widths[i] + widths[i + 1]));
    Matrix w(widths[i], widths[i + 1]);
    if (last && zero_last)
      w.setZero();
    else
      for (auto& v : w.reshaped()) v = uniform(rng, -limit, limit);
    const auto tag = prefix + "/" + std::to_string(i);
    layers.push_back({g.parameter(tag + "/w", diff::Tensor(std::move(w))),
                      g.parameter(tag + "/b", diff::Tensor(1, widths[i + 1], 0.0)),
                      last ? diff::Activation::kIdentity : acts[i]});
  }
  return layers;
}

Mlp extract_layers(const Graph& g, const std::vector<LayerNodes>& layers) {
  Mlp out;
  for (const auto& l : layers)
    out.push_back({g.parameter_value(l.weight).matrix(), g.parameter_value(l.bias).matrix(), l.activation});
  return out;
}

std::vector<NodeId> layer_parameters(const std::vector<LayerNodes>& layers) {
  std::vector<NodeId> out;
  for (const auto& l : layers) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  }
  return out;
}

Applied apply_layers(Graph& g, NodeId input, const std::vector<LayerNodes>& layers) {
  Applied a;
  NodeId h = input;
  for (const auto& l : layers) {
    NodeId pre = g.dense(h, l.weight, l.bias);
    h = l.activation == diff::Activation::kIdentity ? pre : g.activate(pre, l.activation);
    a.pre.push_back(pre);
    a.post.push_back(h);
  }
  a.output = h;
  return a;
}

NodeId activation_slope(Graph& g, diff::Activation act, NodeId pre, NodeId post) {
  switch (act) {
    case diff::Activation::kTanh:
      return g.add_scalar(g.scale(g.square(post), -1.0), 1.0);
    case diff::Activation::kSigmoid:
      return g.sub(post, g.square(post));
    case diff::Activation::kLeakyRelu:
      return g.leaky_relu_derivative(pre);
    case diff::Activation::kIdentity:
      break;
  }
  throw Error("identity activation has no slope node");
}

namespace {

diff::Tensor row_tensor(const std::vector<double>& v) { return diff::Tensor::row(v); }

NodeId rescale(Graph& g, NodeId a, const std::vector<double>& center, const std::vector<double>& scale) {
  std::vector<double> mul(center.size()), add(center.size());
  for (std::size_t i = 0; i < center.size(); ++i) {
    mul[i] = 1.0 / scale[i];
    add[i] = -center[i] / scale[i];
  }
  return g.affine_cols(a, row_tensor(mul), row_tensor(add));
}

}  // namespace

NodeId conditioning(Graph& g, const Standardization& s, NodeId x, NodeId psi, std::size_t dim_x,
                    std::size_t x_columns) {
  NodeId p = rescale(g, psi, s.psi_center, s.psi_scale);
  if (x_columns == 0) return p;
  NodeId xs = x_columns == dim_x ? x : g.slice_cols(x, 0, x_columns);
  return g.concat_cols({rescale(g, xs, s.x_center, s.x_scale), p});
}

NodeId standardize_y(Graph& g, const Standardization& s, NodeId y) { return rescale(g, y, s.y_mean, s.y_scale); }

NodeId unstandardize_y(Graph& g, const Standardization& s, NodeId y_std) {
  return g.affine_cols(y_std, row_tensor(s.y_scale), row_tensor(s.y_mean));
}

CouplingSplit coupling_split(std::size_t layer, std::size_t dim_y) {
  const std::size_t half = dim_y / 2;
  if (layer % 2 == 0) return {0, half, half, dim_y, true};
  return {dim_y - half, dim_y, 0, dim_y - half, false};
}

namespace {

struct CouplingParts {
  NodeId keep;
  NodeId move;
  NodeId log_scale;
  NodeId shift;
  bool has_keep;
};

CouplingParts coupling_parts(Graph& g, NodeId state, NodeId cond, const std::vector<LayerNodes>& net,
                             const CouplingSplit& sp) {
  CouplingParts p{};
  p.has_keep = sp.keep_end > sp.keep_begin;
  p.move = g.slice_cols(state, sp.move_begin, sp.move_end);
  NodeId in = cond;
  if (p.has_keep) {
    p.keep = g.slice_cols(state, sp.keep_begin, sp.keep_end);
    in = g.concat_cols({p.keep, cond});
  }
  NodeId out = apply_layers(g, in, net).output;
  const std::size_t nb = sp.move_end - sp.move_begin;
  p.log_scale = g.slice_cols(out, 0, nb);
  p.shift = g.slice_cols(out, nb, 2 * nb);
  return p;
}

NodeId reassemble(Graph& g, const CouplingParts& p, NodeId moved, const CouplingSplit& sp) {
  if (!p.has_keep) return moved;
  return sp.keep_first ? g.concat_cols({p.keep, moved}) : g.concat_cols({moved, p.keep});
}

}  // namespace

NodeId flow_forward(Graph& g, NodeId z, NodeId cond, const std::vector<std::vector<LayerNodes>>& nets,
                    std::size_t dim_y) {
  NodeId state = z;
  for (std::size_t l = 0; l < nets.size(); ++l) {
    const auto sp = coupling_split(l, dim_y);
    auto p = coupling_parts(g, state, cond, nets[l], sp);
    NodeId moved = g.add(g.mul(p.move, g.exp(p.log_scale)), p.shift);
    state = reassemble(g, p, moved, sp);
  }
  return state;
}

NodeId flow_inverse(Graph& g, NodeId y_std, NodeId cond, const std::vector<std::vector<LayerNodes>>& nets,
                    std::size_t dim_y, NodeId* log_det) {
  NodeId state = y_std;
  NodeId total{};
  for (std::size_t l = nets.size(); l-- > 0;) {
    const auto sp = coupling_split(l, dim_y);
    auto p = coupling_parts(g, state, cond, nets[l], sp);
    NodeId moved = g.mul(g.sub(p.move, p.shift), g.exp(g.scale(p.log_scale, -1.0)));
    state = reassemble(g, p, moved, sp);
    NodeId ld = g.row_sum(p.log_scale);
    total = total.valid() ? g.add(total, ld) : ld;
  }
  if (log_det) *log_det = total;
  return state;
}

CramerNodes build_cramer(Graph& g, const CramerInputs& in, const std::vector<LayerNodes>& gen,
                         const std::vector<LayerNodes>& critic, std::size_t dim_y, double penalty_weight) {
  auto generate = [&](NodeId z) { return apply_layers(g, g.concat_cols({z, in.cond}), gen).output; };
  auto critic_of = [&](NodeId v) { return apply_layers(g, g.concat_cols({v, in.cond}), critic); };

  CramerNodes c;
  c.g1 = generate(in.z1);
  c.g2 = generate(in.z2);
  const NodeId hy = critic_of(in.y).output;
  const NodeId hg1 = critic_of(c.g1).output;
  const NodeId hg2 = critic_of(c.g2).output;

  // f(v) = |h(v) - h(g2)| - |h(v)|
  auto witness = [&](NodeId hv) { return g.sub(g.row_norm(g.sub(hv, hg2)), g.row_norm(hv)); };
  c.surrogate = g.mean(g.sub(witness(hy), witness(hg1)));

  c.interpolate = g.add(g.mul_col(in.y, in.alpha), g.mul_col(c.g1, in.one_minus_alpha));
  const auto hv = critic_of(c.interpolate);
  const NodeId h = hv.output;
  c.witness = witness(h);
  const NodeId d = g.sub(h, hg2);
  const NodeId u = g.sub(g.div_col(d, g.row_norm(d)), g.div_col(h, g.row_norm(h)));
  std::vector<NodeId> parts;
  for (std::size_t j = 0; j < dim_y; ++j) {
    NodeId t = g.matmul(in.ones, g.slice_rows(critic[0].weight, j, j + 1));
    for (std::size_t l = 0; l < critic.size(); ++l) {
      if (l > 0) t = g.matmul(t, critic[l].weight);
      if (critic[l].activation != diff::Activation::kIdentity)
        t = g.mul(t, activation_slope(g, critic[l].activation, hv.pre[l], hv.post[l]));
    }
    parts.push_back(g.row_sum(g.mul(u, t)));
  }
  c.witness_slope = dim_y == 1 ? parts[0] : g.concat_cols(parts);
  c.penalty = g.mean(g.square(g.add_scalar(g.row_norm(c.witness_slope), -1.0)));
  c.critic_loss = g.add(g.scale(c.surrogate, -1.0), g.scale(c.penalty, penalty_weight));

  // energy distance between data and generator samples
  c.generator_loss =
      g.mean(g.sub(g.add(g.row_norm(g.sub(hy, hg1)), g.row_norm(g.sub(hy, hg2))), g.row_norm(g.sub(hg1, hg2))));
  return c;
}

}  // namespace lgso::surrogate::detail
