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

#include "lgso/diffcore.hpp"

namespace lgso::diff {

void adam_update(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
                 std::span<const std::string_view> names, AdamState& state) {
  if (params.size() != grads.size() || names.size() != params.size())
    throw ShapeError("adam_update: " + std::to_string(params.size()) + " params, " +
                     std::to_string(grads.size()) + " grads, " + std::to_string(names.size()) + " names");
  auto label = [&](std::size_t i) { return std::string(names[i]); };
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->rows() != grads[i]->rows() || params[i]->cols() != grads[i]->cols())
      throw ShapeError("adam_update: gradient for '" + label(i) + "' has shape " + shape_string(*grads[i]) +
                       ", parameter has " + shape_string(*params[i]));
    if (!grads[i]->all_finite()) throw NumericError("adam_update: non-finite gradient for '" + label(i) + "'");
  }
  if (state.m_.empty()) {
    for (auto* p : params) {
      state.m_.emplace_back(p->rows(), p->cols(), 0.0);
      state.v_.emplace_back(p->rows(), p->cols(), 0.0);
    }
  } else if (state.m_.size() != params.size()) {
    throw ShapeError("adam_update: state tracks " + std::to_string(state.m_.size()) + " parameters, got " +
                     std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i)
    if (state.m_[i].rows() != params[i]->rows() || state.m_[i].cols() != params[i]->cols())
      throw ShapeError("adam_update: moment shape mismatch for '" + label(i) + "'");

  const AdamConfig& c = state.config_;
  state.t_ += 1;
  const double t = static_cast<double>(state.t_);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto m = state.m_[i].matrix().array();
    auto v = state.v_[i].matrix().array();
    const auto g = grads[i]->matrix().array();
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.square();
    params[i]->matrix().array() -= c.lr * (m / bc1) / ((v / bc2).sqrt() + c.eps);
  }
}

void adam_update(std::vector<double>& params, std::span<const double> grads, AdamState& state,
                 std::string_view name) {
  if (grads.size() != params.size())
    throw ShapeError("adam_update: " + std::to_string(grads.size()) + " gradients for " +
                     std::to_string(params.size()) + " parameters");
  Tensor p = Tensor::row(params);
  const Tensor g = Tensor::row(grads);
  Tensor* ps[] = {&p};
  const Tensor* gs[] = {&g};
  const std::string_view names[] = {name};
  adam_update(ps, gs, names, state);
  std::copy(p.values().begin(), p.values().end(), params.begin());
}

void adam_update(Graph& graph, std::span<const NodeId> params, const Gradients& grads, AdamState& state) {
  std::vector<Tensor*> p;
  std::vector<const Tensor*> g;
  std::vector<std::string_view> names;
  p.reserve(params.size());
  for (auto id : params) {
    p.push_back(&graph.parameter_value(id));
    g.push_back(&grads.at(id));
    names.push_back(graph.name(id));
  }
  adam_update(p, g, names, state);
}

}  // namespace lgso::diff
