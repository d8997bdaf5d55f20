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

namespace lgso::surrogate {

using diff::Graph;
using diff::NodeId;
using diff::Tensor;

GradEstimate surrogate_grad(const SurrogateModel& model, std::span<const double> psi, std::size_t samples,
                            const InputSampler& sample_x, const ObjectiveBuilder& objective, Rng& rng) {
  if (samples == 0) throw ConfigError("surrogate gradient needs at least one sample");
  if (psi.size() != model.dim_psi)
    throw ShapeError("surrogate gradient at psi of dimension " + std::to_string(psi.size()) + ", model expects " +
                     std::to_string(model.dim_psi));
  const Matrix z = model.draw_noise(samples, rng);
  Matrix x(samples, model.dim_x);
  for (Eigen::Index r = 0; r < x.rows(); ++r) sample_x(rng, {x.row(r).data(), model.dim_x});

  Graph g;
  const NodeId zn = g.input("z"), xn = g.input("x");
  const NodeId pn = g.input("psi", true);
  const NodeId y = model.build_sample(g, zn, xn, g.broadcast_rows(pn, samples));
  const NodeId r = objective(g, y, xn);
  g.set_input(zn, Tensor(z));
  g.set_input(xn, Tensor(x));
  g.set_input(pn, Tensor::row(psi));
  const NodeId t[] = {r};
  g.forward_to(t);
  const NodeId wrt[] = {pn};
  const auto grads = g.backward(r, wrt);

  GradEstimate est;
  est.samples = samples;
  est.objective = g.value(r).item();
  const auto gv = grads.at(pn).values();
  est.gradient.assign(gv.begin(), gv.end());
  for (std::size_t i = 0; i < est.gradient.size(); ++i)
    if (!std::isfinite(est.gradient[i]))
      throw NumericError("surrogate gradient component " + std::to_string(i) + " is not finite");
  if (!std::isfinite(est.objective)) throw NumericError("surrogate objective estimate is not finite");
  return est;
}

GradEstimate surrogate_grad(const SurrogateModel& model, std::span<const double> psi, std::size_t samples,
                            const sim::Problem& problem, Rng& rng) {
  return surrogate_grad(
      model, psi, samples, [&](Rng& r, std::span<double> x) { problem.sample_input(r, x); },
      [&](Graph& g, NodeId y, NodeId x) { return problem.objective(g, y, x); }, rng);
}

}  // namespace lgso::surrogate
