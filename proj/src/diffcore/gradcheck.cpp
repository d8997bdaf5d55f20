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

#include "lgso/diffcore.hpp"

namespace lgso::diff {

double relative_error(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-6});
  return std::abs(a - b) / denom;
}

GradCheckResult finite_diff_check(const std::function<double(std::span<const double>)>& f,
                                  const std::function<std::vector<double>(std::span<const double>)>& grad,
                                  std::span<const double> point, double h) {
  if (!(h > 0.0)) throw Error("finite_diff_check: step must be positive");
  const std::vector<double> analytic = grad(point);
  if (analytic.size() != point.size())
    throw ShapeError("finite_diff_check: gradient has " + std::to_string(analytic.size()) +
                     " components, point has " + std::to_string(point.size()));
  std::vector<double> probe(point.begin(), point.end());
  GradCheckResult res;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double fp = f(probe);
    probe[i] = orig - h;
    const double fm = f(probe);
    probe[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericError("finite_diff_check: non-finite value probing component " + std::to_string(i));
    const double numeric = (fp - fm) / (2.0 * h);
    res.max_rel_error = std::max(res.max_rel_error, relative_error(analytic[i], numeric));
    ++res.checked;
  }
  return res;
}

GradCheckResult finite_diff_check(Graph& graph, NodeId loss, NodeId leaf, double h, bool skip_kinks) {
  std::vector<std::size_t> all(graph.leaf_value(leaf).size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return finite_diff_check(graph, loss, leaf, h, all, skip_kinks);
}

GradCheckResult finite_diff_check(Graph& graph, NodeId loss, NodeId leaf, double h,
                                  std::span<const std::size_t> components, bool skip_kinks) {
  if (!(h > 0.0)) throw Error("finite_diff_check: step must be positive");
  Tensor& values = graph.leaf_value(leaf);
  const NodeId targets[] = {loss};
  graph.forward_to(targets);
  const std::uint64_t base_kinks = graph.kink_signature();
  const NodeId wrt[] = {leaf};
  const Tensor analytic = graph.backward(loss, wrt).at(leaf);

  GradCheckResult res;
  auto vals = values.values();
  for (std::size_t i : components) {
    if (i >= vals.size()) throw ShapeError("finite_diff_check: component " + std::to_string(i) + " out of range");
    const double orig = vals[i];
    vals[i] = orig + h;
    graph.forward_to(targets);
    const double fp = graph.value(loss).item();
    const std::uint64_t kp = graph.kink_signature();
    vals[i] = orig - h;
    graph.forward_to(targets);
    const double fm = graph.value(loss).item();
    const std::uint64_t km = graph.kink_signature();
    vals[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericError("finite_diff_check: non-finite loss probing component " + std::to_string(i));
    if (skip_kinks && (kp != base_kinks || km != base_kinks)) {
      ++res.skipped;
      continue;
    }
    const double numeric = (fp - fm) / (2.0 * h);
    res.max_rel_error = std::max(res.max_rel_error, relative_error(analytic.values()[i], numeric));
    ++res.checked;
  }
  graph.forward_to(targets);
  return res;
}

}  // namespace lgso::diff
