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

// Minimal reverse-mode automatic differentiation over dense row-major
// matrices. A Graph is built once (define-then-run), evaluated with forward()
// and differentiated with backward(). Gradients are available for trainable
// parameters and for any input declared differentiable.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "lgso/error.hpp"

namespace lgso::diff {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense tensor of rank <= 2 stored row-major. Scalars are 1x1 and vectors
/// are single rows.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);
  explicit Tensor(Matrix m) : m_(std::move(m)) {}

  static Tensor scalar(double v) { return Tensor(1, 1, v); }
  static Tensor row(std::span<const double> v);

  std::vector<std::size_t> shape() const { return {rows(), cols()}; }
  std::size_t rows() const { return static_cast<std::size_t>(m_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(m_.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(m_.size()); }

  std::span<const double> values() const { return {m_.data(), size()}; }
  std::span<double> values() { return {m_.data(), size()}; }

  double operator()(std::size_t r, std::size_t c) const { return m_(r, c); }
  double& operator()(std::size_t r, std::size_t c) { return m_(r, c); }

  /// Value of a 1x1 tensor.
  double item() const;

  const Matrix& matrix() const { return m_; }
  Matrix& matrix() { return m_; }

  bool all_finite() const { return m_.allFinite(); }
  bool operator==(const Tensor& o) const {
    return m_.rows() == o.m_.rows() && m_.cols() == o.m_.cols() && m_ == o.m_;
  }

 private:
  Matrix m_;
};

std::string shape_string(const Tensor& t);

struct NodeId {
  std::uint32_t index = UINT32_MAX;
  bool valid() const { return index != UINT32_MAX; }
  auto operator<=>(const NodeId&) const = default;
};

enum class Activation { kIdentity, kTanh, kSigmoid, kLeakyRelu };

inline constexpr double kDefaultLeakySlope = 0.01;

class Gradients {
 public:
  bool contains(NodeId id) const;
  const Tensor& at(NodeId id) const;
  const Tensor& at(std::string_view name) const;
  std::size_t size() const { return entries_.size(); }

 private:
  friend class Graph;
  struct Entry {
    NodeId id;
    std::string name;
    Tensor grad;
  };
  std::vector<Entry> entries_;
};

class Graph {
 public:
  Graph() = default;

  // Leaves.
  NodeId input(std::string name, bool differentiable = false);
  NodeId parameter(std::string name, Tensor init);
  NodeId constant(Tensor value, std::string label = {});

  // Linear algebra and elementwise arithmetic.
  NodeId matmul(NodeId a, NodeId b);
  NodeId add_bias(NodeId a, NodeId bias_row);
  NodeId dense(NodeId x, NodeId weight, NodeId bias) { return add_bias(matmul(x, weight), bias); }
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  /// a (n x m) times column c (n x 1), broadcast over columns.
  NodeId mul_col(NodeId a, NodeId c);
  /// a (n x m) divided by column c (n x 1), broadcast over columns.
  NodeId div_col(NodeId a, NodeId c);
  NodeId scale(NodeId a, double s);
  NodeId add_scalar(NodeId a, double s);
  /// a * scale_row + shift_row with constant rows (1 x m).
  NodeId affine_cols(NodeId a, Tensor scale_row, Tensor shift_row);

  // Pointwise nonlinearities.
  NodeId activate(NodeId a, Activation act, double leaky_slope = kDefaultLeakySlope);
  NodeId tanh(NodeId a) { return activate(a, Activation::kTanh); }
  NodeId sigmoid(NodeId a) { return activate(a, Activation::kSigmoid); }
  NodeId leaky_relu(NodeId a, double slope = kDefaultLeakySlope) {
    return activate(a, Activation::kLeakyRelu, slope);
  }
  /// Pointwise derivative of the leaky rectifier, 1 or slope. Piecewise
  /// constant, so it passes no gradient.
  NodeId leaky_relu_derivative(NodeId a, double slope = kDefaultLeakySlope);
  NodeId exp(NodeId a);
  NodeId square(NodeId a);
  NodeId sqrt(NodeId a);

  // Shape manipulation.
  NodeId concat_cols(std::vector<NodeId> parts);
  NodeId slice_cols(NodeId a, std::size_t begin, std::size_t end);
  NodeId slice_rows(NodeId a, std::size_t begin, std::size_t end);
  /// Repeat a single row n times.
  NodeId broadcast_rows(NodeId a, std::size_t n);

  // Reductions.
  NodeId sum(NodeId a);
  NodeId mean(NodeId a);
  NodeId row_sum(NodeId a);
  /// Euclidean norm of every row, sqrt(sum a^2 + 1e-12).
  NodeId row_norm(NodeId a);

  /// Binds an input by node or by name. Bindings persist across forward calls.
  void set_input(NodeId id, Tensor value);
  void set_input(std::string_view name, Tensor value);

  /// Evaluates every node.
  void forward(const std::map<std::string, Tensor>& inputs = {});
  /// Evaluates only the ancestors of `targets`.
  void forward_to(std::span<const NodeId> targets);

  const Tensor& value(NodeId id) const;

  /// Gradient of the scalar `loss` with respect to every parameter and every
  /// differentiable input.
  Gradients backward(NodeId loss);
  /// Gradient restricted to `wrt`; parts of the graph that do not lead to a
  /// requested leaf are skipped.
  Gradients backward(NodeId loss, std::span<const NodeId> wrt);

  Tensor& parameter_value(NodeId id);
  /// Mutable value of a bound input or a parameter.
  Tensor& leaf_value(NodeId id);
  const Tensor& parameter_value(NodeId id) const;
  std::vector<NodeId> parameters() const;
  NodeId find(std::string_view name) const;
  const std::string& name(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }

  /// Hash of the sign pattern of every leaky-rectifier input in the last
  /// forward pass. Finite differences are only meaningful between probes that
  /// share a pattern.
  std::uint64_t kink_signature() const;

 private:
  enum class Op : std::uint8_t {
    kInput, kParameter, kConstant,
    kMatMul, kAddBias, kAdd, kSub, kMul, kMulCol, kDivCol, kScale, kAddScalar, kAffineCols,
    kTanh, kSigmoid, kLeakyRelu, kLeakyDeriv, kIdentity, kExp, kSquare, kSqrt,
    kConcat, kSliceCols, kSliceRows, kBroadcastRows,
    kSum, kMean, kRowSum, kRowNorm,
  };

  struct NodeRec {
    NodeRec(Op o, std::vector<std::uint32_t> inputs = {}) : op(o), in(std::move(inputs)) {}
    Op op;
    std::vector<std::uint32_t> in;
    double attr = 0.0;
    std::size_t lo = 0;
    std::size_t hi = 0;
    std::string name;
    Tensor aux_a;
    Tensor aux_b;
    Tensor value;
    std::uint64_t stamp = 0;
    bool differentiable = false;
    bool bound = false;
  };

  NodeId push(NodeRec rec);
  const NodeRec& rec(NodeId id) const;
  void check_id(NodeId id) const;
  void evaluate(std::uint32_t i);
  [[noreturn]] void fail(std::uint32_t i, const std::string& what) const;
  static const char* op_name(Op op);

  std::vector<NodeRec> nodes_;
  std::uint64_t generation_ = 0;
};

/// Result of comparing reverse-mode gradients against central differences.
struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // components whose probes crossed a kink
};

/// Relative error used throughout: |a - b| / max(|a|, |b|, 1e-6).
double relative_error(double a, double b);

/// Compares `grad(point)` with central differences of `f` with step `h`.
/// Throws NumericError if f is non-finite at a probe.
GradCheckResult finite_diff_check(const std::function<double(std::span<const double>)>& f,
                                  const std::function<std::vector<double>(std::span<const double>)>& grad,
                                  std::span<const double> point, double h);

/// Graph flavour: perturbs the value of `leaf` (parameter or input) in place,
/// re-running forward, and compares with backward(loss). When `skip_kinks` is
/// set, components whose probes change the leaky-rectifier sign pattern are
/// skipped and counted.
GradCheckResult finite_diff_check(Graph& graph, NodeId loss, NodeId leaf, double h,
                                  bool skip_kinks = true);
/// As above, probing only the listed flat component indices.
GradCheckResult finite_diff_check(Graph& graph, NodeId loss, NodeId leaf, double h,
                                  std::span<const std::size_t> components, bool skip_kinks = true);

/// Adam hyperparameters.
struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment accumulators for a fixed list of parameters.
class AdamState {
 public:
  explicit AdamState(AdamConfig config = {}) : config_(config) {}
  const AdamConfig& config() const { return config_; }
  std::uint64_t step() const { return t_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

 private:
  friend void adam_update(std::span<Tensor* const>, std::span<const Tensor* const>,
                          std::span<const std::string_view>, AdamState&);
  AdamConfig config_;
  std::uint64_t t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

/// One Adam step over params[i] with grads[i]. Every gradient is checked for
/// finiteness before any parameter is touched; the error names the offender.
void adam_update(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
                 std::span<const std::string_view> names, AdamState& state);

/// Convenience: one step on a plain vector (named `name` in errors).
void adam_update(std::vector<double>& params, std::span<const double> grads, AdamState& state,
                 std::string_view name = "params");

/// Convenience: updates the listed graph parameters from `grads`.
void adam_update(Graph& graph, std::span<const NodeId> params, const Gradients& grads,
                 AdamState& state);

}  // namespace lgso::diff
