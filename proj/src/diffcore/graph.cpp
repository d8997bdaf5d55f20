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
#include <sstream>

#include "lgso/diffcore.hpp"

namespace lgso::diff {

namespace {

constexpr double kNormFloor = 1e-12;

std::string dims(const Tensor& t) { return shape_string(t); }

}  // namespace

// ---------------------------------------------------------------------------
// Gradients

bool Gradients::contains(NodeId id) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.id == id; });
}

const Tensor& Gradients::at(NodeId id) const {
  for (const auto& e : entries_)
    if (e.id == id) return e.grad;
  throw Error("no gradient recorded for node #" + std::to_string(id.index));
}

const Tensor& Gradients::at(std::string_view name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e.grad;
  throw Error("no gradient recorded for '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Construction

NodeId Graph::push(NodeRec rec) {
  for (auto i : rec.in) check_id(NodeId{i});
  nodes_.push_back(std::move(rec));
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Graph::check_id(NodeId id) const {
  if (!id.valid() || id.index >= nodes_.size())
    throw Error("invalid node id " + std::to_string(id.index));
}

const Graph::NodeRec& Graph::rec(NodeId id) const {
  check_id(id);
  return nodes_[id.index];
}

NodeId Graph::input(std::string name, bool differentiable) {
  if (name.empty()) throw Error("inputs must be named");
  if (find(name).valid()) throw Error("duplicate node name '" + name + "'");
  NodeRec r{Op::kInput, {}};
  r.name = std::move(name);
  r.differentiable = differentiable;
  return push(std::move(r));
}

NodeId Graph::parameter(std::string name, Tensor init) {
  if (name.empty()) throw Error("parameters must be named");
  if (find(name).valid()) throw Error("duplicate node name '" + name + "'");
  NodeRec r{Op::kParameter, {}};
  r.name = std::move(name);
  r.value = std::move(init);
  r.differentiable = true;
  r.bound = true;
  return push(std::move(r));
}

NodeId Graph::constant(Tensor value, std::string label) {
  NodeRec r{Op::kConstant, {}};
  r.name = std::move(label);
  r.value = std::move(value);
  r.bound = true;
  return push(std::move(r));
}

NodeId Graph::matmul(NodeId a, NodeId b) { return push({Op::kMatMul, {a.index, b.index}}); }
NodeId Graph::add_bias(NodeId a, NodeId b) { return push({Op::kAddBias, {a.index, b.index}}); }
NodeId Graph::add(NodeId a, NodeId b) { return push({Op::kAdd, {a.index, b.index}}); }
NodeId Graph::sub(NodeId a, NodeId b) { return push({Op::kSub, {a.index, b.index}}); }
NodeId Graph::mul(NodeId a, NodeId b) { return push({Op::kMul, {a.index, b.index}}); }
NodeId Graph::mul_col(NodeId a, NodeId c) { return push({Op::kMulCol, {a.index, c.index}}); }
NodeId Graph::div_col(NodeId a, NodeId c) { return push({Op::kDivCol, {a.index, c.index}}); }

NodeId Graph::scale(NodeId a, double s) {
  NodeRec r{Op::kScale, {a.index}};
  r.attr = s;
  return push(std::move(r));
}

NodeId Graph::add_scalar(NodeId a, double s) {
  NodeRec r{Op::kAddScalar, {a.index}};
  r.attr = s;
  return push(std::move(r));
}

NodeId Graph::affine_cols(NodeId a, Tensor scale_row, Tensor shift_row) {
  if (scale_row.rows() != 1 || shift_row.rows() != 1 || scale_row.cols() != shift_row.cols())
    throw ShapeError("affine_cols: scale " + dims(scale_row) + " and shift " + dims(shift_row) +
                     " must be matching rows");
  NodeRec r{Op::kAffineCols, {a.index}};
  r.aux_a = std::move(scale_row);
  r.aux_b = std::move(shift_row);
  return push(std::move(r));
}

NodeId Graph::activate(NodeId a, Activation act, double leaky_slope) {
  switch (act) {
    case Activation::kIdentity:
      return push({Op::kIdentity, {a.index}});
    case Activation::kTanh:
      return push({Op::kTanh, {a.index}});
    case Activation::kSigmoid:
      return push({Op::kSigmoid, {a.index}});
    case Activation::kLeakyRelu: {
      NodeRec r{Op::kLeakyRelu, {a.index}};
      r.attr = leaky_slope;
      return push(std::move(r));
    }
  }
  throw Error("unknown activation");
}

NodeId Graph::leaky_relu_derivative(NodeId a, double slope) {
  NodeRec r{Op::kLeakyDeriv, {a.index}};
  r.attr = slope;
  return push(std::move(r));
}

NodeId Graph::exp(NodeId a) { return push({Op::kExp, {a.index}}); }
NodeId Graph::square(NodeId a) { return push({Op::kSquare, {a.index}}); }
NodeId Graph::sqrt(NodeId a) { return push({Op::kSqrt, {a.index}}); }

NodeId Graph::concat_cols(std::vector<NodeId> parts) {
  if (parts.empty()) throw ShapeError("concat_cols of nothing");
  NodeRec r{Op::kConcat, {}};
  for (auto p : parts) r.in.push_back(p.index);
  return push(std::move(r));
}

NodeId Graph::slice_cols(NodeId a, std::size_t begin, std::size_t end) {
  if (end <= begin) throw ShapeError("slice_cols: empty range");
  NodeRec r{Op::kSliceCols, {a.index}};
  r.lo = begin;
  r.hi = end;
  return push(std::move(r));
}

NodeId Graph::slice_rows(NodeId a, std::size_t begin, std::size_t end) {
  if (end <= begin) throw ShapeError("slice_rows: empty range");
  NodeRec r{Op::kSliceRows, {a.index}};
  r.lo = begin;
  r.hi = end;
  return push(std::move(r));
}

NodeId Graph::broadcast_rows(NodeId a, std::size_t n) {
  if (n == 0) throw ShapeError("broadcast_rows: zero rows");
  NodeRec r{Op::kBroadcastRows, {a.index}};
  r.lo = n;
  return push(std::move(r));
}

NodeId Graph::sum(NodeId a) { return push({Op::kSum, {a.index}}); }
NodeId Graph::mean(NodeId a) { return push({Op::kMean, {a.index}}); }
NodeId Graph::row_sum(NodeId a) { return push({Op::kRowSum, {a.index}}); }
NodeId Graph::row_norm(NodeId a) { return push({Op::kRowNorm, {a.index}}); }

// ---------------------------------------------------------------------------
// Lookup

void Graph::set_input(NodeId id, Tensor value) {
  check_id(id);
  auto& r = nodes_[id.index];
  if (r.op != Op::kInput) throw Error("node '" + r.name + "' is not an input");
  r.value = std::move(value);
  r.bound = true;
}

void Graph::set_input(std::string_view name, Tensor value) {
  NodeId id = find(name);
  if (!id.valid()) throw Error("no input named '" + std::string(name) + "'");
  set_input(id, std::move(value));
}

NodeId Graph::find(std::string_view name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto op = nodes_[i].op;
    if ((op == Op::kInput || op == Op::kParameter) && nodes_[i].name == name)
      return NodeId{static_cast<std::uint32_t>(i)};
  }
  return NodeId{};
}

const std::string& Graph::name(NodeId id) const { return rec(id).name; }

const Tensor& Graph::value(NodeId id) const {
  const auto& r = rec(id);
  if (r.op != Op::kParameter && r.op != Op::kConstant && r.stamp != generation_)
    throw Error("node #" + std::to_string(id.index) + " has not been evaluated");
  return r.value;
}

Tensor& Graph::parameter_value(NodeId id) {
  check_id(id);
  auto& r = nodes_[id.index];
  if (r.op != Op::kParameter) throw Error("node #" + std::to_string(id.index) + " is not a parameter");
  return r.value;
}

Tensor& Graph::leaf_value(NodeId id) {
  check_id(id);
  auto& r = nodes_[id.index];
  if (r.op != Op::kParameter && r.op != Op::kInput)
    throw Error("node #" + std::to_string(id.index) + " is not a leaf");
  if (!r.bound) throw Error("input '" + r.name + "' not bound");
  return r.value;
}

const Tensor& Graph::parameter_value(NodeId id) const {
  const auto& r = rec(id);
  if (r.op != Op::kParameter) throw Error("node #" + std::to_string(id.index) + " is not a parameter");
  return r.value;
}

std::vector<NodeId> Graph::parameters() const {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].op == Op::kParameter) out.push_back(NodeId{static_cast<std::uint32_t>(i)});
  return out;
}

std::uint64_t Graph::kink_signature() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& r : nodes_) {
    if (r.op != Op::kLeakyRelu && r.op != Op::kLeakyDeriv) continue;
    const auto& in = nodes_[r.in[0]].value;
    for (double v : in.values()) {
      h ^= (v > 0.0) ? 0x9dULL : 0x3bULL;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

const char* Graph::op_name(Op op) {
  switch (op) {
    case Op::kInput: return "input";
    case Op::kParameter: return "parameter";
    case Op::kConstant: return "constant";
    case Op::kMatMul: return "matmul";
    case Op::kAddBias: return "add_bias";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kMulCol: return "mul_col";
    case Op::kDivCol: return "div_col";
    case Op::kScale: return "scale";
    case Op::kAddScalar: return "add_scalar";
    case Op::kAffineCols: return "affine_cols";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kLeakyRelu: return "leaky_relu";
    case Op::kLeakyDeriv: return "leaky_relu_derivative";
    case Op::kIdentity: return "identity";
    case Op::kExp: return "exp";
    case Op::kSquare: return "square";
    case Op::kSqrt: return "sqrt";
    case Op::kConcat: return "concat_cols";
    case Op::kSliceCols: return "slice_cols";
    case Op::kSliceRows: return "slice_rows";
    case Op::kBroadcastRows: return "broadcast_rows";
    case Op::kSum: return "sum";
    case Op::kMean: return "mean";
    case Op::kRowSum: return "row_sum";
    case Op::kRowNorm: return "row_norm";
  }
  return "?";
}

void Graph::fail(std::uint32_t i, const std::string& what) const {
  std::ostringstream os;
  os << "node #" << i << " (" << op_name(nodes_[i].op);
  if (!nodes_[i].name.empty()) os << " '" << nodes_[i].name << "'";
  os << "): " << what;
  throw ShapeError(os.str());
}

// ---------------------------------------------------------------------------
// Forward

void Graph::forward(const std::map<std::string, Tensor>& inputs) {
  for (const auto& [name, t] : inputs) set_input(name, t);
  ++generation_;
  for (std::uint32_t i = 0; i < nodes_.size(); ++i) evaluate(i);
}

void Graph::forward_to(std::span<const NodeId> targets) {
  std::vector<char> need(nodes_.size(), 0);
  std::uint32_t top = 0;
  for (auto t : targets) {
    check_id(t);
    need[t.index] = 1;
    top = std::max(top, t.index);
  }
  for (std::int64_t i = top; i >= 0; --i) {
    if (!need[i]) continue;
    for (auto j : nodes_[i].in) need[j] = 1;
  }
  ++generation_;
  for (std::uint32_t i = 0; i <= top && i < nodes_.size(); ++i)
    if (need[i]) evaluate(i);
}

void Graph::evaluate(std::uint32_t i) {
  NodeRec& r = nodes_[i];
  auto in = [&](std::size_t k) -> const Matrix& { return nodes_[r.in[k]].value.matrix(); };
  Matrix& out = r.value.matrix();
  switch (r.op) {
    case Op::kInput:
      if (!r.bound) fail(i, "input not bound");
      break;
    case Op::kParameter:
    case Op::kConstant:
      break;
    case Op::kMatMul: {
      const Matrix& a = in(0);
      const Matrix& b = in(1);
      if (a.cols() != b.rows())
        fail(i, "inner dimensions differ (" + dims(nodes_[r.in[0]].value) + " vs " +
                    dims(nodes_[r.in[1]].value) + ")");
      out.resize(a.rows(), b.cols());
      out.noalias() = a * b;
      break;
    }
    case Op::kAddBias: {
      const Matrix& a = in(0);
      const Matrix& b = in(1);
      if (b.rows() != 1 || b.cols() != a.cols())
        fail(i, "bias " + dims(nodes_[r.in[1]].value) + " does not fit " + dims(nodes_[r.in[0]].value));
      out = a.rowwise() + b.row(0);
      break;
    }
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul: {
      const Matrix& a = in(0);
      const Matrix& b = in(1);
      if (a.rows() != b.rows() || a.cols() != b.cols())
        fail(i, "operands " + dims(nodes_[r.in[0]].value) + " and " + dims(nodes_[r.in[1]].value) +
                    " differ");
      if (r.op == Op::kAdd)
        out = a + b;
      else if (r.op == Op::kSub)
        out = a - b;
      else
        out = a.cwiseProduct(b);
      break;
    }
    case Op::kMulCol:
    case Op::kDivCol: {
      const Matrix& a = in(0);
      const Matrix& c = in(1);
      if (c.cols() != 1 || c.rows() != a.rows())
        fail(i, "column " + dims(nodes_[r.in[1]].value) + " does not fit " + dims(nodes_[r.in[0]].value));
      if (r.op == Op::kMulCol)
        out = a.array().colwise() * c.col(0).array();
      else
        out = a.array().colwise() / c.col(0).array();
      break;
    }
    case Op::kScale:
      out = in(0) * r.attr;
      break;
    case Op::kAddScalar:
      out = in(0).array() + r.attr;
      break;
    case Op::kAffineCols: {
      const Matrix& a = in(0);
      if (a.cols() != r.aux_a.matrix().cols())
        fail(i, "affine row of width " + std::to_string(r.aux_a.cols()) + " does not fit " +
                    dims(nodes_[r.in[0]].value));
      out = (a.array().rowwise() * r.aux_a.matrix().row(0).array()).rowwise() +
            r.aux_b.matrix().row(0).array();
      break;
    }
    case Op::kTanh:
      // exp form: vectorised for double, absolute error ~1e-16
      out = 1.0 - 2.0 / ((2.0 * in(0).array()).exp() + 1.0);
      break;
    case Op::kSigmoid:
      out = (1.0 + (-in(0).array()).exp()).inverse();
      break;
    case Op::kLeakyRelu: {
      const double s = r.attr;
      out = in(0).unaryExpr([s](double v) { return v > 0.0 ? v : s * v; });
      break;
    }
    case Op::kLeakyDeriv: {
      const double s = r.attr;
      out = in(0).unaryExpr([s](double v) { return v > 0.0 ? 1.0 : s; });
      break;
    }
    case Op::kIdentity:
      out = in(0);
      break;
    case Op::kExp:
      out = in(0).array().exp();
      break;
    case Op::kSquare:
      out = in(0).array().square();
      break;
    case Op::kSqrt:
      if ((in(0).array() < 0.0).any()) fail(i, "negative argument");
      out = in(0).array().sqrt();
      break;
    case Op::kConcat: {
      const Eigen::Index rows = in(0).rows();
      Eigen::Index cols = 0;
      for (std::size_t k = 0; k < r.in.size(); ++k) {
        if (in(k).rows() != rows)
          fail(i, "part " + std::to_string(k) + " has " + std::to_string(in(k).rows()) + " rows, expected " +
                      std::to_string(rows));
        cols += in(k).cols();
      }
      out.resize(rows, cols);
      Eigen::Index c0 = 0;
      for (std::size_t k = 0; k < r.in.size(); ++k) {
        out.middleCols(c0, in(k).cols()) = in(k);
        c0 += in(k).cols();
      }
      break;
    }
    case Op::kSliceCols: {
      const Matrix& a = in(0);
      if (r.hi > static_cast<std::size_t>(a.cols())) fail(i, "column range exceeds " + dims(nodes_[r.in[0]].value));
      out = a.middleCols(r.lo, r.hi - r.lo);
      break;
    }
    case Op::kSliceRows: {
      const Matrix& a = in(0);
      if (r.hi > static_cast<std::size_t>(a.rows())) fail(i, "row range exceeds " + dims(nodes_[r.in[0]].value));
      out = a.middleRows(r.lo, r.hi - r.lo);
      break;
    }
    case Op::kBroadcastRows: {
      const Matrix& a = in(0);
      if (a.rows() != 1) fail(i, "expects a single row, got " + dims(nodes_[r.in[0]].value));
      out = a.replicate(static_cast<Eigen::Index>(r.lo), 1);
      break;
    }
    case Op::kSum:
      out.resize(1, 1);
      out(0, 0) = in(0).sum();
      break;
    case Op::kMean:
      if (in(0).size() == 0) fail(i, "mean of empty tensor");
      out.resize(1, 1);
      out(0, 0) = in(0).mean();
      break;
    case Op::kRowSum:
      out = in(0).rowwise().sum();
      break;
    case Op::kRowNorm:
      out = (in(0).rowwise().squaredNorm().array() + kNormFloor).sqrt();
      break;
  }
  r.stamp = generation_;
}

// ---------------------------------------------------------------------------
// Backward

Gradients Graph::backward(NodeId loss) {
  std::vector<NodeId> wrt;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].differentiable) wrt.push_back(NodeId{static_cast<std::uint32_t>(i)});
  return backward(loss, wrt);
}

Gradients Graph::backward(NodeId loss, std::span<const NodeId> wrt) {
  check_id(loss);
  const std::uint32_t L = loss.index;
  if (nodes_[L].stamp != generation_ || generation_ == 0)
    throw Error("backward called before forward evaluated node #" + std::to_string(L));
  if (nodes_[L].value.size() != 1)
    throw ShapeError("backward needs a scalar loss, node #" + std::to_string(L) + " has shape " +
                     dims(nodes_[L].value));

  const std::size_t n = L + 1;
  // reach[i]: node i depends on a requested leaf.
  std::vector<char> reach(n, 0);
  for (auto w : wrt) {
    check_id(w);
    if (!nodes_[w.index].differentiable)
      throw Error("node #" + std::to_string(w.index) + " is not differentiable");
    if (w.index < n) reach[w.index] = 1;
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    if (reach[i]) continue;
    for (auto j : nodes_[i].in)
      if (reach[j]) {
        reach[i] = 1;
        break;
      }
  }
  // anc[i]: node i feeds the loss.
  std::vector<char> anc(n, 0);
  anc[L] = 1;
  for (std::int64_t i = L; i >= 0; --i)
    if (anc[i])
      for (auto j : nodes_[i].in) anc[j] = 1;

  std::vector<Matrix> adj(n);
  std::vector<char> has(n, 0);
  auto live = [&](std::uint32_t j) { return reach[j] && anc[j]; };
  auto accumulate = [&](std::uint32_t j, const auto& expr) {
    if (has[j]) {
      adj[j] += expr;
    } else {
      adj[j] = expr;
      has[j] = 1;
    }
  };

  if (live(L)) {
    adj[L] = Matrix::Ones(1, 1);
    has[L] = 1;
  }
  for (std::int64_t ii = L; ii >= 0; --ii) {
    const auto i = static_cast<std::uint32_t>(ii);
    if (!has[i]) continue;
    const NodeRec& r = nodes_[i];
    if (r.stamp != generation_ && r.op != Op::kParameter && r.op != Op::kConstant)
      throw Error("node #" + std::to_string(i) + " is stale; run forward first");
    const Matrix& g = adj[i];
    const Matrix& y = r.value.matrix();
    auto in = [&](std::size_t k) -> const Matrix& { return nodes_[r.in[k]].value.matrix(); };
    auto a = [&](std::size_t k) { return r.in[k]; };
    switch (r.op) {
      case Op::kInput:
      case Op::kParameter:
      case Op::kConstant:
        break;
      case Op::kMatMul:
        if (live(a(0))) accumulate(a(0), g * in(1).transpose());
        if (live(a(1))) accumulate(a(1), in(0).transpose() * g);
        break;
      case Op::kAddBias:
        if (live(a(0))) accumulate(a(0), g);
        if (live(a(1))) accumulate(a(1), g.colwise().sum());
        break;
      case Op::kAdd:
        if (live(a(0))) accumulate(a(0), g);
        if (live(a(1))) accumulate(a(1), g);
        break;
      case Op::kSub:
        if (live(a(0))) accumulate(a(0), g);
        if (live(a(1))) accumulate(a(1), -g);
        break;
      case Op::kMul:
        if (live(a(0))) accumulate(a(0), g.cwiseProduct(in(1)));
        if (live(a(1))) accumulate(a(1), g.cwiseProduct(in(0)));
        break;
      case Op::kMulCol:
        if (live(a(0))) accumulate(a(0), Matrix(g.array().colwise() * in(1).col(0).array()));
        if (live(a(1))) accumulate(a(1), Matrix(g.cwiseProduct(in(0)).rowwise().sum()));
        break;
      case Op::kDivCol:
        if (live(a(0))) accumulate(a(0), Matrix(g.array().colwise() / in(1).col(0).array()));
        if (live(a(1)))
          accumulate(a(1), Matrix(-(g.cwiseProduct(in(0)).rowwise().sum().array() /
                                    in(1).col(0).array().square())));
        break;
      case Op::kScale:
        if (live(a(0))) accumulate(a(0), g * r.attr);
        break;
      case Op::kAddScalar:
      case Op::kIdentity:
        if (live(a(0))) accumulate(a(0), g);
        break;
      case Op::kAffineCols:
        if (live(a(0))) accumulate(a(0), Matrix(g.array().rowwise() * r.aux_a.matrix().row(0).array()));
        break;
      case Op::kTanh:
        if (live(a(0))) accumulate(a(0), Matrix(g.array() * (1.0 - y.array().square())));
        break;
      case Op::kSigmoid:
        if (live(a(0))) accumulate(a(0), Matrix(g.array() * y.array() * (1.0 - y.array())));
        break;
      case Op::kLeakyRelu: {
        const double s = r.attr;
        if (live(a(0)))
          accumulate(a(0), Matrix(g.binaryExpr(in(0), [s](double gv, double xv) { return xv > 0.0 ? gv : s * gv; })));
        break;
      }
      case Op::kLeakyDeriv:
        break;
      case Op::kExp:
        if (live(a(0))) accumulate(a(0), g.cwiseProduct(y));
        break;
      case Op::kSquare:
        if (live(a(0))) accumulate(a(0), Matrix(2.0 * g.cwiseProduct(in(0))));
        break;
      case Op::kSqrt:
        if (live(a(0))) accumulate(a(0), Matrix(g.array() / (2.0 * y.array())));
        break;
      case Op::kConcat: {
        Eigen::Index c0 = 0;
        for (std::size_t k = 0; k < r.in.size(); ++k) {
          const Eigen::Index w = in(k).cols();
          if (live(a(k))) accumulate(a(k), g.middleCols(c0, w));
          c0 += w;
        }
        break;
      }
      case Op::kSliceCols:
        if (live(a(0))) {
          Matrix full = Matrix::Zero(in(0).rows(), in(0).cols());
          full.middleCols(r.lo, r.hi - r.lo) = g;
          accumulate(a(0), full);
        }
        break;
      case Op::kSliceRows:
        if (live(a(0))) {
          Matrix full = Matrix::Zero(in(0).rows(), in(0).cols());
          full.middleRows(r.lo, r.hi - r.lo) = g;
          accumulate(a(0), full);
        }
        break;
      case Op::kBroadcastRows:
        if (live(a(0))) accumulate(a(0), g.colwise().sum());
        break;
      case Op::kSum:
        if (live(a(0))) accumulate(a(0), Matrix::Constant(in(0).rows(), in(0).cols(), g(0, 0)));
        break;
      case Op::kMean:
        if (live(a(0)))
          accumulate(a(0), Matrix::Constant(in(0).rows(), in(0).cols(),
                                            g(0, 0) / static_cast<double>(in(0).size())));
        break;
      case Op::kRowSum:
        if (live(a(0))) accumulate(a(0), g.col(0).replicate(1, in(0).cols()));
        break;
      case Op::kRowNorm:
        if (live(a(0)))
          accumulate(a(0), Matrix(in(0).array().colwise() * (g.col(0).array() / y.col(0).array())));
        break;
    }
  }

  Gradients out;
  for (auto w : wrt) {
    const auto& r = nodes_[w.index];
    Tensor grad;
    if (w.index < n && has[w.index])
      grad = Tensor(std::move(adj[w.index]));
    else
      grad = Tensor(r.value.rows(), r.value.cols(), 0.0);
    out.entries_.push_back({w, r.name, std::move(grad)});
    if (w.index < n) has[w.index] = 0;
  }
  return out;
}

}  // namespace lgso::diff
