// melvc/autodiff.cc
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "melvc/autodiff.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>

namespace melvc {
namespace ad {

namespace {

std::atomic<std::int64_t> g_next_id{1};

std::int64_t next_id() {
  return g_next_id.fetch_add(1, std::memory_order_relaxed);
}

// Adds `delta` into the gradient of `n`, allocating on first touch.
template <typename Derived>
void accum(const std::shared_ptr<Node>& n,
           const Eigen::MatrixBase<Derived>& delta) {
  if (!n->requires_grad) return;
  if (n->grad.size() == 0)
    n->grad = Matrix::Zero(n->value.rows(), n->value.cols());
  n->grad += delta;
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" +
                                std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
}

void check_scalar(const Var& a, const char* op) {
  if (a.rows() != 1 || a.cols() != 1)
    throw std::invalid_argument(std::string(op) + ": expected a 1x1 node");
}

}  // namespace

Var Var::constant(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = false;
  n->id = next_id();
  return Var(std::move(n));
}

Var Var::param(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  n->id = next_id();
  return Var(std::move(n));
}

Matrix Var::grad() const {
  if (node_->grad.size() == 0)
    return Matrix::Zero(node_->value.rows(), node_->value.cols());
  return node_->grad;
}

double Var::scalar() const {
  if (rows() != 1 || cols() != 1)
    throw std::invalid_argument("Var::scalar: node is not 1x1");
  return node_->value(0, 0);
}

Var make_op(Matrix value, std::vector<Var> parents,
            std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->id = next_id();
  bool needs = false;
  n->parents.reserve(parents.size());
  for (const Var& p : parents) {
    needs = needs || p.requires_grad();
    n->parents.push_back(p.node());
  }
  n->requires_grad = needs;
  if (needs) n->backward_fn = std::move(backward_fn);
  return Var(std::move(n));
}

// ---- primitives ------------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: inner dimensions differ (" +
                                std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + ")");
  auto an = a.node(), bn = b.node();
  return make_op(a.value() * b.value(), {a, b}, [an, bn](Node& out) {
    accum(an, out.grad * bn->value.transpose());
    accum(bn, an->value.transpose() * out.grad);
  });
}

Var operator+(const Var& a, const Var& b) {
  check_same_shape(a, b, "operator+");
  auto an = a.node(), bn = b.node();
  return make_op(a.value() + b.value(), {a, b}, [an, bn](Node& out) {
    accum(an, out.grad);
    accum(bn, out.grad);
  });
}

Var operator-(const Var& a, const Var& b) {
  check_same_shape(a, b, "operator-");
  auto an = a.node(), bn = b.node();
  return make_op(a.value() - b.value(), {a, b}, [an, bn](Node& out) {
    accum(an, out.grad);
    accum(bn, -out.grad);
  });
}

Var operator-(const Var& a) {
  auto an = a.node();
  return make_op(-a.value(), {a}, [an](Node& out) { accum(an, -out.grad); });
}

Var hadamard(const Var& a, const Var& b) {
  check_same_shape(a, b, "hadamard");
  auto an = a.node(), bn = b.node();
  return make_op(a.value().cwiseProduct(b.value()), {a, b},
                 [an, bn](Node& out) {
                   accum(an, out.grad.cwiseProduct(bn->value));
                   accum(bn, out.grad.cwiseProduct(an->value));
                 });
}

Var scale(const Var& a, double s) {
  auto an = a.node();
  return make_op(s * a.value(), {a},
                 [an, s](Node& out) { accum(an, s * out.grad); });
}

Var add_rowvec(const Var& x, const Var& row) {
  if (row.rows() != 1 || row.cols() != x.cols())
    throw std::invalid_argument("add_rowvec: row must be 1 x cols(x)");
  auto xn = x.node(), rn = row.node();
  Matrix v = x.value();
  v.rowwise() += row.value().row(0);
  return make_op(std::move(v), {x, row}, [xn, rn](Node& out) {
    accum(xn, out.grad);
    accum(rn, out.grad.colwise().sum());
  });
}

Var tanh_of(const Var& a) {
  auto an = a.node();
  return make_op(a.value().array().tanh().matrix(), {a}, [an](Node& out) {
    accum(an, out.grad.cwiseProduct(
                  (1.0 - out.value.array().square()).matrix()));
  });
}

Var sigmoid_of(const Var& a) {
  auto an = a.node();
  return make_op((1.0 / (1.0 + (-a.value().array()).exp())).matrix(), {a},
                 [an](Node& out) {
                   accum(an, out.grad.cwiseProduct(out.value.cwiseProduct(
                                 (1.0 - out.value.array()).matrix())));
                 });
}

Var softmax_rows(const Var& a) {
  Matrix v(a.rows(), a.cols());
  for (int r = 0; r < a.rows(); ++r) {
    Eigen::ArrayXd row = a.value().row(r).array();
    row -= row.maxCoeff();
    Eigen::ArrayXd e = row.exp();
    v.row(r) = (e / e.sum()).matrix();
  }
  auto an = a.node();
  return make_op(std::move(v), {a}, [an](Node& out) {
    Matrix g(out.value.rows(), out.value.cols());
    for (int r = 0; r < out.value.rows(); ++r) {
      double dot = out.grad.row(r).dot(out.value.row(r));
      g.row(r) = out.value.row(r).cwiseProduct(
          (out.grad.row(r).array() - dot).matrix());
    }
    accum(an, g);
  });
}

Var transpose(const Var& a) {
  auto an = a.node();
  return make_op(a.value().transpose(), {a}, [an](Node& out) {
    accum(an, out.grad.transpose());
  });
}

Var concat_cols(const Var& a, const Var& b) {
  if (a.rows() != b.rows())
    throw std::invalid_argument("concat_cols: row counts differ");
  Matrix v(a.rows(), a.cols() + b.cols());
  v.leftCols(a.cols()) = a.value();
  v.rightCols(b.cols()) = b.value();
  auto an = a.node(), bn = b.node();
  int ac = a.cols(), bc = b.cols();
  return make_op(std::move(v), {a, b}, [an, bn, ac, bc](Node& out) {
    accum(an, out.grad.leftCols(ac));
    accum(bn, out.grad.rightCols(bc));
  });
}

Var concat_rows(const std::vector<Var>& rows) {
  if (rows.empty()) throw std::invalid_argument("concat_rows: empty input");
  int cols = rows[0].cols();
  int total = 0;
  for (const Var& r : rows) {
    if (r.cols() != cols)
      throw std::invalid_argument("concat_rows: column counts differ");
    total += r.rows();
  }
  Matrix v(total, cols);
  std::vector<std::shared_ptr<Node>> nodes;
  std::vector<int> offsets, counts;
  int at = 0;
  for (const Var& r : rows) {
    v.middleRows(at, r.rows()) = r.value();
    nodes.push_back(r.node());
    offsets.push_back(at);
    counts.push_back(r.rows());
    at += r.rows();
  }
  return make_op(std::move(v), rows, [nodes, offsets, counts](Node& out) {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      accum(nodes[i], out.grad.middleRows(offsets[i], counts[i]));
  });
}

Var slice_rows(const Var& a, int first, int count) {
  if (first < 0 || count < 0 || first + count > a.rows())
    throw std::invalid_argument("slice_rows: range out of bounds");
  auto an = a.node();
  return make_op(a.value().middleRows(first, count), {a},
                 [an, first, count](Node& out) {
                   if (!an->requires_grad) return;
                   if (an->grad.size() == 0)
                     an->grad = Matrix::Zero(an->value.rows(),
                                             an->value.cols());
                   an->grad.middleRows(first, count) += out.grad;
                 });
}

Var slice_cols(const Var& a, int first, int count) {
  if (first < 0 || count < 0 || first + count > a.cols())
    throw std::invalid_argument("slice_cols: range out of bounds");
  auto an = a.node();
  return make_op(a.value().middleCols(first, count), {a},
                 [an, first, count](Node& out) {
                   if (!an->requires_grad) return;
                   if (an->grad.size() == 0)
                     an->grad = Matrix::Zero(an->value.rows(),
                                             an->value.cols());
                   an->grad.middleCols(first, count) += out.grad;
                 });
}

Var reshape(const Var& a, int rows, int cols) {
  if (rows * cols != a.rows() * a.cols())
    throw std::invalid_argument("reshape: element count changes");
  int ac = a.cols();
  Matrix v(rows, cols);
  for (int i = 0; i < rows * cols; ++i)
    v(i / cols, i % cols) = a.value()(i / ac, i % ac);
  auto an = a.node();
  return make_op(std::move(v), {a}, [an, rows, cols, ac](Node& out) {
    if (!an->requires_grad) return;
    Matrix g(an->value.rows(), an->value.cols());
    for (int i = 0; i < rows * cols; ++i)
      g(i / ac, i % ac) = out.grad(i / cols, i % cols);
    accum(an, g);
  });
}

Var sum_all(const Var& a) {
  auto an = a.node();
  Matrix v(1, 1);
  v(0, 0) = a.value().sum();
  return make_op(std::move(v), {a}, [an](Node& out) {
    accum(an, Matrix::Constant(an->value.rows(), an->value.cols(),
                               out.grad(0, 0)));
  });
}

Var mean_all(const Var& a) {
  auto an = a.node();
  double n = static_cast<double>(a.rows()) * a.cols();
  Matrix v(1, 1);
  v(0, 0) = a.value().sum() / n;
  return make_op(std::move(v), {a}, [an, n](Node& out) {
    accum(an, Matrix::Constant(an->value.rows(), an->value.cols(),
                               out.grad(0, 0) / n));
  });
}

Var colwise_mean(const Var& a) {
  auto an = a.node();
  double t = static_cast<double>(a.rows());
  Matrix v = a.value().colwise().sum() / t;
  return make_op(std::move(v), {a}, [an, t](Node& out) {
    accum(an, (out.grad / t).replicate(an->value.rows(), 1));
  });
}

Var vdot(const Var& a, const Var& b) {
  check_same_shape(a, b, "vdot");
  auto an = a.node(), bn = b.node();
  Matrix v(1, 1);
  v(0, 0) = a.value().cwiseProduct(b.value()).sum();
  return make_op(std::move(v), {a, b}, [an, bn](Node& out) {
    accum(an, out.grad(0, 0) * bn->value);
    accum(bn, out.grad(0, 0) * an->value);
  });
}

Var sqrt_scalar(const Var& a) {
  check_scalar(a, "sqrt_scalar");
  double x = a.value()(0, 0);
  if (!(x > 0.0))
    throw std::invalid_argument("sqrt_scalar: argument must be positive");
  Matrix v(1, 1);
  v(0, 0) = std::sqrt(x);
  double d = 0.5 / v(0, 0);
  auto an = a.node();
  return make_op(std::move(v), {a},
                 [an, d](Node& out) { accum(an, d * out.grad); });
}

Var cdiv_scalar(const Var& num, const Var& den) {
  check_scalar(num, "cdiv_scalar");
  check_scalar(den, "cdiv_scalar");
  double n = num.value()(0, 0), d = den.value()(0, 0);
  if (d == 0.0) throw std::invalid_argument("cdiv_scalar: division by zero");
  Matrix v(1, 1);
  v(0, 0) = n / d;
  auto nn = num.node(), dn = den.node();
  return make_op(std::move(v), {num, den}, [nn, dn, n, d](Node& out) {
    double g = out.grad(0, 0);
    accum(nn, Matrix::Constant(1, 1, g / d));
    accum(dn, Matrix::Constant(1, 1, -g * n / (d * d)));
  });
}

Var l1_sum(const Var& a, const Var& b) {
  check_same_shape(a, b, "l1_sum");
  Matrix diff = a.value() - b.value();
  Matrix v(1, 1);
  v(0, 0) = diff.cwiseAbs().sum();
  auto sign = std::make_shared<Matrix>(diff.unaryExpr(
      [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }));
  auto an = a.node(), bn = b.node();
  return make_op(std::move(v), {a, b}, [an, bn, sign](Node& out) {
    accum(an, out.grad(0, 0) * (*sign));
    accum(bn, -out.grad(0, 0) * (*sign));
  });
}

Var mse(const Var& a, const Var& b) {
  check_same_shape(a, b, "mse");
  double n = static_cast<double>(a.rows()) * a.cols();
  auto diff = std::make_shared<Matrix>(a.value() - b.value());
  Matrix v(1, 1);
  v(0, 0) = diff->array().square().sum() / n;
  auto an = a.node(), bn = b.node();
  return make_op(std::move(v), {a, b}, [an, bn, diff, n](Node& out) {
    Matrix g = (2.0 * out.grad(0, 0) / n) * (*diff);
    accum(an, g);
    accum(bn, -g);
  });
}

Var detach(const Var& a) { return Var::constant(a.value()); }

Var grad_reversal(const Var& a, double lambda) {
  auto an = a.node();
  return make_op(a.value(), {a}, [an, lambda](Node& out) {
    accum(an, -lambda * out.grad);
  });
}

Var gather_rows(const Var& table, const std::vector<int>& indices) {
  Matrix v(static_cast<int>(indices.size()), table.cols());
  for (std::size_t t = 0; t < indices.size(); ++t) {
    int k = indices[t];
    if (k < 0 || k >= table.rows())
      throw std::invalid_argument("gather_rows: index out of range");
    v.row(static_cast<int>(t)) = table.value().row(k);
  }
  auto tn = table.node();
  auto idx = indices;
  return make_op(std::move(v), {table}, [tn, idx](Node& out) {
    if (!tn->requires_grad) return;
    if (tn->grad.size() == 0)
      tn->grad = Matrix::Zero(tn->value.rows(), tn->value.cols());
    for (std::size_t t = 0; t < idx.size(); ++t)
      tn->grad.row(idx[t]) += out.grad.row(static_cast<int>(t));
  });
}

Var straight_through(const Var& z, const Var& target) {
  check_same_shape(z, target, "straight_through");
  auto zn = z.node();
  return make_op(target.value(), {z},
                 [zn](Node& out) { accum(zn, out.grad); });
}

Var im2col(const Var& x, int kernel, int stride, int pad) {
  if (kernel < 1 || stride < 1 || pad < 0)
    throw std::invalid_argument("im2col: bad geometry");
  int t_in = x.rows(), c = x.cols();
  int t_out = (t_in + 2 * pad - kernel) / stride + 1;
  if (t_out < 1) throw std::invalid_argument("im2col: input too short");
  Matrix v = Matrix::Zero(t_out, kernel * c);
  for (int t = 0; t < t_out; ++t)
    for (int j = 0; j < kernel; ++j) {
      int src = t * stride + j - pad;
      if (src >= 0 && src < t_in)
        v.block(t, j * c, 1, c) = x.value().row(src);
    }
  auto xn = x.node();
  return make_op(std::move(v), {x},
                 [xn, kernel, stride, pad, t_in, c, t_out](Node& out) {
                   if (!xn->requires_grad) return;
                   if (xn->grad.size() == 0)
                     xn->grad = Matrix::Zero(t_in, c);
                   for (int t = 0; t < t_out; ++t)
                     for (int j = 0; j < kernel; ++j) {
                       int src = t * stride + j - pad;
                       if (src >= 0 && src < t_in)
                         xn->grad.row(src) += out.grad.block(t, j * c, 1, c);
                     }
                 });
}

Var upsample_rows2(const Var& a) {
  int t = a.rows(), c = a.cols();
  Matrix v(2 * t, c);
  for (int i = 0; i < t; ++i) {
    v.row(2 * i) = a.value().row(i);
    v.row(2 * i + 1) = a.value().row(i);
  }
  auto an = a.node();
  return make_op(std::move(v), {a}, [an, t](Node& out) {
    if (!an->requires_grad) return;
    Matrix g(t, out.grad.cols());
    for (int i = 0; i < t; ++i)
      g.row(i) = out.grad.row(2 * i) + out.grad.row(2 * i + 1);
    accum(an, g);
  });
}

Var broadcast_row(const Var& row, int n) {
  if (row.rows() != 1)
    throw std::invalid_argument("broadcast_row: input must have one row");
  if (n < 1) throw std::invalid_argument("broadcast_row: n must be >= 1");
  auto rn = row.node();
  return make_op(row.value().replicate(n, 1), {row}, [rn](Node& out) {
    accum(rn, out.grad.colwise().sum());
  });
}

void backward(const Var& root) {
  if (root.rows() != 1 || root.cols() != 1)
    throw std::invalid_argument("backward: root must be 1x1");
  if (!root.requires_grad()) return;

  root.node()->grad = Matrix::Ones(1, 1);

  // Collect every node reachable from the root, then run backward closures
  // in decreasing creation order (a topological order of the DAG).
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{root.node().get()};
  seen.insert(root.node().get());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& p : n->parents)
      if (p->requires_grad && seen.insert(p.get()).second)
        stack.push_back(p.get());
  }
  std::sort(order.begin(), order.end(),
            [](const Node* a, const Node* b) { return a->id > b->id; });
  for (Node* n : order)
    if (n->backward_fn && n->grad.size() != 0) n->backward_fn(*n);
}

}  // namespace ad
}  // namespace melvc
