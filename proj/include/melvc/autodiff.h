// melvc/autodiff.h
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

#ifndef MELVC_AUTODIFF_H_
#define MELVC_AUTODIFF_H_

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace melvc {
namespace ad {

// Reverse-mode automatic differentiation over dense double matrices.
//
// Graphs are built eagerly: every op computes its value at construction and
// records a closure that pulls the node's accumulated gradient and adds the
// partials into its parents. backward() walks the nodes reachable from the
// loss in decreasing creation order, which is a valid topological order
// because an op can only reference nodes created before it. The walk order
// is a pure function of the program, so repeated runs are bit-identical.

using Matrix = Eigen::MatrixXd;

struct Node {
  Matrix value;
  Matrix grad;  // empty until the first accumulation
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;
  bool requires_grad = false;
  std::int64_t id = 0;
};

class Var {
 public:
  Var() = default;

  static Var constant(Matrix value);
  static Var param(Matrix value);  // leaf that accumulates gradients

  bool defined() const { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  int rows() const { return static_cast<int>(node_->value.rows()); }
  int cols() const { return static_cast<int>(node_->value.cols()); }
  bool requires_grad() const { return node_->requires_grad; }

  // Gradient accumulated by the last backward(); zeros if never touched.
  Matrix grad() const;
  void zero_grad() { node_->grad.resize(0, 0); }

  // In-place value update for optimizer steps on leaf parameters.
  Matrix& mutable_value() { return node_->value; }

  double scalar() const;  // value of a 1x1 node

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  explicit Var(std::shared_ptr<Node> n) : node_(std::move(n)) {}
  std::shared_ptr<Node> node_;

  friend Var make_op(Matrix value, std::vector<Var> parents,
                     std::function<void(Node&)> backward_fn);
};

// Builds an interior node. requires_grad is inherited from the parents.
Var make_op(Matrix value, std::vector<Var> parents,
            std::function<void(Node&)> backward_fn);

// ---- primitives ------------------------------------------------------------

Var matmul(const Var& a, const Var& b);
Var operator+(const Var& a, const Var& b);  // same shape
Var operator-(const Var& a, const Var& b);
Var operator-(const Var& a);
Var hadamard(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_rowvec(const Var& x, const Var& row);  // row broadcast over rows of x

Var tanh_of(const Var& a);
Var sigmoid_of(const Var& a);
Var softmax_rows(const Var& a);

Var transpose(const Var& a);
Var concat_cols(const Var& a, const Var& b);
Var concat_rows(const std::vector<Var>& rows);
Var slice_rows(const Var& a, int first, int count);
Var slice_cols(const Var& a, int first, int count);
Var reshape(const Var& a, int rows, int cols);  // row-major element order

Var sum_all(const Var& a);      // 1x1
Var mean_all(const Var& a);     // 1x1
Var colwise_mean(const Var& a);  // 1 x cols
Var vdot(const Var& a, const Var& b);       // 1x1, flattened dot
Var sqrt_scalar(const Var& a);              // 1x1, a > 0
Var cdiv_scalar(const Var& num, const Var& den);  // 1x1 / 1x1

Var l1_sum(const Var& a, const Var& b);  // 1x1, sum |a - b|
Var mse(const Var& a, const Var& b);     // 1x1, mean (a - b)^2

Var detach(const Var& a);  // value copy with no history

// Identity forward; backward multiplies the upstream sensitivity by -lambda.
Var grad_reversal(const Var& a, double lambda);

// out.row(t) = table.row(indices[t]); backward scatter-adds into the table.
Var gather_rows(const Var& table, const std::vector<int>& indices);

// Value is taken verbatim from `target` (bit-exact); gradient passes to
// `z` unchanged and `target` receives none.
Var straight_through(const Var& z, const Var& target);

// Patch extraction for 1-D convolution over rows (time) of a [T x C] input:
// output row t is the concatenation of rows t*stride - pad + j, j in [0, k),
// with zero padding outside [0, T).
Var im2col(const Var& x, int kernel, int stride, int pad);

Var upsample_rows2(const Var& a);           // repeat each row twice
Var broadcast_row(const Var& row, int n);   // tile a 1 x D row n times

// Backpropagates from a 1x1 root. Gradients accumulate into every reachable
// node with requires_grad; call zero_grad() on leaves between passes.
void backward(const Var& root);

}  // namespace ad
}  // namespace melvc

#endif  // MELVC_AUTODIFF_H_
