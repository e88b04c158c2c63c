// melvc/layers.cc
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

#include "melvc/layers.h"

#include <cmath>
#include <stdexcept>

namespace melvc {

using ad::Var;

ad::Matrix glorot_uniform(int rows, int cols, double fan_in, double fan_out,
                          Rng& rng) {
  double a = std::sqrt(6.0 / (fan_in + fan_out));
  ad::Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-a, a);
  return m;
}

ConvLayer make_conv(int in_channels, int out_channels, int kernel, int stride,
                    Rng& rng) {
  if (kernel % 2 == 0)
    throw std::invalid_argument("make_conv: kernel must be odd");
  ConvLayer l;
  l.in_channels = in_channels;
  l.out_channels = out_channels;
  l.kernel = kernel;
  l.stride = stride;
  l.pad = (kernel - 1) / 2;
  l.weight = Var::param(glorot_uniform(kernel * in_channels, out_channels,
                                       kernel * in_channels,
                                       kernel * out_channels, rng));
  l.bias = Var::param(ad::Matrix::Zero(1, out_channels));
  return l;
}

ad::Var conv1d(const ad::Var& x, const ConvLayer& layer) {
  if (x.cols() != layer.in_channels)
    throw std::invalid_argument("conv1d: input has " +
                                std::to_string(x.cols()) +
                                " channels, layer expects " +
                                std::to_string(layer.in_channels));
  Var cols = ad::im2col(x, layer.kernel, layer.stride, layer.pad);
  return ad::add_rowvec(ad::matmul(cols, layer.weight), layer.bias);
}

Dense make_dense(int in, int out, Rng& rng) {
  Dense d;
  d.weight = Var::param(glorot_uniform(in, out, in, out, rng));
  d.bias = Var::param(ad::Matrix::Zero(1, out));
  return d;
}

ad::Var dense(const ad::Var& x, const Dense& layer) {
  return ad::add_rowvec(ad::matmul(x, layer.weight), layer.bias);
}

GruParams make_gru(int input_dim, int hidden, Rng& rng) {
  GruParams p;
  p.input_dim = input_dim;
  p.hidden = hidden;
  auto w = [&] {
    return Var::param(glorot_uniform(input_dim, hidden, input_dim, hidden,
                                     rng));
  };
  auto u = [&] {
    return Var::param(glorot_uniform(hidden, hidden, hidden, hidden, rng));
  };
  p.wz = w();
  p.wr = w();
  p.wh = w();
  p.uz = u();
  p.ur = u();
  p.uh = u();
  p.bz = Var::param(ad::Matrix::Zero(1, hidden));
  p.br = Var::param(ad::Matrix::Zero(1, hidden));
  p.bh = Var::param(ad::Matrix::Zero(1, hidden));
  return p;
}

GruTrace gru_forward(const ad::Var& seq, const GruParams& p, bool reverse) {
  if (seq.cols() != p.input_dim)
    throw std::invalid_argument("gru_forward: input width mismatch");
  int t_len = seq.rows();
  Var h = Var::constant(ad::Matrix::Zero(1, p.hidden));
  std::vector<Var> states(t_len);
  for (int i = 0; i < t_len; ++i) {
    int t = reverse ? t_len - 1 - i : i;
    Var x = ad::slice_rows(seq, t, 1);
    Var z = ad::sigmoid_of(ad::matmul(x, p.wz) + ad::matmul(h, p.uz) + p.bz);
    Var r = ad::sigmoid_of(ad::matmul(x, p.wr) + ad::matmul(h, p.ur) + p.br);
    Var cand = ad::tanh_of(ad::matmul(x, p.wh) +
                           ad::matmul(ad::hadamard(r, h), p.uh) + p.bh);
    h = h + ad::hadamard(z, cand - h);
    states[t] = h;
  }
  GruTrace trace;
  trace.states = ad::concat_rows(states);
  trace.final_state = h;
  return trace;
}

int conv_out_length(int t, int kernel, int stride, int pad) {
  int n = (t + 2 * pad - kernel) / stride + 1;
  return n < 0 ? 0 : n;
}

int conv_stack_out_length(int t, const std::vector<int>& strides, int kernel,
                          int pad) {
  for (int s : strides) t = conv_out_length(t, kernel, s, pad);
  return t;
}

std::pair<int, int> conv_stack_receptive_field(int t,
                                               const std::vector<int>& strides,
                                               int kernel, int pad) {
  int lo = t, hi = t;
  for (auto it = strides.rbegin(); it != strides.rend(); ++it) {
    lo = *it * lo - pad;
    hi = *it * hi + (kernel - 1) - pad;
  }
  return {lo, hi};
}

}  // namespace melvc
