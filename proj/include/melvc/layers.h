// melvc/layers.h
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

#ifndef MELVC_LAYERS_H_
#define MELVC_LAYERS_H_

#include <utility>
#include <vector>

#include "melvc/autodiff.h"
#include "melvc/rng.h"

namespace melvc {

// Sequences are [T x channels] matrices; convolutions run over rows (time).

struct ConvLayer {
  ad::Var weight;  // [kernel * in_channels, out_channels]
  ad::Var bias;    // [1, out_channels]
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  int pad = 1;
};

ConvLayer make_conv(int in_channels, int out_channels, int kernel, int stride,
                    Rng& rng);

// Linear convolution; activations are applied by the caller.
ad::Var conv1d(const ad::Var& x, const ConvLayer& layer);

struct Dense {
  ad::Var weight;  // [in, out]
  ad::Var bias;    // [1, out]
};

Dense make_dense(int in, int out, Rng& rng);
ad::Var dense(const ad::Var& x, const Dense& layer);

struct GruParams {
  ad::Var wz, wr, wh;  // [input, hidden]
  ad::Var uz, ur, uh;  // [hidden, hidden]
  ad::Var bz, br, bh;  // [1, hidden]
  int input_dim = 0;
  int hidden = 0;
};

GruParams make_gru(int input_dim, int hidden, Rng& rng);

struct GruTrace {
  ad::Var states;       // [T x hidden], in time order
  ad::Var final_state;  // [1 x hidden], last state the recurrence produced
};

// Runs the recurrence over rows of `seq`; reverse=true scans from the last
// row backwards (states are still returned in time order).
GruTrace gru_forward(const ad::Var& seq, const GruParams& p, bool reverse);

// Output length of one convolution: floor((T + 2*pad - kernel)/stride) + 1.
int conv_out_length(int t, int kernel, int stride, int pad);
int conv_stack_out_length(int t, const std::vector<int>& strides, int kernel,
                          int pad);

// Input-row interval [lo, hi] (unclipped, may extend past the edges) that
// output row t of a stack of same-kernel convolutions can depend on.
std::pair<int, int> conv_stack_receptive_field(int t,
                                               const std::vector<int>& strides,
                                               int kernel, int pad);

// Glorot-uniform matrix; draw order is row-major and fixed.
ad::Matrix glorot_uniform(int rows, int cols, double fan_in, double fan_out,
                          Rng& rng);

}  // namespace melvc

#endif  // MELVC_LAYERS_H_
