// melvc/fusion.cc
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

#include "melvc/fusion.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace melvc {

using ad::Var;

LinearFuseResult linear_fuse(const MelSpectrogram& first,
                             const MelSpectrogram& second,
                             const LinearFusionPlan& plan) {
  if (first.T() != second.T() || first.C() != second.C())
    throw std::invalid_argument(
        "linear_fuse: inputs must share a common shape; crop first (" +
        std::to_string(first.T()) + "x" + std::to_string(first.C()) + " vs " +
        std::to_string(second.T()) + "x" + std::to_string(second.C()) + ")");
  const int t_len = first.T();
  if (plan.start < 0 || plan.start >= t_len)
    throw std::invalid_argument("linear_fuse: start " +
                                std::to_string(plan.start) +
                                " is outside [0, " + std::to_string(t_len) +
                                ")");
  if (plan.interval < 1)
    throw std::invalid_argument("linear_fuse: interval must be >= 1");
  if (!(plan.max_mix_fraction > 0.0) || plan.max_mix_fraction > 0.5)
    throw std::invalid_argument(
        "linear_fuse: max_mix_fraction must be in (0, 0.5]");

  LinearFuseResult r;
  r.mel = first;
  r.from_second.assign(t_len, 0);

  if (plan.interval >= t_len) {
    r.degenerate = true;  // no segment pattern fits; caller sees the flag
    return r;
  }

  int mixed = 0;
  for (int pos = plan.start; pos < t_len; pos += 2 * plan.interval) {
    int seg = std::min(plan.interval, t_len - pos);
    if (static_cast<double>(mixed + seg) / t_len >= plan.max_mix_fraction)
      break;  // one more segment would reach the cap
    for (int i = pos; i < pos + seg; ++i) {
      r.mel.frames.row(i) = second.frames.row(i);
      r.from_second[i] = 1;
    }
    mixed += seg;
  }
  r.mixed_fraction = static_cast<double>(mixed) / t_len;
  return r;
}

DynamicFusionParams make_dynamic_fusion(const ModelConfig& cfg) {
  if (cfg.d_g() % cfg.n_groups != 0)
    throw std::runtime_error("make_dynamic_fusion: n_groups " +
                             std::to_string(cfg.n_groups) +
                             " does not divide d_g " +
                             std::to_string(cfg.d_g()));
  int w = cfg.d_g() / cfg.n_groups;
  DynamicFusionParams p;
  p.w_query = Var::param(ad::Matrix::Identity(w, w));
  p.w_key = Var::param(ad::Matrix::Identity(w, w));
  p.w_value = Var::param(ad::Matrix::Identity(w, w));
  p.n_groups = cfg.n_groups;
  return p;
}

DynamicFuseResult dynamic_fuse(const ad::Var& gse_a, const ad::Var& gse_b,
                               const DynamicFusionParams& params) {
  if (gse_a.rows() != 1 || gse_b.rows() != 1 ||
      gse_a.cols() != gse_b.cols())
    throw std::invalid_argument("dynamic_fuse: embeddings must be row "
                                "vectors of equal width");
  int d_g = gse_a.cols();
  int n = params.n_groups;
  if (n < 1 || d_g % n != 0)
    throw std::runtime_error("dynamic_fuse: group count " +
                             std::to_string(n) + " does not divide width " +
                             std::to_string(d_g));
  int w = d_g / n;
  if (params.w_query.rows() != w)
    throw std::runtime_error("dynamic_fuse: transformation matrices sized " +
                             std::to_string(params.w_query.rows()) +
                             " but group width is " + std::to_string(w));

  Var groups_a = ad::reshape(gse_a, n, w);
  Var groups_b = ad::reshape(gse_b, n, w);
  Var q = ad::matmul(groups_a, params.w_query);
  Var k = ad::matmul(groups_b, params.w_key);
  Var v = ad::matmul(groups_b, params.w_value);

  DynamicFuseResult r;
  r.weights = ad::softmax_rows(ad::scale(
      ad::matmul(q, ad::transpose(k)), 1.0 / std::sqrt(static_cast<double>(w))));
  r.fused = ad::reshape(ad::matmul(r.weights, v), 1, d_g);
  return r;
}

}  // namespace melvc
