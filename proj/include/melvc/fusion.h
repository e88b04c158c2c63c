// melvc/fusion.h
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

#ifndef MELVC_FUSION_H_
#define MELVC_FUSION_H_

#include <cstdint>
#include <vector>

#include "melvc/autodiff.h"
#include "melvc/config.h"
#include "melvc/mel.h"
#include "melvc/rng.h"

namespace melvc {

// Hard-negative construction by blending two speakers.

struct LinearFusionPlan {
  int start = 0;          // first replaced frame
  int interval = 5;       // k: segment length, also the gap between segments
  double max_mix_fraction = 0.5;  // realized fraction stays strictly below
};

struct LinearFuseResult {
  MelSpectrogram mel;
  std::vector<std::uint8_t> from_second;  // per-frame provenance
  double mixed_fraction = 0.0;
  bool degenerate = false;  // k >= T: first input returned untouched
};

// Alternating-segment replacement: starting at plan.start, segments of k
// frames from `second` replace frames of `first`, separated by k untouched
// frames, stopping before the mixed fraction would reach max_mix_fraction.
// Inputs must already share a common length (crop_to_common_length).
LinearFuseResult linear_fuse(const MelSpectrogram& first,
                             const MelSpectrogram& second,
                             const LinearFusionPlan& plan);

// Channel-group attention recombination of two speaker embeddings.
struct DynamicFusionParams {
  ad::Var w_query;  // [w x w], w = d_g / n_groups
  ad::Var w_key;
  ad::Var w_value;
  int n_groups = 4;
};

// Transformation matrices start as identity and are trained jointly.
DynamicFusionParams make_dynamic_fusion(const ModelConfig& cfg);

struct DynamicFuseResult {
  ad::Var fused;    // [1 x d_g]
  ad::Var weights;  // [n_groups x n_groups], rows sum to 1
};

// Both embeddings are reshaped into n_groups rows; Q comes from the first,
// K and V from the second; scaled dot-product attention re-weights the
// second speaker's groups and the result is flattened back to one vector.
DynamicFuseResult dynamic_fuse(const ad::Var& gse_a, const ad::Var& gse_b,
                               const DynamicFusionParams& params);

}  // namespace melvc

#endif  // MELVC_FUSION_H_
