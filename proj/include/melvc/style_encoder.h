// melvc/style_encoder.h
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

#ifndef MELVC_STYLE_ENCODER_H_
#define MELVC_STYLE_ENCODER_H_

#include <utility>
#include <vector>

#include "melvc/autodiff.h"
#include "melvc/config.h"
#include "melvc/layers.h"
#include "melvc/mel.h"
#include "melvc/rng.h"

namespace melvc {

// Reference-encoder style module: a conv stack with time strides
// (2,1,2,1,2,2) feeding a bidirectional GRU. The hidden-state sequence is
// the local prosody embedding (LPE); the concatenated final forward and
// backward states are the global speaker embedding (GSE).
struct StyleEncoderParams {
  std::vector<ConvLayer> convs;
  GruParams fwd;
  GruParams bwd;
};

StyleEncoderParams make_style_encoder(const ModelConfig& cfg, Rng& rng);

struct StyleEncoding {
  ad::Var gse;  // [1 x d_g]
  ad::Var lpe;  // [T_l x lpe_width]
};

// Throws std::invalid_argument when T is below the stride product (the
// message names the minimum).
StyleEncoding encode_style(const ad::Var& mel, const StyleEncoderParams& p,
                           const ModelConfig& cfg);
StyleEncoding encode_style(const MelSpectrogram& mel,
                           const StyleEncoderParams& p,
                           const ModelConfig& cfg);

int style_output_length(const ModelConfig& cfg, int t_frames);

// Input rows that conv output row t of the style stack can see. Note the
// recurrent layer then spreads information across all time steps, so this
// bounds only the convolutional part (the forward GRU direction at early
// steps, in particular).
std::pair<int, int> style_receptive_field(const ModelConfig& cfg, int t);

// Learned query projection for the prosody alignment; instantiated only
// when d_c differs from the key/value width L/2.
struct AlignParams {
  ad::Var query_proj;  // [d_c x L/2] when present
  bool has_projection = false;
};

AlignParams make_align_params(const ModelConfig& cfg, Rng& rng);

struct AlignResult {
  ad::Var aligned;  // [T' x L/2]
  ad::Var weights;  // [T' x T_l], rows sum to 1
};

// Scaled dot-product alignment of prosody onto content time steps:
// Q = content (projected to width L/2 if needed), K = lpe[:, :L/2],
// V = lpe[:, L/2:], weights = row-softmax(Q K^T / sqrt(F)) with F the
// query width after projection.
AlignResult align_prosody(const ad::Var& content, const ad::Var& lpe,
                          const AlignParams& params);

}  // namespace melvc

#endif  // MELVC_STYLE_ENCODER_H_
