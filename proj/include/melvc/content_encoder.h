// melvc/content_encoder.h
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

#ifndef MELVC_CONTENT_ENCODER_H_
#define MELVC_CONTENT_ENCODER_H_

#include <vector>

#include "melvc/autodiff.h"
#include "melvc/config.h"
#include "melvc/layers.h"
#include "melvc/mel.h"
#include "melvc/rng.h"

namespace melvc {

// Conv stack mapping mel frames to continuous content features; the stack
// downsamples time by the product of its strides (x2 in the reference
// configuration, which the decoder's upsampling undoes).
struct ContentEncoderParams {
  std::vector<ConvLayer> blocks;
};

ContentEncoderParams make_content_encoder(const ModelConfig& cfg, Rng& rng);

// Returns continuous features [T' x d_c]. Throws std::invalid_argument on
// channel mismatch and std::runtime_error if activations go non-finite.
ad::Var encode_content(const ad::Var& mel, const ContentEncoderParams& p);
ad::Var encode_content(const MelSpectrogram& mel,
                       const ContentEncoderParams& p);

int content_output_length(const ModelConfig& cfg, int t_frames);

// Input rows that output row t of the content stack can see.
std::pair<int, int> content_receptive_field(const ModelConfig& cfg, int t);

// Trainable VQ dictionary, initialized uniform in [-1/K, 1/K].
struct Codebook {
  ad::Var codes;  // [K x d_c]
  int size() const { return codes.rows(); }
  int dim() const { return codes.cols(); }
};

Codebook make_codebook(int size, int dim, Rng& rng);

struct QuantizeResult {
  ad::Var quantized;           // [T' x d_c]; rows are codebook rows bit-exactly
  std::vector<int> indices;    // argmin_k ||z_t - codes_k||, ties -> lowest k
  ad::Var commitment_term;     // mean_t ||z_t - sg(q_t)||^2
  ad::Var codebook_term;       // mean_t ||sg(z_t) - q_t||^2
  ad::Var l_q;                 // commitment_term + codebook_term
};

// Nearest-neighbor quantization with a straight-through gradient to z.
// The codebook is updated only through codebook_term.
QuantizeResult quantize(const ad::Var& z, const Codebook& codebook);

// Identity forward, gradient scaled by -lambda on the way back.
ad::Var grl(const ad::Var& x, double lambda);

// Regressor from content features onto the global speaker embedding:
// mean-pool over time, then a 2-layer perceptron.
struct SpeakerClassifierParams {
  Dense hidden;
  Dense out;
};

SpeakerClassifierParams make_speaker_classifier(const ModelConfig& cfg,
                                                Rng& rng);

ad::Var predict_speaker(const ad::Var& content,
                        const SpeakerClassifierParams& p);

// L1 distance between the classifier's prediction (fed through the GRL)
// and the speaker embedding, which is treated as a constant target.
ad::Var adversarial_loss(const ad::Var& content, const ad::Var& speaker_gse,
                         const SpeakerClassifierParams& p, double grl_lambda);

}  // namespace melvc

#endif  // MELVC_CONTENT_ENCODER_H_
