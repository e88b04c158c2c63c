// melvc/model.h
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

#ifndef MELVC_MODEL_H_
#define MELVC_MODEL_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "melvc/autodiff.h"
#include "melvc/config.h"
#include "melvc/content_encoder.h"
#include "melvc/fusion.h"
#include "melvc/layers.h"
#include "melvc/mel.h"
#include "melvc/style_encoder.h"

namespace melvc {

// Two conv blocks around a x2 time upsampling, then a linear head back to
// mel channels; mirrors the content encoder's x2 downsampling.
struct DecoderParams {
  ConvLayer conv_pre;
  ConvLayer conv_post;
  Dense head;
};

DecoderParams make_decoder(const ModelConfig& cfg, Rng& rng);

// Per-frame [content | aligned prosody | broadcast GSE] -> mel [target_t x C].
ad::Var decode(const ad::Var& content, const ad::Var& aligned_prosody,
               const ad::Var& gse, const DecoderParams& p, int target_t);

struct NamedParam {
  std::string name;
  ad::Var var;
};

struct ModelState {
  ModelConfig cfg;
  ContentEncoderParams content;
  StyleEncoderParams style;
  AlignParams align;
  SpeakerClassifierParams classifier;
  DecoderParams decoder;
  DynamicFusionParams fusion;
  Codebook codebook;
  std::uint64_t step = 0;
  std::uint64_t config_fingerprint = 0;

  // Every trainable parameter in a fixed order (checkpoint and optimizer
  // order; also the finite-difference iteration order in tests).
  std::vector<NamedParam> named_params();
  std::vector<NamedParam> named_params() const;

  // Fresh state with identical values (no shared parameter nodes).
  ModelState clone() const;
};

ModelState init_model(const ModelConfig& cfg, std::uint64_t seed);

// One reconstruction pass: encode content of `mel`, quantize, extract style,
// align, decode with the utterance's own GSE.
struct ReconstructionGraph {
  ad::Var z;            // continuous content features
  QuantizeResult vq;
  StyleEncoding style;
  AlignResult alignment;
  ad::Var m_recon;
};

ReconstructionGraph build_reconstruction(const ad::Var& mel,
                                         ModelState& state);

// Inference helpers over a frozen state.
MelSpectrogram reconstruct(const MelSpectrogram& mel, ModelState& state);

// Content and aligned prosody from `source`, GSE from `target`.
MelSpectrogram convert(const MelSpectrogram& source,
                       const MelSpectrogram& target, ModelState& state);

Eigen::VectorXd gse_of(const MelSpectrogram& mel, ModelState& state);

}  // namespace melvc

#endif  // MELVC_MODEL_H_
