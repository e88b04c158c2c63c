// melvc/style_encoder.cc
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

#include "melvc/style_encoder.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace melvc {

using ad::Var;

StyleEncoderParams make_style_encoder(const ModelConfig& cfg, Rng& rng) {
  StyleEncoderParams p;
  int in = cfg.n_mels;
  for (std::size_t i = 0; i < cfg.style_channels.size(); ++i) {
    p.convs.push_back(make_conv(in, cfg.style_channels[i], cfg.kernel,
                                cfg.style_strides[i], rng));
    in = cfg.style_channels[i];
  }
  p.fwd = make_gru(in, cfg.gru_hidden, rng);
  p.bwd = make_gru(in, cfg.gru_hidden, rng);
  return p;
}

StyleEncoding encode_style(const ad::Var& mel, const StyleEncoderParams& p,
                           const ModelConfig& cfg) {
  int min_frames = cfg.min_style_frames();
  if (mel.rows() < min_frames)
    throw std::invalid_argument(
        "encode_style: input has " + std::to_string(mel.rows()) +
        " frames; at least " + std::to_string(min_frames) +
        " are required by the conv strides");
  if (mel.cols() != cfg.n_mels)
    throw std::invalid_argument("encode_style: input has " +
                                std::to_string(mel.cols()) +
                                " channels, config expects " +
                                std::to_string(cfg.n_mels));

  Var h = mel;
  for (const ConvLayer& conv : p.convs) h = ad::tanh_of(conv1d(h, conv));
  if (!h.value().allFinite())
    throw std::runtime_error("encode_style: non-finite conv activations");

  GruTrace fwd = gru_forward(h, p.fwd, false);
  GruTrace bwd = gru_forward(h, p.bwd, true);

  StyleEncoding enc;
  enc.lpe = ad::concat_cols(fwd.states, bwd.states);
  enc.gse = ad::concat_cols(fwd.final_state, bwd.final_state);
  return enc;
}

StyleEncoding encode_style(const MelSpectrogram& mel,
                           const StyleEncoderParams& p,
                           const ModelConfig& cfg) {
  return encode_style(Var::constant(mel.frames), p, cfg);
}

int style_output_length(const ModelConfig& cfg, int t_frames) {
  return conv_stack_out_length(t_frames, cfg.style_strides, cfg.kernel,
                               (cfg.kernel - 1) / 2);
}

std::pair<int, int> style_receptive_field(const ModelConfig& cfg, int t) {
  return conv_stack_receptive_field(t, cfg.style_strides, cfg.kernel,
                                    (cfg.kernel - 1) / 2);
}

AlignParams make_align_params(const ModelConfig& cfg, Rng& rng) {
  AlignParams p;
  int key_width = cfg.lpe_width() / 2;
  if (cfg.d_c != key_width) {
    p.query_proj = Var::param(
        glorot_uniform(cfg.d_c, key_width, cfg.d_c, key_width, rng));
    p.has_projection = true;
  }
  return p;
}

AlignResult align_prosody(const ad::Var& content, const ad::Var& lpe,
                          const AlignParams& params) {
  if (lpe.cols() % 2 != 0)
    throw std::invalid_argument("align_prosody: LPE width must be even");
  int half = lpe.cols() / 2;

  Var query = content;
  if (params.has_projection) {
    if (content.cols() != params.query_proj.rows() ||
        params.query_proj.cols() != half)
      throw std::runtime_error(
          "align_prosody: projection is " +
          std::to_string(params.query_proj.rows()) + "x" +
          std::to_string(params.query_proj.cols()) + " but content width is " +
          std::to_string(content.cols()) + " and key width is " +
          std::to_string(half));
    query = ad::matmul(content, params.query_proj);
  } else if (content.cols() != half) {
    throw std::runtime_error(
        "align_prosody: content width " + std::to_string(content.cols()) +
        " does not match key width " + std::to_string(half) +
        " and no projection is configured");
  }

  Var key = ad::slice_cols(lpe, 0, half);
  Var value = ad::slice_cols(lpe, half, half);
  double scaling = 1.0 / std::sqrt(static_cast<double>(query.cols()));

  AlignResult r;
  r.weights = ad::softmax_rows(
      ad::scale(ad::matmul(query, ad::transpose(key)), scaling));
  r.aligned = ad::matmul(r.weights, value);
  return r;
}

}  // namespace melvc
