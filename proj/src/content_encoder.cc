// melvc/content_encoder.cc
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

#include "melvc/content_encoder.h"

#include <limits>
#include <stdexcept>
#include <string>

namespace melvc {

using ad::Var;

ContentEncoderParams make_content_encoder(const ModelConfig& cfg, Rng& rng) {
  ContentEncoderParams p;
  int in = cfg.n_mels;
  for (std::size_t i = 0; i < cfg.content_channels.size(); ++i) {
    p.blocks.push_back(make_conv(in, cfg.content_channels[i], cfg.kernel,
                                 cfg.content_strides[i], rng));
    in = cfg.content_channels[i];
  }
  return p;
}

ad::Var encode_content(const ad::Var& mel, const ContentEncoderParams& p) {
  if (p.blocks.empty())
    throw std::invalid_argument("encode_content: uninitialized parameters");
  Var h = mel;
  int layer = 0;
  for (const ConvLayer& block : p.blocks) {
    h = ad::tanh_of(conv1d(h, block));
    if (!h.value().allFinite())
      throw std::runtime_error(
          "encode_content: non-finite activations after block " +
          std::to_string(layer) + " (input range [" +
          std::to_string(mel.value().minCoeff()) + ", " +
          std::to_string(mel.value().maxCoeff()) + "])");
    ++layer;
  }
  return h;
}

ad::Var encode_content(const MelSpectrogram& mel,
                       const ContentEncoderParams& p) {
  return encode_content(Var::constant(mel.frames), p);
}

int content_output_length(const ModelConfig& cfg, int t_frames) {
  return conv_stack_out_length(t_frames, cfg.content_strides, cfg.kernel,
                               (cfg.kernel - 1) / 2);
}

std::pair<int, int> content_receptive_field(const ModelConfig& cfg, int t) {
  return conv_stack_receptive_field(t, cfg.content_strides, cfg.kernel,
                                    (cfg.kernel - 1) / 2);
}

Codebook make_codebook(int size, int dim, Rng& rng) {
  double a = 1.0 / size;
  ad::Matrix codes(size, dim);
  for (int k = 0; k < size; ++k)
    for (int d = 0; d < dim; ++d) codes(k, d) = rng.uniform(-a, a);
  Codebook cb;
  cb.codes = Var::param(std::move(codes));
  return cb;
}

QuantizeResult quantize(const ad::Var& z, const Codebook& codebook) {
  if (z.cols() != codebook.dim())
    throw std::invalid_argument(
        "quantize: feature dimension " + std::to_string(z.cols()) +
        " does not match codebook dimension " +
        std::to_string(codebook.dim()));

  const ad::Matrix& codes = codebook.codes.value();
  QuantizeResult r;
  r.indices.resize(z.rows());
  for (int t = 0; t < z.rows(); ++t) {
    double best = std::numeric_limits<double>::infinity();
    int best_k = 0;
    for (int k = 0; k < codes.rows(); ++k) {
      double d = (z.value().row(t) - codes.row(k)).squaredNorm();
      if (d < best) {  // strict: ties keep the lowest index
        best = d;
        best_k = k;
      }
    }
    r.indices[t] = best_k;
  }

  Var gathered = ad::gather_rows(codebook.codes, r.indices);
  r.quantized = ad::straight_through(z, gathered);

  // Row-norm means, with stop-gradients so each term trains one side only.
  double t_rows = static_cast<double>(z.rows());
  Var commit_diff = z - ad::detach(gathered);
  r.commitment_term =
      ad::scale(ad::sum_all(ad::hadamard(commit_diff, commit_diff)),
                1.0 / t_rows);
  Var code_diff = ad::detach(z) - gathered;
  r.codebook_term = ad::scale(
      ad::sum_all(ad::hadamard(code_diff, code_diff)), 1.0 / t_rows);
  r.l_q = r.commitment_term + r.codebook_term;
  return r;
}

ad::Var grl(const ad::Var& x, double lambda) {
  return ad::grad_reversal(x, lambda);
}

SpeakerClassifierParams make_speaker_classifier(const ModelConfig& cfg,
                                                Rng& rng) {
  SpeakerClassifierParams p;
  p.hidden = make_dense(cfg.d_c, cfg.classifier_hidden, rng);
  p.out = make_dense(cfg.classifier_hidden, cfg.d_g(), rng);
  return p;
}

ad::Var predict_speaker(const ad::Var& content,
                        const SpeakerClassifierParams& p) {
  if (content.cols() != p.hidden.weight.rows())
    throw std::invalid_argument("predict_speaker: content width " +
                                std::to_string(content.cols()) +
                                " does not match classifier input " +
                                std::to_string(p.hidden.weight.rows()));
  Var pooled = ad::colwise_mean(content);
  return dense(ad::tanh_of(dense(pooled, p.hidden)), p.out);
}

ad::Var adversarial_loss(const ad::Var& content, const ad::Var& speaker_gse,
                         const SpeakerClassifierParams& p, double grl_lambda) {
  Var prediction = predict_speaker(grl(content, grl_lambda), p);
  if (prediction.cols() != speaker_gse.cols() || speaker_gse.rows() != 1)
    throw std::invalid_argument(
        "adversarial_loss: prediction is 1x" +
        std::to_string(prediction.cols()) + " but target is " +
        std::to_string(speaker_gse.rows()) + "x" +
        std::to_string(speaker_gse.cols()));
  return ad::l1_sum(prediction, ad::detach(speaker_gse));
}

}  // namespace melvc
