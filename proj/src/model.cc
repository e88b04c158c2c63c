// melvc/model.cc
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

#include "melvc/model.h"

#include <stdexcept>
#include <string>

namespace melvc {

using ad::Var;

DecoderParams make_decoder(const ModelConfig& cfg, Rng& rng) {
  DecoderParams p;
  int in = cfg.d_c + cfg.lpe_width() / 2 + cfg.d_g();
  p.conv_pre = make_conv(in, cfg.decoder_channels[0], cfg.kernel, 1, rng);
  p.conv_post = make_conv(cfg.decoder_channels[0], cfg.decoder_channels[1],
                          cfg.kernel, 1, rng);
  p.head = make_dense(cfg.decoder_channels[1], cfg.n_mels, rng);
  return p;
}

ad::Var decode(const ad::Var& content, const ad::Var& aligned_prosody,
               const ad::Var& gse, const DecoderParams& p, int target_t) {
  if (content.rows() != aligned_prosody.rows())
    throw std::invalid_argument(
        "decode: content has " + std::to_string(content.rows()) +
        " time steps but aligned prosody has " +
        std::to_string(aligned_prosody.rows()));
  if (gse.rows() != 1)
    throw std::invalid_argument("decode: gse must be a row vector");
  if (target_t < 1 || target_t > 2 * content.rows())
    throw std::invalid_argument("decode: target length " +
                                std::to_string(target_t) +
                                " is not reachable from " +
                                std::to_string(content.rows()) +
                                " content steps");

  Var frames = ad::concat_cols(ad::concat_cols(content, aligned_prosody),
                               ad::broadcast_row(gse, content.rows()));
  Var h = ad::tanh_of(conv1d(frames, p.conv_pre));
  h = ad::upsample_rows2(h);
  h = ad::tanh_of(conv1d(h, p.conv_post));
  Var mel = dense(h, p.head);
  if (mel.rows() != target_t) mel = ad::slice_rows(mel, 0, target_t);
  return mel;
}

namespace {

void collect_conv(std::vector<NamedParam>& out, const std::string& prefix,
                  const ConvLayer& conv) {
  out.push_back({prefix + ".weight", conv.weight});
  out.push_back({prefix + ".bias", conv.bias});
}

void collect_dense(std::vector<NamedParam>& out, const std::string& prefix,
                   const Dense& d) {
  out.push_back({prefix + ".weight", d.weight});
  out.push_back({prefix + ".bias", d.bias});
}

void collect_gru(std::vector<NamedParam>& out, const std::string& prefix,
                 const GruParams& g) {
  out.push_back({prefix + ".wz", g.wz});
  out.push_back({prefix + ".wr", g.wr});
  out.push_back({prefix + ".wh", g.wh});
  out.push_back({prefix + ".uz", g.uz});
  out.push_back({prefix + ".ur", g.ur});
  out.push_back({prefix + ".uh", g.uh});
  out.push_back({prefix + ".bz", g.bz});
  out.push_back({prefix + ".br", g.br});
  out.push_back({prefix + ".bh", g.bh});
}

}  // namespace

std::vector<NamedParam> ModelState::named_params() {
  std::vector<NamedParam> out;
  for (std::size_t i = 0; i < content.blocks.size(); ++i)
    collect_conv(out, "content.block" + std::to_string(i), content.blocks[i]);
  for (std::size_t i = 0; i < style.convs.size(); ++i)
    collect_conv(out, "style.conv" + std::to_string(i), style.convs[i]);
  collect_gru(out, "style.gru_fwd", style.fwd);
  collect_gru(out, "style.gru_bwd", style.bwd);
  if (align.has_projection)
    out.push_back({"align.query_proj", align.query_proj});
  collect_dense(out, "classifier.hidden", classifier.hidden);
  collect_dense(out, "classifier.out", classifier.out);
  collect_conv(out, "decoder.conv_pre", decoder.conv_pre);
  collect_conv(out, "decoder.conv_post", decoder.conv_post);
  collect_dense(out, "decoder.head", decoder.head);
  out.push_back({"fusion.w_query", fusion.w_query});
  out.push_back({"fusion.w_key", fusion.w_key});
  out.push_back({"fusion.w_value", fusion.w_value});
  out.push_back({"codebook.codes", codebook.codes});
  return out;
}

std::vector<NamedParam> ModelState::named_params() const {
  return const_cast<ModelState*>(this)->named_params();
}

ModelState ModelState::clone() const {
  ModelState copy = init_model(cfg, 0);
  copy.step = step;
  copy.config_fingerprint = config_fingerprint;
  auto src = named_params();
  auto dst = copy.named_params();
  for (std::size_t i = 0; i < src.size(); ++i)
    dst[i].var.mutable_value() = src[i].var.value();
  return copy;
}

ModelState init_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  ModelState s;
  s.cfg = cfg;
  s.content = make_content_encoder(cfg, rng);
  s.style = make_style_encoder(cfg, rng);
  s.align = make_align_params(cfg, rng);
  s.classifier = make_speaker_classifier(cfg, rng);
  s.decoder = make_decoder(cfg, rng);
  s.fusion = make_dynamic_fusion(cfg);
  s.codebook = make_codebook(cfg.codebook_size, cfg.d_c, rng);
  return s;
}

ReconstructionGraph build_reconstruction(const ad::Var& mel,
                                         ModelState& state) {
  if (mel.cols() != state.cfg.n_mels)
    throw std::invalid_argument("build_reconstruction: mel has " +
                                std::to_string(mel.cols()) +
                                " channels, model expects " +
                                std::to_string(state.cfg.n_mels));
  ReconstructionGraph g;
  g.z = encode_content(mel, state.content);
  g.vq = quantize(g.z, state.codebook);
  g.style = encode_style(mel, state.style, state.cfg);
  g.alignment = align_prosody(g.vq.quantized, g.style.lpe, state.align);
  g.m_recon = decode(g.vq.quantized, g.alignment.aligned, g.style.gse,
                     state.decoder, mel.rows());
  return g;
}

MelSpectrogram reconstruct(const MelSpectrogram& mel, ModelState& state) {
  ReconstructionGraph g = build_reconstruction(Var::constant(mel.frames),
                                               state);
  MelSpectrogram out;
  out.frames = g.m_recon.value();
  out.frame_rate_hz = mel.frame_rate_hz;
  out.speaker_id = mel.speaker_id;
  out.utterance_id = mel.utterance_id + "_recon";
  return out;
}

MelSpectrogram convert(const MelSpectrogram& source,
                       const MelSpectrogram& target, ModelState& state) {
  Var src = Var::constant(source.frames);
  Var z = encode_content(src, state.content);
  QuantizeResult vq = quantize(z, state.codebook);
  StyleEncoding src_style = encode_style(src, state.style, state.cfg);
  StyleEncoding tgt_style =
      encode_style(Var::constant(target.frames), state.style, state.cfg);
  AlignResult aligned = align_prosody(vq.quantized, src_style.lpe,
                                      state.align);
  Var mel = decode(vq.quantized, aligned.aligned, tgt_style.gse,
                   state.decoder, source.T());
  MelSpectrogram out;
  out.frames = mel.value();
  out.frame_rate_hz = source.frame_rate_hz;
  out.speaker_id = target.speaker_id;
  out.utterance_id = source.utterance_id + "_to_" + target.speaker_id;
  return out;
}

Eigen::VectorXd gse_of(const MelSpectrogram& mel, ModelState& state) {
  StyleEncoding enc = encode_style(mel, state.style, state.cfg);
  return enc.gse.value().row(0).transpose();
}

}  // namespace melvc
