// melvc/trainer.cc
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

#include "melvc/trainer.h"

#include <cmath>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace melvc {

using ad::Var;

MetricsWriter::MetricsWriter(const std::filesystem::path& path)
    : os_(path, std::ios::app), path_(path) {
  if (!os_)
    throw std::runtime_error("MetricsWriter: cannot open " + path.string());
}

void MetricsWriter::write(const StepMetrics& m) {
  nlohmann::json row{{"step", m.step},     {"l_recon", m.l_recon},
                     {"l_sim", m.l_sim},   {"l_q", m.l_q},
                     {"l_adv", m.l_adv},   {"l_cc", m.l_cc},
                     {"total", m.total}};
  os_ << row.dump() << "\n";
  if (!os_)
    throw std::runtime_error("MetricsWriter: write failed for " +
                             path_.string());
}

void ContrastiveBatch::validate() const {
  if (anchor.T() < 1 || positive.T() < 1)
    throw std::invalid_argument("ContrastiveBatch: empty utterance");
  if (anchor.speaker_id != positive.speaker_id)
    throw std::invalid_argument(
        "ContrastiveBatch: positive speaker differs from anchor");
  if (anchor.utterance_id == positive.utterance_id)
    throw std::invalid_argument(
        "ContrastiveBatch: positive must be a different utterance");
  if (negatives.empty())
    throw std::invalid_argument("ContrastiveBatch: no negatives");
  for (const auto& negative : negatives)
    if (negative.speaker_id == anchor.speaker_id)
      throw std::invalid_argument(
          "ContrastiveBatch: negative shares the anchor speaker");
  if (fused_negative_index < 0 ||
      fused_negative_index >= static_cast<int>(negatives.size()))
    throw std::invalid_argument(
        "ContrastiveBatch: fused_negative_index out of range");
}

ContrastiveBatch sample_contrastive_batch(const Corpus& corpus, Rng& rng,
                                          const TrainConfig& cfg) {
  std::vector<const std::string*> anchor_candidates;
  for (const auto& [speaker, indices] : corpus.by_speaker)
    if (indices.size() >= 2) anchor_candidates.push_back(&speaker);
  if (anchor_candidates.empty())
    throw std::invalid_argument(
        "sample_contrastive_batch: no speaker has two utterances");
  if (corpus.by_speaker.size() < 2)
    throw std::invalid_argument(
        "sample_contrastive_batch: need at least two speakers");

  const std::string& anchor_spk =
      *anchor_candidates[rng.uniform_int(
          static_cast<int>(anchor_candidates.size()))];
  const auto& anchor_utts = corpus.by_speaker.at(anchor_spk);
  int a = rng.uniform_int(static_cast<int>(anchor_utts.size()));
  int p = rng.uniform_int(static_cast<int>(anchor_utts.size()) - 1);
  if (p >= a) ++p;  // distinct positive

  ContrastiveBatch batch;
  batch.anchor = corpus.items[anchor_utts[a]];
  batch.positive = corpus.items[anchor_utts[p]];

  std::vector<const std::string*> others;
  for (const auto& [speaker, indices] : corpus.by_speaker)
    if (speaker != anchor_spk) others.push_back(&speaker);
  int want = std::max(1, cfg.speakers_per_batch - 1);
  // Partial Fisher-Yates over the other speakers.
  for (int i = 0; i < want && i < static_cast<int>(others.size()); ++i) {
    int j = i + rng.uniform_int(static_cast<int>(others.size()) - i);
    std::swap(others[i], others[j]);
    const auto& utts = corpus.by_speaker.at(*others[i]);
    int u = rng.uniform_int(static_cast<int>(utts.size()));
    batch.negatives.push_back(corpus.items[utts[u]]);
  }
  batch.fused_negative_index = 0;
  batch.validate();
  return batch;
}

TrainGraph build_train_graph(
    const ContrastiveBatch& batch, ModelState& state, const TrainConfig& cfg,
    const std::optional<LinearFusionPlan>& linear_plan) {
  batch.validate();
  TrainGraph g;

  Var mel1 = Var::constant(batch.anchor.frames);
  g.recon = build_reconstruction(mel1, state);

  const MelSpectrogram& fusion_source =
      batch.negatives[batch.fused_negative_index];
  StyleEncoding neg_style = encode_style(fusion_source, state.style,
                                         state.cfg);
  g.g2 = neg_style.gse;

  if (cfg.fusion == FusionScheme::kDynamic) {
    g.g_fused = dynamic_fuse(g.recon.style.gse, g.g2, state.fusion).fused;
  } else {
    if (!linear_plan.has_value())
      throw std::invalid_argument(
          "build_train_graph: linear fusion needs a plan");
    auto [a, b] = crop_to_common_length(batch.anchor, fusion_source);
    LinearFuseResult fused = linear_fuse(a, b, *linear_plan);
    g.g_fused = encode_style(fused.mel, state.style, state.cfg).gse;
  }

  // Same content and prosody, fused speaker identity.
  g.m_syn = decode(g.recon.vq.quantized, g.recon.alignment.aligned, g.g_fused,
                   state.decoder, batch.anchor.T());
  Var syn_for_embedding = cfg.detach_syn ? ad::detach(g.m_syn) : g.m_syn;
  g.g_syn = encode_style(syn_for_embedding, state.style, state.cfg).gse;

  g.g_anchor = encode_style(g.recon.m_recon, state.style, state.cfg).gse;
  g.g_positive = encode_style(batch.positive, state.style, state.cfg).gse;

  g.negative_gses.push_back(g.g_syn);
  if (cfg.include_plain_fused_negative) g.negative_gses.push_back(g.g2);
  for (int i = 0; i < static_cast<int>(batch.negatives.size()); ++i) {
    if (i == batch.fused_negative_index) continue;
    g.negative_gses.push_back(
        encode_style(batch.negatives[i], state.style, state.cfg).gse);
  }

  g.parts.l_recon = reconstruction_loss(g.recon.m_recon, mel1);
  g.parts.l_sim = contrastive_loss(g.g_anchor, g.g_positive, g.negative_gses);
  g.parts.l_q = g.recon.vq.l_q;
  g.parts.l_adv = adversarial_loss(g.recon.z, g.recon.style.gse,
                                   state.classifier, cfg.grl_lambda);
  g.parts.l_cc = consistency_loss(g.recon.m_recon, g.m_syn);
  g.total = total_loss(g.parts, cfg.weights);
  return g;
}

void adam_update(std::vector<NamedParam>& params, AdamState& opt, double lr) {
  if (opt.m.empty()) {
    opt.m.resize(params.size());
    opt.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      opt.m[i] = ad::Matrix::Zero(params[i].var.rows(), params[i].var.cols());
      opt.v[i] = ad::Matrix::Zero(params[i].var.rows(), params[i].var.cols());
    }
  }
  if (opt.m.size() != params.size())
    throw std::runtime_error("adam_update: optimizer state size mismatch");

  opt.t += 1;
  double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.t));
  double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    ad::Matrix g = params[i].var.grad();
    opt.m[i] = opt.beta1 * opt.m[i] + (1.0 - opt.beta1) * g;
    opt.v[i] = opt.beta2 * opt.v[i] +
               (1.0 - opt.beta2) * g.cwiseProduct(g);
    ad::Matrix m_hat = opt.m[i] / bc1;
    ad::Matrix v_hat = opt.v[i] / bc2;
    params[i].var.mutable_value() -=
        lr * m_hat.cwiseQuotient(
                 (v_hat.cwiseSqrt().array() + opt.epsilon).matrix());
  }
}

Trainer::Trainer(ModelState state, TrainConfig cfg)
    : state_(std::move(state)), cfg_(cfg), rng_(cfg.seed) {
  if (cfg_.fusion == FusionScheme::kLinear && cfg_.mix_interval < 1)
    throw std::invalid_argument("Trainer: mix_interval must be >= 1");
}

Trainer::Trainer(ModelState state, TrainConfig cfg, AdamState opt,
                 const std::string& rng_state)
    : state_(std::move(state)), cfg_(cfg), opt_(std::move(opt)),
      rng_(cfg.seed) {
  rng_.deserialize(rng_state);
}

StepMetrics Trainer::step(const ContrastiveBatch& batch) {
  std::optional<LinearFusionPlan> plan;
  if (cfg_.fusion == FusionScheme::kLinear) {
    int common_t = std::min(
        batch.anchor.T(), batch.negatives[batch.fused_negative_index].T());
    LinearFusionPlan p;
    p.start = rng_.uniform_int(common_t);
    p.interval = cfg_.mix_interval;
    p.max_mix_fraction = cfg_.max_mix_fraction;
    plan = p;
  }

  TrainGraph graph = build_train_graph(batch, state_, cfg_, plan);

  StepMetrics metrics;
  metrics.l_recon = graph.parts.l_recon.scalar();
  metrics.l_sim = graph.parts.l_sim.scalar();
  metrics.l_q = graph.parts.l_q.scalar();
  metrics.l_adv = graph.parts.l_adv.scalar();
  metrics.l_cc = graph.parts.l_cc.scalar();
  metrics.total = graph.total.scalar();
  if (!std::isfinite(metrics.total))
    throw std::runtime_error(
        "train_step aborted: non-finite total loss (l_recon=" +
        std::to_string(metrics.l_recon) + " l_sim=" +
        std::to_string(metrics.l_sim) + " l_q=" + std::to_string(metrics.l_q) +
        " l_adv=" + std::to_string(metrics.l_adv) + " l_cc=" +
        std::to_string(metrics.l_cc) + ")");

  auto params = state_.named_params();
  for (auto& p : params) p.var.zero_grad();
  ad::backward(graph.total);
  adam_update(params, opt_, cfg_.learning_rate);
  for (auto& p : params) p.var.zero_grad();

  state_.step += 1;
  metrics.step = state_.step;
  return metrics;
}

StepMetrics Trainer::step(const Corpus& corpus) {
  ContrastiveBatch batch = sample_contrastive_batch(corpus, rng_, cfg_);
  return step(batch);
}

std::vector<StepMetrics> Trainer::run(
    const Corpus& corpus, int steps,
    const std::function<void(const StepMetrics&)>& sink) {
  std::vector<StepMetrics> history;
  history.reserve(steps);
  for (int i = 0; i < steps; ++i) {
    StepMetrics m = step(corpus);
    if (sink) sink(m);
    history.push_back(m);
  }
  return history;
}

}  // namespace melvc
