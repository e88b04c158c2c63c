// melvc/trainer.h
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

#ifndef MELVC_TRAINER_H_
#define MELVC_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <vector>

#include "melvc/config.h"
#include "melvc/fusion.h"
#include "melvc/mel.h"
#include "melvc/model.h"
#include "melvc/objectives.h"
#include "melvc/rng.h"

namespace melvc {

// Anchor/positive/negatives grouping that drives the contrastive loss.
// The positive shares the anchor's speaker; every negative has a different
// speaker; negatives[fused_negative_index] is the fusion source.
struct ContrastiveBatch {
  MelSpectrogram anchor;
  MelSpectrogram positive;
  std::vector<MelSpectrogram> negatives;
  int fused_negative_index = 0;

  void validate() const;  // throws std::invalid_argument on a broken contract
};

// Anchor speaker drawn among speakers with >= 2 utterances; one utterance
// from each of up to speakers_per_batch-1 other speakers as negatives.
// Throws std::invalid_argument when the corpus cannot satisfy that.
ContrastiveBatch sample_contrastive_batch(const Corpus& corpus, Rng& rng,
                                          const TrainConfig& cfg);

struct StepMetrics {
  std::uint64_t step = 0;
  double l_recon = 0, l_sim = 0, l_q = 0, l_adv = 0, l_cc = 0, total = 0;
};

// Append-only JSON-lines sink for per-step metrics.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::filesystem::path& path);
  void write(const StepMetrics& m);

 private:
  std::ofstream os_;
  std::filesystem::path path_;
};

// The full training graph of one step, kept around so tests can backprop
// individual terms.
struct TrainGraph {
  ReconstructionGraph recon;
  ad::Var g2;        // GSE of the fusion-source negative
  ad::Var g_fused;   // G_n
  ad::Var m_syn;
  ad::Var g_syn;     // E_spk(M_syn) global output
  ad::Var g_anchor;  // E_spk(M_recon) global output
  ad::Var g_positive;
  std::vector<ad::Var> negative_gses;  // as consumed by the contrastive loss
  LossParts parts;
  ad::Var total;
};

// Builds the whole step graph. `linear_plan` must be provided under the
// linear fusion scheme and is ignored under the dynamic scheme.
TrainGraph build_train_graph(const ContrastiveBatch& batch, ModelState& state,
                             const TrainConfig& cfg,
                             const std::optional<LinearFusionPlan>& linear_plan);

struct AdamState {
  std::vector<ad::Matrix> m;
  std::vector<ad::Matrix> v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One Adam update from the gradients currently stored on `params`.
void adam_update(std::vector<NamedParam>& params, AdamState& opt, double lr);

class Trainer {
 public:
  Trainer(ModelState state, TrainConfig cfg);

  // Restores a trainer mid-run (checkpoint loading).
  Trainer(ModelState state, TrainConfig cfg, AdamState opt,
          const std::string& rng_state);

  // One optimization step on an explicit batch (linear-fusion start is drawn
  // from the trainer RNG) or on a batch sampled from the corpus.
  StepMetrics step(const ContrastiveBatch& batch);
  StepMetrics step(const Corpus& corpus);

  // Runs `steps` sampled steps; the sink, when set, sees each metrics row.
  std::vector<StepMetrics> run(
      const Corpus& corpus, int steps,
      const std::function<void(const StepMetrics&)>& sink = nullptr);

  ModelState& state() { return state_; }
  const ModelState& state() const { return state_; }
  const TrainConfig& config() const { return cfg_; }
  AdamState& optimizer() { return opt_; }
  const AdamState& optimizer() const { return opt_; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

 private:
  ModelState state_;
  TrainConfig cfg_;
  AdamState opt_;
  Rng rng_;
};

}  // namespace melvc

#endif  // MELVC_TRAINER_H_
