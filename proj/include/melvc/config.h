// melvc/config.h
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

#ifndef MELVC_CONFIG_H_
#define MELVC_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace melvc {

enum class FusionScheme { kLinear, kDynamic };

std::string to_string(FusionScheme s);
FusionScheme fusion_scheme_from_string(const std::string& s);

// Network shape. The style conv strides (2,1,2,1,2,2) and codebook size 128
// are the reference settings; everything else is sized for desk-scale runs.
struct ModelConfig {
  int n_mels = 80;
  int d_c = 64;  // content feature / codebook dimension
  int codebook_size = 128;
  std::vector<int> content_channels = {64, 64, 64};
  std::vector<int> content_strides = {2, 1, 1};
  std::vector<int> style_channels = {32, 32, 64, 64, 128, 128};
  std::vector<int> style_strides = {2, 1, 2, 1, 2, 2};
  int kernel = 3;
  int gru_hidden = 64;  // GSE and LPE widths are both 2 * gru_hidden
  int classifier_hidden = 128;
  std::vector<int> decoder_channels = {128, 128};
  int n_groups = 4;  // dynamic-fusion group count

  int d_g() const { return 2 * gru_hidden; }
  int lpe_width() const { return 2 * gru_hidden; }
  int style_stride_product() const;
  int min_style_frames() const { return style_stride_product(); }

  void validate() const;  // throws std::runtime_error on inconsistency
};

struct LossWeights {
  double alpha = 0.01;   // L_sim
  double beta = 0.1;     // L_q
  double lambda = 0.5;   // L_adv
  double gamma = 0.5;    // L_cc
};

struct TrainConfig {
  LossWeights weights;
  FusionScheme fusion = FusionScheme::kDynamic;
  double learning_rate = 1e-3;
  int speakers_per_batch = 4;
  int utterances_per_speaker = 2;
  int total_steps = 2000;
  std::uint64_t seed = 1;
  double grl_lambda = 1.0;
  int n_groups = 4;
  int mix_interval = 5;
  double max_mix_fraction = 0.5;
  bool include_plain_fused_negative = true;
  bool detach_syn = false;
};

// Flat key=value files ('#' comments, blank lines ignored).
std::map<std::string, std::string> read_kv_file(
    const std::filesystem::path& path);

struct MelConfig;  // melvc/mel.h

// Applies recognized keys onto defaults; unknown keys throw.
void apply_kv(const std::map<std::string, std::string>& kv, ModelConfig* model,
              TrainConfig* train);
void apply_mel_kv(const std::map<std::string, std::string>& kv,
                  MelConfig* mel);

// Canonical text form (stable key order) and its FNV-1a hash; the hash is
// stored in checkpoints as the config fingerprint.
std::string canonical_config_text(const ModelConfig& model,
                                  const TrainConfig& train);
std::uint64_t fnv1a64(const std::string& text);

ModelConfig model_config_from_text(const std::string& canonical);
TrainConfig train_config_from_text(const std::string& canonical);

}  // namespace melvc

#endif  // MELVC_CONFIG_H_
