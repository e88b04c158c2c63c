// melvc/config.cc
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

#include "melvc/config.h"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "melvc/mel.h"

namespace melvc {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(std::stoi(trim(item)));
  if (out.empty()) throw std::runtime_error("empty integer list");
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::runtime_error("bad boolean value: " + s);
}

}  // namespace

std::string to_string(FusionScheme s) {
  return s == FusionScheme::kLinear ? "linear" : "dynamic";
}

FusionScheme fusion_scheme_from_string(const std::string& s) {
  if (s == "linear") return FusionScheme::kLinear;
  if (s == "dynamic") return FusionScheme::kDynamic;
  throw std::runtime_error("unknown fusion scheme: " + s +
                           " (expected linear or dynamic)");
}

int ModelConfig::style_stride_product() const {
  int p = 1;
  for (int s : style_strides) p *= s;
  return p;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) {
    throw std::runtime_error("ModelConfig: " + m);
  };
  if (n_mels < 1) fail("n_mels must be >= 1");
  if (d_c < 1) fail("d_c must be >= 1");
  if (codebook_size < 1) fail("codebook_size must be >= 1");
  if (kernel < 1 || kernel % 2 == 0) fail("kernel must be odd");
  if (content_channels.size() != content_strides.size())
    fail("content channel/stride lists differ in length");
  if (style_channels.size() != style_strides.size())
    fail("style channel/stride lists differ in length");
  if (content_channels.empty() || style_channels.empty())
    fail("encoder stacks must be non-empty");
  if (content_channels.back() != d_c)
    fail("last content channel count must equal d_c");
  if (gru_hidden < 1) fail("gru_hidden must be >= 1");
  if (d_g() % 2 != 0) fail("d_g must be even");
  if (n_groups < 1 || d_g() % n_groups != 0)
    fail("n_groups must divide d_g");
  if (decoder_channels.size() != 2) fail("decoder needs two conv widths");
}

std::map<std::string, std::string> read_kv_file(
    const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is)
    throw std::runtime_error("cannot open config file " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected key=value");
    kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return kv;
}

void apply_kv(const std::map<std::string, std::string>& kv, ModelConfig* model,
              TrainConfig* train) {
  for (const auto& [key, value] : kv) {
    if (key == "n_mels") model->n_mels = std::stoi(value);
    else if (key == "d_c") model->d_c = std::stoi(value);
    else if (key == "codebook_size") model->codebook_size = std::stoi(value);
    else if (key == "content_channels")
      model->content_channels = parse_int_list(value);
    else if (key == "content_strides")
      model->content_strides = parse_int_list(value);
    else if (key == "style_channels")
      model->style_channels = parse_int_list(value);
    else if (key == "style_strides")
      model->style_strides = parse_int_list(value);
    else if (key == "kernel") model->kernel = std::stoi(value);
    else if (key == "gru_hidden") model->gru_hidden = std::stoi(value);
    else if (key == "classifier_hidden")
      model->classifier_hidden = std::stoi(value);
    else if (key == "decoder_channels")
      model->decoder_channels = parse_int_list(value);
    else if (key == "alpha") train->weights.alpha = std::stod(value);
    else if (key == "beta") train->weights.beta = std::stod(value);
    else if (key == "lambda") train->weights.lambda = std::stod(value);
    else if (key == "gamma") train->weights.gamma = std::stod(value);
    else if (key == "fusion")
      train->fusion = fusion_scheme_from_string(value);
    else if (key == "learning_rate") train->learning_rate = std::stod(value);
    else if (key == "speakers_per_batch")
      train->speakers_per_batch = std::stoi(value);
    else if (key == "utterances_per_speaker")
      train->utterances_per_speaker = std::stoi(value);
    else if (key == "total_steps") train->total_steps = std::stoi(value);
    else if (key == "seed") train->seed = std::stoull(value);
    else if (key == "grl_lambda") train->grl_lambda = std::stod(value);
    else if (key == "n_groups") {
      train->n_groups = std::stoi(value);
      model->n_groups = train->n_groups;
    } else if (key == "mix_interval")
      train->mix_interval = std::stoi(value);
    else if (key == "max_mix_fraction")
      train->max_mix_fraction = std::stod(value);
    else if (key == "include_plain_fused_negative")
      train->include_plain_fused_negative = parse_bool(value);
    else if (key == "detach_syn") train->detach_syn = parse_bool(value);
    else
      throw std::runtime_error("unknown config key: " + key);
  }
  model->validate();
}

void apply_mel_kv(const std::map<std::string, std::string>& kv,
                  MelConfig* mel) {
  for (const auto& [key, value] : kv) {
    if (key == "sample_rate") mel->sample_rate = std::stod(value);
    else if (key == "n_mels") mel->n_mels = std::stoi(value);
    else if (key == "win_ms") mel->win_ms = std::stod(value);
    else if (key == "hop_ms") mel->hop_ms = std::stod(value);
    else if (key == "log_floor") mel->log_floor = std::stod(value);
    else
      throw std::runtime_error("unknown mel config key: " + key);
  }
}

std::string canonical_config_text(const ModelConfig& m, const TrainConfig& t) {
  std::ostringstream os;
  os.precision(17);
  os << "alpha=" << t.weights.alpha << "\n"
     << "beta=" << t.weights.beta << "\n"
     << "classifier_hidden=" << m.classifier_hidden << "\n"
     << "codebook_size=" << m.codebook_size << "\n"
     << "content_channels=" << join(m.content_channels) << "\n"
     << "content_strides=" << join(m.content_strides) << "\n"
     << "d_c=" << m.d_c << "\n"
     << "decoder_channels=" << join(m.decoder_channels) << "\n"
     << "detach_syn=" << (t.detach_syn ? "true" : "false") << "\n"
     << "fusion=" << to_string(t.fusion) << "\n"
     << "gamma=" << t.weights.gamma << "\n"
     << "grl_lambda=" << t.grl_lambda << "\n"
     << "gru_hidden=" << m.gru_hidden << "\n"
     << "include_plain_fused_negative="
     << (t.include_plain_fused_negative ? "true" : "false") << "\n"
     << "kernel=" << m.kernel << "\n"
     << "lambda=" << t.weights.lambda << "\n"
     << "learning_rate=" << t.learning_rate << "\n"
     << "max_mix_fraction=" << t.max_mix_fraction << "\n"
     << "mix_interval=" << t.mix_interval << "\n"
     << "n_groups=" << t.n_groups << "\n"
     << "n_mels=" << m.n_mels << "\n"
     << "seed=" << t.seed << "\n"
     << "speakers_per_batch=" << t.speakers_per_batch << "\n"
     << "style_channels=" << join(m.style_channels) << "\n"
     << "style_strides=" << join(m.style_strides) << "\n"
     << "total_steps=" << t.total_steps << "\n"
     << "utterances_per_speaker=" << t.utterances_per_speaker << "\n";
  return os.str();
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

std::map<std::string, std::string> kv_from_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    std::string t = trim(line);
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("bad canonical config line: " + t);
    kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return kv;
}

}  // namespace

ModelConfig model_config_from_text(const std::string& canonical) {
  ModelConfig m;
  TrainConfig t;
  apply_kv(kv_from_text(canonical), &m, &t);
  return m;
}

TrainConfig train_config_from_text(const std::string& canonical) {
  ModelConfig m;
  TrainConfig t;
  apply_kv(kv_from_text(canonical), &m, &t);
  return t;
}

}  // namespace melvc
