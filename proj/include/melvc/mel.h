// melvc/mel.h
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

#ifndef MELVC_MEL_H_
#define MELVC_MEL_H_

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace melvc {

// Log-mel spectrogram, the common currency between all modules.
// frames is [T x C]: one row per analysis frame, one column per mel channel.
struct MelSpectrogram {
  Eigen::MatrixXd frames;
  double frame_rate_hz = 100.0;
  std::string speaker_id;    // optional
  std::string utterance_id;

  int T() const { return static_cast<int>(frames.rows()); }
  int C() const { return static_cast<int>(frames.cols()); }
};

struct MelConfig {
  double sample_rate = 16000.0;
  int n_mels = 80;
  double win_ms = 25.0;
  double hop_ms = 10.0;
  double log_floor = 1e-5;  // power floor before the log
};

// Triangular mel filterbank on the HTK mel scale, peak amplitude 1.
// Returns [n_fft/2 + 1, n_mels].
Eigen::MatrixXd mel_filterbank(const MelConfig& config, int n_fft);

// Center frequency (Hz) of mel band `m` under the same construction.
double mel_band_center_hz(const MelConfig& config, int m);

int mel_fft_size(const MelConfig& config);  // next power of two >= window

// STFT power -> mel filterbank -> natural log with a fixed floor.
// Throws std::invalid_argument on an empty waveform and std::runtime_error
// when sample_rate disagrees with the config.
MelSpectrogram compute_mel(std::span<const double> waveform,
                           double sample_rate, const MelConfig& config);

struct CorpusSpec {
  int n_speakers = 2;
  int utterances_per_speaker = 10;
  int min_frames = 48;
  int max_frames = 64;
  int mel_channels = 32;
  std::uint64_t seed = 0;
};

struct Corpus {
  std::vector<MelSpectrogram> items;
  std::map<std::string, std::vector<int>> by_speaker;  // speaker -> indices

  void add(MelSpectrogram mel);
  int size() const { return static_cast<int>(items.size()); }
};

// Deterministic multi-speaker corpus generated directly in the mel domain:
// each speaker has a fixed random spectral envelope, each utterance adds
// random smooth time contours on top. Same spec => bit-identical corpus.
Corpus generate_synthetic_corpus(const CorpusSpec& spec);

// Leading-frame crop of both inputs to min(T_a, T_b).
std::pair<MelSpectrogram, MelSpectrogram> crop_to_common_length(
    const MelSpectrogram& a, const MelSpectrogram& b);

// .melspec container: uint32 T, uint32 C, float32 frame_rate_hz, then
// T*C float32 values row-major, all little-endian native.
void write_melspec(const std::filesystem::path& path,
                   const MelSpectrogram& mel);
MelSpectrogram read_melspec(const std::filesystem::path& path);

// Directory layout: <dir>/<speaker_id>/<utterance_id>.melspec
void save_corpus(const std::filesystem::path& dir, const Corpus& corpus);
Corpus load_corpus(const std::filesystem::path& dir);

}  // namespace melvc

#endif  // MELVC_MEL_H_
