// melvc/mel.cc
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

#include "melvc/mel.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "melvc/rng.h"

namespace melvc {

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

// In-place iterative radix-2 FFT; n must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

std::vector<double> mel_points(const MelConfig& config) {
  int n = config.n_mels + 2;
  double lo = hz_to_mel(0.0);
  double hi = hz_to_mel(config.sample_rate / 2.0);
  std::vector<double> pts(n);
  for (int i = 0; i < n; ++i)
    pts[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  return pts;
}

void put_u32(std::ofstream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f32(std::ofstream& os, float v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::ifstream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

float get_f32(std::ifstream& is) {
  float v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

}  // namespace

int mel_fft_size(const MelConfig& config) {
  int win = static_cast<int>(
      std::lround(config.sample_rate * config.win_ms / 1000.0));
  int n = 1;
  while (n < win) n <<= 1;
  return n;
}

Eigen::MatrixXd mel_filterbank(const MelConfig& config, int n_fft) {
  int n_bins = n_fft / 2 + 1;
  auto pts = mel_points(config);
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(n_bins, config.n_mels);
  for (int m = 0; m < config.n_mels; ++m) {
    double f_left = mel_to_hz(pts[m]);
    double f_center = mel_to_hz(pts[m + 1]);
    double f_right = mel_to_hz(pts[m + 2]);
    for (int k = 0; k < n_bins; ++k) {
      double f = static_cast<double>(k) * config.sample_rate / n_fft;
      if (f > f_left && f < f_center)
        fb(k, m) = (f - f_left) / (f_center - f_left);
      else if (f >= f_center && f < f_right)
        fb(k, m) = (f_right - f) / (f_right - f_center);
    }
  }
  return fb;
}

double mel_band_center_hz(const MelConfig& config, int m) {
  if (m < 0 || m >= config.n_mels)
    throw std::invalid_argument("mel_band_center_hz: band out of range");
  return mel_to_hz(mel_points(config)[m + 1]);
}

MelSpectrogram compute_mel(std::span<const double> waveform,
                           double sample_rate, const MelConfig& config) {
  if (waveform.empty())
    throw std::invalid_argument("compute_mel: empty waveform");
  if (sample_rate != config.sample_rate)
    throw std::runtime_error(
        "compute_mel: waveform sample rate " + std::to_string(sample_rate) +
        " does not match configured " + std::to_string(config.sample_rate));

  int win = static_cast<int>(
      std::lround(config.sample_rate * config.win_ms / 1000.0));
  int hop = static_cast<int>(
      std::lround(config.sample_rate * config.hop_ms / 1000.0));
  int n_fft = mel_fft_size(config);
  int n_bins = n_fft / 2 + 1;
  int n = static_cast<int>(waveform.size());
  int t_frames = n >= win ? 1 + (n - win) / hop : 1;

  std::vector<double> window(win);
  for (int i = 0; i < win; ++i)
    window[i] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / win);

  Eigen::MatrixXd fb = mel_filterbank(config, n_fft);
  MelSpectrogram mel;
  mel.frames.resize(t_frames, config.n_mels);
  mel.frame_rate_hz = config.sample_rate / hop;

  std::vector<std::complex<double>> buf(n_fft);
  Eigen::VectorXd power(n_bins);
  for (int t = 0; t < t_frames; ++t) {
    int off = t * hop;
    for (int i = 0; i < n_fft; ++i) {
      double s = (i < win && off + i < n) ? waveform[off + i] * window[i] : 0.0;
      buf[i] = {s, 0.0};
    }
    fft_radix2(buf);
    for (int k = 0; k < n_bins; ++k) power[k] = std::norm(buf[k]);
    Eigen::VectorXd energies = fb.transpose() * power;
    for (int m = 0; m < config.n_mels; ++m)
      mel.frames(t, m) = std::log(std::max(energies[m], config.log_floor));
  }
  return mel;
}

void Corpus::add(MelSpectrogram mel) {
  by_speaker[mel.speaker_id].push_back(static_cast<int>(items.size()));
  items.push_back(std::move(mel));
}

Corpus generate_synthetic_corpus(const CorpusSpec& spec) {
  if (spec.n_speakers < 1 || spec.utterances_per_speaker < 1 ||
      spec.min_frames < 1 || spec.max_frames < spec.min_frames ||
      spec.mel_channels < 1)
    throw std::invalid_argument("generate_synthetic_corpus: invalid spec");

  Rng rng(spec.seed);
  const int c = spec.mel_channels;
  const double base_level = -2.0;
  Corpus corpus;

  for (int s = 0; s < spec.n_speakers; ++s) {
    // Speaker identity: a fixed smooth spectral envelope.
    Eigen::VectorXd envelope = Eigen::VectorXd::Zero(c);
    for (int j = 1; j <= 3; ++j) {
      double amp = 0.8 * rng.normal();
      double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      for (int ch = 0; ch < c; ++ch)
        envelope[ch] +=
            amp * std::cos(std::numbers::pi * j * (ch + 0.5) / c + phase);
    }

    for (int u = 0; u < spec.utterances_per_speaker; ++u) {
      int t_len = spec.min_frames +
                  rng.uniform_int(spec.max_frames - spec.min_frames + 1);
      MelSpectrogram mel;
      mel.frames.resize(t_len, c);
      char spk[16], utt[16];
      std::snprintf(spk, sizeof spk, "spk%02d", s);
      std::snprintf(utt, sizeof utt, "utt%03d", u);
      mel.speaker_id = spk;
      mel.utterance_id = utt;

      // Content/prosody: smooth random time contours with their own
      // channel shapes, plus light observation noise.
      struct Contour {
        double amp, cycles, phase, ch_freq, ch_phase;
      };
      Contour contours[2];
      for (auto& k : contours)
        k = {0.5 * rng.normal(), rng.uniform(1.0, 4.0),
             rng.uniform(0.0, 2.0 * std::numbers::pi), rng.uniform(1.0, 3.0),
             rng.uniform(0.0, 2.0 * std::numbers::pi)};

      for (int t = 0; t < t_len; ++t)
        for (int ch = 0; ch < c; ++ch) {
          double v = base_level + envelope[ch];
          for (const auto& k : contours)
            v += k.amp *
                 std::sin(2.0 * std::numbers::pi * k.cycles * t / t_len +
                          k.phase) *
                 std::cos(std::numbers::pi * k.ch_freq * (ch + 0.5) / c +
                          k.ch_phase);
          v += 0.02 * rng.normal();
          mel.frames(t, ch) = v;
        }
      corpus.add(std::move(mel));
    }
  }
  return corpus;
}

std::pair<MelSpectrogram, MelSpectrogram> crop_to_common_length(
    const MelSpectrogram& a, const MelSpectrogram& b) {
  if (a.T() < 1 || b.T() < 1)
    throw std::invalid_argument("crop_to_common_length: empty input");
  int t = std::min(a.T(), b.T());
  MelSpectrogram ca = a, cb = b;
  ca.frames = a.frames.topRows(t);
  cb.frames = b.frames.topRows(t);
  return {std::move(ca), std::move(cb)};
}

void write_melspec(const std::filesystem::path& path,
                   const MelSpectrogram& mel) {
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw std::runtime_error("write_melspec: cannot open " + path.string());
  put_u32(os, static_cast<std::uint32_t>(mel.T()));
  put_u32(os, static_cast<std::uint32_t>(mel.C()));
  put_f32(os, static_cast<float>(mel.frame_rate_hz));
  for (int t = 0; t < mel.T(); ++t)
    for (int c = 0; c < mel.C(); ++c)
      put_f32(os, static_cast<float>(mel.frames(t, c)));
  if (!os)
    throw std::runtime_error("write_melspec: write failed for " +
                             path.string());
}

MelSpectrogram read_melspec(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw std::runtime_error("read_melspec: cannot open " + path.string());
  std::uint32_t t = get_u32(is), c = get_u32(is);
  float rate = get_f32(is);
  if (!is || t < 1 || c < 1)
    throw std::runtime_error("read_melspec: bad header in " + path.string());
  MelSpectrogram mel;
  mel.frames.resize(t, c);
  mel.frame_rate_hz = rate;
  for (std::uint32_t i = 0; i < t; ++i)
    for (std::uint32_t j = 0; j < c; ++j) mel.frames(i, j) = get_f32(is);
  if (!is)
    throw std::runtime_error("read_melspec: truncated file " + path.string());
  if (!mel.frames.allFinite())
    throw std::runtime_error("read_melspec: non-finite values in " +
                             path.string());
  mel.utterance_id = path.stem().string();
  mel.speaker_id = path.parent_path().filename().string();
  return mel;
}

void save_corpus(const std::filesystem::path& dir, const Corpus& corpus) {
  namespace fs = std::filesystem;
  for (const auto& mel : corpus.items) {
    fs::path sub = dir / mel.speaker_id;
    fs::create_directories(sub);
    write_melspec(sub / (mel.utterance_id + ".melspec"), mel);
  }
}

Corpus load_corpus(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir))
    throw std::runtime_error("load_corpus: not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& spk : fs::directory_iterator(dir)) {
    if (!spk.is_directory()) continue;
    for (const auto& f : fs::directory_iterator(spk.path()))
      if (f.path().extension() == ".melspec") files.push_back(f.path());
  }
  std::sort(files.begin(), files.end());  // directory order is unspecified
  Corpus corpus;
  for (const auto& f : files) corpus.add(read_melspec(f));
  if (corpus.items.empty())
    throw std::runtime_error("load_corpus: no .melspec files under " +
                             dir.string());
  return corpus;
}

}  // namespace melvc
