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

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <vector>

#include "melvc/mel.h"

namespace melvc {
namespace {

bool bitwise_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.array() == b.array()).all();
}

std::vector<double> sine(double freq, double sr, double seconds) {
  int n = static_cast<int>(sr * seconds);
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = std::sin(2.0 * std::numbers::pi * freq * i / sr);
  return w;
}

TEST(ComputeMel, SilenceHitsLogFloor) {
  MelConfig cfg;
  std::vector<double> zeros(16000, 0.0);
  MelSpectrogram mel = compute_mel(zeros, cfg.sample_rate, cfg);
  ASSERT_GE(mel.T(), 1);
  EXPECT_EQ(mel.C(), cfg.n_mels);
  double floor_log = std::log(cfg.log_floor);
  for (int t = 0; t < mel.T(); ++t)
    for (int c = 0; c < mel.C(); ++c) EXPECT_EQ(mel.frames(t, c), floor_log);
}

TEST(ComputeMel, SineAtBandCenterDominatesThatBand) {
  MelConfig cfg;
  // Mid bands are wide relative to the FFT bin spacing; edges are not.
  for (int band : {30, 45, 60}) {
    double f = mel_band_center_hz(cfg, band);
    MelSpectrogram mel = compute_mel(sine(f, cfg.sample_rate, 1.0),
                                     cfg.sample_rate, cfg);
    for (int t = 0; t < mel.T(); ++t) {
      int argmax = 0;
      mel.frames.row(t).maxCoeff(&argmax);
      ASSERT_EQ(argmax, band) << "band " << band << " frame " << t;
    }
  }
}

TEST(ComputeMel, Deterministic) {
  MelConfig cfg;
  auto w = sine(440.0, cfg.sample_rate, 0.3);
  MelSpectrogram a = compute_mel(w, cfg.sample_rate, cfg);
  MelSpectrogram b = compute_mel(w, cfg.sample_rate, cfg);
  EXPECT_TRUE(bitwise_equal(a.frames, b.frames));
}

TEST(ComputeMel, ErrorPaths) {
  MelConfig cfg;
  EXPECT_THROW(compute_mel({}, cfg.sample_rate, cfg), std::invalid_argument);
  auto w = sine(440.0, cfg.sample_rate, 0.1);
  EXPECT_THROW(compute_mel(w, 8000.0, cfg), std::runtime_error);
}

TEST(ComputeMel, FrameCountFollowsHop) {
  MelConfig cfg;
  auto w = sine(100.0, cfg.sample_rate, 1.0);  // 16000 samples
  MelSpectrogram mel = compute_mel(w, cfg.sample_rate, cfg);
  // window 400, hop 160 -> 1 + (16000-400)/160 = 98 frames
  EXPECT_EQ(mel.T(), 98);
  EXPECT_DOUBLE_EQ(mel.frame_rate_hz, 100.0);
}

TEST(SyntheticCorpus, SeedReproducesBitIdentically) {
  CorpusSpec spec;
  spec.n_speakers = 2;
  spec.utterances_per_speaker = 10;
  spec.seed = 7;
  Corpus a = generate_synthetic_corpus(spec);
  Corpus b = generate_synthetic_corpus(spec);
  ASSERT_EQ(a.size(), b.size());
  ASSERT_EQ(a.size(), 20);
  for (int i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(bitwise_equal(a.items[i].frames, b.items[i].frames));
    EXPECT_EQ(a.items[i].speaker_id, b.items[i].speaker_id);
    EXPECT_EQ(a.items[i].utterance_id, b.items[i].utterance_id);
  }
}

TEST(SyntheticCorpus, SpeakerMeansSeparate) {
  CorpusSpec spec;
  spec.n_speakers = 2;
  spec.utterances_per_speaker = 8;
  spec.seed = 3;
  Corpus corpus = generate_synthetic_corpus(spec);

  // Independent oracle: mean frame vector per utterance, pairwise
  // Euclidean distances within and across speakers.
  std::vector<Eigen::VectorXd> means;
  std::vector<std::string> spk;
  for (const auto& mel : corpus.items) {
    means.push_back(mel.frames.colwise().mean().transpose());
    spk.push_back(mel.speaker_id);
  }
  double intra = 0, inter = 0;
  int n_intra = 0, n_inter = 0;
  for (std::size_t i = 0; i < means.size(); ++i)
    for (std::size_t j = i + 1; j < means.size(); ++j) {
      double d = (means[i] - means[j]).norm();
      if (spk[i] == spk[j]) {
        intra += d;
        ++n_intra;
      } else {
        inter += d;
        ++n_inter;
      }
    }
  EXPECT_LT(intra / n_intra, inter / n_inter);
}

TEST(SyntheticCorpus, SingleUtteranceCount) {
  CorpusSpec spec;
  spec.n_speakers = 1;
  spec.utterances_per_speaker = 1;
  Corpus corpus = generate_synthetic_corpus(spec);
  ASSERT_EQ(corpus.size(), 1);
  EXPECT_EQ(corpus.items[0].speaker_id, "spk00");
  EXPECT_EQ(corpus.items[0].utterance_id, "utt000");
  EXPECT_GE(corpus.items[0].T(), spec.min_frames);
  EXPECT_LE(corpus.items[0].T(), spec.max_frames);
}

TEST(SyntheticCorpus, RejectsBadSpec) {
  CorpusSpec spec;
  spec.n_speakers = 0;
  EXPECT_THROW(generate_synthetic_corpus(spec), std::invalid_argument);
}

MelSpectrogram ramp_mel(int t, int c, double offset) {
  MelSpectrogram mel;
  mel.frames.resize(t, c);
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < c; ++j) mel.frames(i, j) = offset + i * 100.0 + j;
  return mel;
}

TEST(Crop, MinLengthAndLeadingFrames) {
  auto [a, b] = crop_to_common_length(ramp_mel(100, 8, 0), ramp_mel(80, 8, 5));
  EXPECT_EQ(a.T(), 80);
  EXPECT_EQ(b.T(), 80);
  EXPECT_DOUBLE_EQ(a.frames(0, 0), 0.0);  // leading frames kept
  EXPECT_DOUBLE_EQ(b.frames(79, 0), 5.0 + 7900.0);
}

TEST(Crop, EqualLengthsUnchangedAndIdempotent) {
  MelSpectrogram m1 = ramp_mel(50, 4, 0), m2 = ramp_mel(50, 4, 1);
  auto [a, b] = crop_to_common_length(m1, m2);
  EXPECT_TRUE(bitwise_equal(a.frames, m1.frames));
  EXPECT_TRUE(bitwise_equal(b.frames, m2.frames));

  auto [c, d] = crop_to_common_length(ramp_mel(30, 4, 0), ramp_mel(70, 4, 0));
  auto [e, f] = crop_to_common_length(c, d);
  EXPECT_TRUE(bitwise_equal(c.frames, e.frames));
  EXPECT_TRUE(bitwise_equal(d.frames, f.frames));
}

TEST(MelspecIo, RoundTripAndLayout) {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "melvc_io_test";
  fs::remove_all(dir);

  CorpusSpec spec;
  spec.n_speakers = 2;
  spec.utterances_per_speaker = 3;
  spec.mel_channels = 16;
  spec.seed = 11;
  Corpus corpus = generate_synthetic_corpus(spec);
  save_corpus(dir, corpus);

  EXPECT_TRUE(fs::exists(dir / "spk00" / "utt000.melspec"));
  EXPECT_TRUE(fs::exists(dir / "spk01" / "utt002.melspec"));

  Corpus loaded = load_corpus(dir);
  ASSERT_EQ(loaded.size(), corpus.size());
  for (int i = 0; i < corpus.size(); ++i) {
    const auto& orig = corpus.items[i];
    const auto& back = loaded.items[i];
    EXPECT_EQ(back.speaker_id, orig.speaker_id);
    EXPECT_EQ(back.utterance_id, orig.utterance_id);
    ASSERT_EQ(back.T(), orig.T());
    ASSERT_EQ(back.C(), orig.C());
    // Storage is float32, so round-trip matches to single precision.
    for (int t = 0; t < orig.T(); ++t)
      for (int c = 0; c < orig.C(); ++c)
        EXPECT_EQ(back.frames(t, c),
                  static_cast<double>(static_cast<float>(orig.frames(t, c))));
  }
  fs::remove_all(dir);
}

TEST(MelspecIo, Errors) {
  EXPECT_THROW(read_melspec("/nonexistent/file.melspec"), std::runtime_error);
  EXPECT_THROW(load_corpus("/nonexistent/dir"), std::runtime_error);
}

}  // namespace
}  // namespace melvc
