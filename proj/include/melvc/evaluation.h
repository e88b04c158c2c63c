// melvc/evaluation.h
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

#ifndef MELVC_EVALUATION_H_
#define MELVC_EVALUATION_H_

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "melvc/mel.h"
#include "melvc/model.h"
#include "melvc/rng.h"

namespace melvc {

// Orthonormal DCT-II of each row (and its inverse), used for cepstra.
Eigen::MatrixXd dct_rows(const Eigen::MatrixXd& x);
Eigen::MatrixXd idct_rows(const Eigen::MatrixXd& c);

// Mel-cepstral distortion in dB: cepstra per frame via DCT, coefficient 0
// dropped, coefficients 1..24 compared (fewer when C <= 24), per-frame
// distance (10/ln 10) * sqrt(2 * sum of squared differences), frame mean.
double mcd(const MelSpectrogram& a, const MelSpectrogram& b);

struct TrialScore {
  std::string trial_id;
  bool is_real = false;
  double score = 0.0;   // mean cosine to the reference centroid over repeats
};

struct DetectionReport {
  std::vector<TrialScore> scores;
  double threshold = 0.0;  // mean of the per-repeat thresholds
  int repeats = 0;
  std::vector<double> per_repeat_thresholds;
};

// Reference/trial detection protocol: each repeat samples 6 references from
// the pool, scores every trial by cosine similarity to the reference GSE
// centroid, and sets the threshold to mean - 2*sd of the leave-one-out
// reference similarities. Throws when fewer than 6 references or no trials
// are given.
DetectionReport detection_test(
    const std::vector<MelSpectrogram>& reference_pool,
    const std::vector<std::pair<MelSpectrogram, bool>>& trials,
    ModelState& state, int repeats, Rng& rng);

// One row per utterance: speaker, utterance id, and the D_g GSE values,
// tab-separated with a header. I/O failures surface with the path.
void export_embeddings(const Corpus& corpus, ModelState& state,
                       const std::filesystem::path& out);

}  // namespace melvc

#endif  // MELVC_EVALUATION_H_
