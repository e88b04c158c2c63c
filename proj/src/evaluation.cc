// melvc/evaluation.cc
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

#include "melvc/evaluation.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "melvc/objectives.h"

namespace melvc {

Eigen::MatrixXd dct_rows(const Eigen::MatrixXd& x) {
  const int n = static_cast<int>(x.cols());
  Eigen::MatrixXd basis(n, n);
  for (int d = 0; d < n; ++d) {
    double s = d == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (int i = 0; i < n; ++i)
      basis(i, d) =
          s * std::cos(std::numbers::pi * d * (2.0 * i + 1.0) / (2.0 * n));
  }
  return x * basis;
}

Eigen::MatrixXd idct_rows(const Eigen::MatrixXd& c) {
  const int n = static_cast<int>(c.cols());
  Eigen::MatrixXd basis(n, n);
  for (int d = 0; d < n; ++d) {
    double s = d == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (int i = 0; i < n; ++i)
      basis(d, i) =
          s * std::cos(std::numbers::pi * d * (2.0 * i + 1.0) / (2.0 * n));
  }
  return c * basis;  // orthonormal: inverse is the transpose
}

double mcd(const MelSpectrogram& a, const MelSpectrogram& b) {
  if (a.T() != b.T() || a.C() != b.C())
    throw std::invalid_argument(
        "mcd: shape mismatch (" + std::to_string(a.T()) + "x" +
        std::to_string(a.C()) + " vs " + std::to_string(b.T()) + "x" +
        std::to_string(b.C()) + "); crop first");
  Eigen::MatrixXd ca = dct_rows(a.frames);
  Eigen::MatrixXd cb = dct_rows(b.frames);
  int order = std::min(24, a.C() - 1);
  if (order < 1)
    throw std::invalid_argument("mcd: need at least two mel channels");
  const double k = 10.0 / std::numbers::ln10;
  double sum = 0.0;
  for (int t = 0; t < a.T(); ++t) {
    double sq = (ca.row(t).segment(1, order) - cb.row(t).segment(1, order))
                    .squaredNorm();
    sum += k * std::sqrt(2.0 * sq);
  }
  return sum / a.T();
}

DetectionReport detection_test(
    const std::vector<MelSpectrogram>& reference_pool,
    const std::vector<std::pair<MelSpectrogram, bool>>& trials,
    ModelState& state, int repeats, Rng& rng) {
  constexpr int kReferences = 6;
  if (static_cast<int>(reference_pool.size()) < kReferences)
    throw std::invalid_argument("detection_test: need at least " +
                                std::to_string(kReferences) +
                                " reference utterances, got " +
                                std::to_string(reference_pool.size()));
  if (trials.empty())
    throw std::invalid_argument("detection_test: no trial utterances");
  if (repeats < 1)
    throw std::invalid_argument("detection_test: repeats must be >= 1");

  // Embed everything once; the protocol only resamples indices.
  std::vector<Eigen::VectorXd> ref_gse;
  for (const auto& mel : reference_pool)
    ref_gse.push_back(gse_of(mel, state));
  std::vector<Eigen::VectorXd> trial_gse;
  for (const auto& [mel, is_real] : trials)
    trial_gse.push_back(gse_of(mel, state));

  DetectionReport report;
  report.repeats = repeats;
  report.scores.resize(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    report.scores[i].trial_id = trials[i].first.speaker_id + "/" +
                                trials[i].first.utterance_id;
    report.scores[i].is_real = trials[i].second;
  }

  const int pool = static_cast<int>(reference_pool.size());
  std::vector<int> order(pool);
  for (int r = 0; r < repeats; ++r) {
    for (int i = 0; i < pool; ++i) order[i] = i;
    for (int i = 0; i < kReferences; ++i) {  // partial Fisher-Yates
      int j = i + rng.uniform_int(pool - i);
      std::swap(order[i], order[j]);
    }

    Eigen::VectorXd centroid =
        Eigen::VectorXd::Zero(ref_gse[0].size());
    for (int i = 0; i < kReferences; ++i) centroid += ref_gse[order[i]];
    centroid /= kReferences;

    // Leave-one-out similarities of the chosen references.
    double mean = 0.0, sq = 0.0;
    for (int i = 0; i < kReferences; ++i) {
      Eigen::VectorXd rest =
          (centroid * kReferences - ref_gse[order[i]]) / (kReferences - 1);
      double s = cosine_similarity(ref_gse[order[i]], rest);
      mean += s;
      sq += s * s;
    }
    mean /= kReferences;
    double var = sq / kReferences - mean * mean;
    double sd = std::sqrt(std::max(var, 0.0));
    report.per_repeat_thresholds.push_back(mean - 2.0 * sd);

    for (std::size_t i = 0; i < trial_gse.size(); ++i)
      report.scores[i].score += cosine_similarity(trial_gse[i], centroid);
  }

  for (auto& s : report.scores) s.score /= repeats;
  double thr = 0.0;
  for (double t : report.per_repeat_thresholds) thr += t;
  report.threshold = thr / repeats;
  return report;
}

void export_embeddings(const Corpus& corpus, ModelState& state,
                       const std::filesystem::path& out) {
  std::ofstream os(out);
  if (!os)
    throw std::runtime_error("export_embeddings: cannot open " +
                             out.string());
  const int d_g = state.cfg.d_g();
  os << "speaker\tutterance";
  for (int d = 0; d < d_g; ++d) os << "\tg_" << d;
  os << "\n";
  char buf[32];
  for (const auto& mel : corpus.items) {
    Eigen::VectorXd g = gse_of(mel, state);
    os << mel.speaker_id << "\t" << mel.utterance_id;
    for (int d = 0; d < d_g; ++d) {
      std::snprintf(buf, sizeof buf, "%.17g", g[d]);
      os << "\t" << buf;
    }
    os << "\n";
  }
  if (!os)
    throw std::runtime_error("export_embeddings: write failed for " +
                             out.string());
}

}  // namespace melvc
