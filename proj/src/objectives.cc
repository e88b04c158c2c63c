// melvc/objectives.cc
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

#include "melvc/objectives.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace melvc {

using ad::Var;

namespace {
constexpr double kNormGuard = 1e-12;
}

CosineResult cosine_similarity(const ad::Var& a, const ad::Var& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("cosine_similarity: shape mismatch");
  double norm_a = a.value().norm();
  double norm_b = b.value().norm();
  CosineResult r;
  if (norm_a < kNormGuard || norm_b < kNormGuard) {
    r.value = Var::constant(ad::Matrix::Zero(1, 1));
    r.degenerate = true;
    return r;
  }
  Var dot = ad::vdot(a, b);
  Var na = ad::sqrt_scalar(ad::vdot(a, a));
  Var nb = ad::sqrt_scalar(ad::vdot(b, b));
  r.value = ad::cdiv_scalar(dot, ad::hadamard(na, nb));
  return r;
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("cosine_similarity: dimension mismatch");
  double na = a.norm(), nb = b.norm();
  if (na < kNormGuard || nb < kNormGuard) return 0.0;
  return a.dot(b) / (na * nb);
}

ad::Var contrastive_loss(const ad::Var& anchor, const ad::Var& positive,
                         const std::vector<ad::Var>& negatives) {
  if (negatives.empty())
    throw std::invalid_argument(
        "contrastive_loss: at least one negative is required");
  Var loss = -cosine_similarity(anchor, positive).value;
  for (const Var& negative : negatives)
    loss = loss + cosine_similarity(anchor, negative).value;
  return loss;
}

ad::Var reconstruction_loss(const ad::Var& produced, const ad::Var& truth) {
  if (produced.rows() != truth.rows() || produced.cols() != truth.cols())
    throw std::invalid_argument(
        "reconstruction_loss: shape mismatch (" +
        std::to_string(produced.rows()) + "x" +
        std::to_string(produced.cols()) + " vs " +
        std::to_string(truth.rows()) + "x" + std::to_string(truth.cols()) +
        ")");
  return ad::mse(produced, truth);
}

ad::Var consistency_loss(const ad::Var& reconstructed,
                         const ad::Var& synthesized) {
  if (reconstructed.rows() != synthesized.rows() ||
      reconstructed.cols() != synthesized.cols())
    throw std::invalid_argument("consistency_loss: shape mismatch");
  return ad::mse(reconstructed, synthesized);
}

ad::Var total_loss(const LossParts& parts, const LossWeights& weights) {
  auto check = [](const Var& v, const char* name) {
    if (!v.defined())
      throw std::runtime_error(std::string("total_loss: ") + name +
                               " is missing");
    if (!std::isfinite(v.scalar()))
      throw std::runtime_error(std::string("total_loss: ") + name +
                               " is not finite (" +
                               std::to_string(v.scalar()) + ")");
  };
  check(parts.l_recon, "l_recon");
  check(parts.l_sim, "l_sim");
  check(parts.l_q, "l_q");
  check(parts.l_adv, "l_adv");
  check(parts.l_cc, "l_cc");
  return parts.l_recon + ad::scale(parts.l_sim, weights.alpha) +
         ad::scale(parts.l_q, weights.beta) +
         ad::scale(parts.l_adv, weights.lambda) +
         ad::scale(parts.l_cc, weights.gamma);
}

}  // namespace melvc
