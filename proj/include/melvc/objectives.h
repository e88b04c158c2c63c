// melvc/objectives.h
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

#ifndef MELVC_OBJECTIVES_H_
#define MELVC_OBJECTIVES_H_

#include <Eigen/Dense>
#include <vector>

#include "melvc/autodiff.h"
#include "melvc/config.h"

namespace melvc {

struct CosineResult {
  ad::Var value;          // 1x1 in [-1, 1]
  bool degenerate = false;  // a norm fell below the guard; value is 0
};

// D(a, b) = a.b / (|a| |b|), with a 1e-12 norm guard that returns a
// constant 0 and sets the flag.
CosineResult cosine_similarity(const ad::Var& a, const ad::Var& b);
double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Signed cosine sum: the positive pair contributes -D, every negative pair
// contributes +D. Throws on an empty negative list.
ad::Var contrastive_loss(const ad::Var& anchor, const ad::Var& positive,
                         const std::vector<ad::Var>& negatives);

// Mean squared error; shape mismatch is a contract violation.
ad::Var reconstruction_loss(const ad::Var& produced, const ad::Var& truth);

// Same contract, applied to the two decoder outputs.
ad::Var consistency_loss(const ad::Var& reconstructed,
                         const ad::Var& synthesized);

struct LossParts {
  ad::Var l_recon;
  ad::Var l_sim;
  ad::Var l_q;
  ad::Var l_adv;
  ad::Var l_cc;
};

// l_recon + alpha*l_sim + beta*l_q + lambda*l_adv + gamma*l_cc.
// A non-finite part raises std::runtime_error naming the offending term.
ad::Var total_loss(const LossParts& parts, const LossWeights& weights);

}  // namespace melvc

#endif  // MELVC_OBJECTIVES_H_
