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
#include <vector>

#include "melvc/objectives.h"
#include "melvc/rng.h"

namespace melvc {
namespace {

using ad::Matrix;
using ad::Var;

Matrix random_matrix(int r, int c, Rng& rng) {
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  return m;
}

Var row(std::initializer_list<double> v) {
  Matrix m(1, static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) m(0, i++) = x;
  return Var::constant(m);
}

// Loop-based cosine, independent of both implementations under test.
double cosine_oracle(const Matrix& a, const Matrix& b) {
  double dot = 0, na = 0, nb = 0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) {
      dot += a(i, j) * b(i, j);
      na += a(i, j) * a(i, j);
      nb += b(i, j) * b(i, j);
    }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

TEST(CosineSimilarity, TrivialAndHandComputedValues) {
  Var g = row({0.3, -1.2, 0.5});
  EXPECT_DOUBLE_EQ(cosine_similarity(g, g).value.scalar(), 1.0);

  EXPECT_DOUBLE_EQ(
      cosine_similarity(row({1, 0, 0, 0}), row({0, 1, 0, 0})).value.scalar(),
      0.0);

  // (1,2,2).(2,2,1) = 8, norms are both 3 -> 8/9.
  EXPECT_NEAR(cosine_similarity(row({1, 2, 2}), row({2, 2, 1})).value.scalar(),
              8.0 / 9.0, 1e-15);
}

TEST(CosineSimilarity, DegenerateNormGuard) {
  CosineResult r = cosine_similarity(row({0, 0, 0}), row({1, 2, 3}));
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.value.scalar(), 0.0);
  CosineResult tiny =
      cosine_similarity(row({1e-13, 0, 0}), row({1, 2, 3}));
  EXPECT_TRUE(tiny.degenerate);
}

TEST(CosineSimilarity, ScaleInvarianceAndSymmetry) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix a = random_matrix(1, 8, rng);
    Matrix b = random_matrix(1, 8, rng);
    double base = cosine_similarity(Var::constant(a), Var::constant(b))
                      .value.scalar();
    double sa = rng.uniform(0.01, 100.0), sb = rng.uniform(0.01, 100.0);
    double scaled = cosine_similarity(Var::constant(Matrix(sa * a)),
                                      Var::constant(Matrix(sb * b)))
                        .value.scalar();
    ASSERT_NEAR(scaled, base, 1e-9);

    // Symmetry is exact: products commute term by term.
    double forward = cosine_similarity(Var::constant(a), Var::constant(b))
                         .value.scalar();
    double backward = cosine_similarity(Var::constant(b), Var::constant(a))
                          .value.scalar();
    ASSERT_EQ(forward, backward);
    ASSERT_GE(forward, -1.0 - 1e-12);
    ASSERT_LE(forward, 1.0 + 1e-12);
  }
}

TEST(ContrastiveLoss, ComposedTrivialCases) {
  Var anchor = row({1, 0, 0, 0});
  // Positive identical, one orthogonal negative: -1 + 0.
  EXPECT_DOUBLE_EQ(
      contrastive_loss(anchor, row({1, 0, 0, 0}), {row({0, 1, 0, 0})})
          .scalar(),
      -1.0);
  // Positive orthogonal, negative identical: 0 + 1.
  EXPECT_DOUBLE_EQ(
      contrastive_loss(anchor, row({0, 0, 1, 0}), {row({1, 0, 0, 0})})
          .scalar(),
      1.0);
}

TEST(ContrastiveLoss, MatchesTermByTermOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix a = random_matrix(1, 6, rng);
    Matrix p = random_matrix(1, 6, rng);
    Matrix n1 = random_matrix(1, 6, rng);
    Matrix n2 = random_matrix(1, 6, rng);
    double loss = contrastive_loss(Var::constant(a), Var::constant(p),
                                   {Var::constant(n1), Var::constant(n2)})
                      .scalar();
    double expect =
        -cosine_oracle(a, p) + cosine_oracle(a, n1) + cosine_oracle(a, n2);
    ASSERT_NEAR(loss, expect, 1e-9);
  }
}

TEST(ContrastiveLoss, EmptyNegativesIsContractViolation) {
  EXPECT_THROW(contrastive_loss(row({1, 0}), row({0, 1}), {}),
               std::invalid_argument);
}

TEST(ContrastiveLoss, MonotoneInPairSimilarities) {
  Rng rng(3);
  Matrix a = random_matrix(1, 6, rng);
  Matrix p = random_matrix(1, 6, rng);
  Matrix n = random_matrix(1, 6, rng);
  double base = contrastive_loss(Var::constant(a), Var::constant(p),
                                 {Var::constant(n)})
                    .scalar();
  // Pull the negative toward the anchor: its similarity rises, and the loss
  // must not decrease.
  for (double step : {0.1, 0.3, 0.7, 0.95}) {
    Matrix closer = (1.0 - step) * n + step * a;
    double pulled = contrastive_loss(Var::constant(a), Var::constant(p),
                                     {Var::constant(closer)})
                        .scalar();
    ASSERT_GE(pulled, base - 1e-12);
    base = pulled;
  }
  // Pull the positive toward the anchor: the loss must not increase.
  base = contrastive_loss(Var::constant(a), Var::constant(p),
                          {Var::constant(n)})
             .scalar();
  for (double step : {0.1, 0.3, 0.7, 0.95}) {
    Matrix closer = (1.0 - step) * p + step * a;
    double pulled = contrastive_loss(Var::constant(a), Var::constant(closer),
                                     {Var::constant(n)})
                        .scalar();
    ASSERT_LE(pulled, base + 1e-12);
    base = pulled;
  }
}

TEST(MseLosses, TrivialValuesAndOracle) {
  Rng rng(4);
  Matrix m = random_matrix(3, 4, rng);
  EXPECT_EQ(reconstruction_loss(Var::constant(m), Var::constant(m)).scalar(),
            0.0);
  EXPECT_EQ(consistency_loss(Var::constant(m), Var::constant(m)).scalar(),
            0.0);

  double eps = 0.5;
  Matrix shifted = m.array() + eps;
  EXPECT_NEAR(
      reconstruction_loss(Var::constant(shifted), Var::constant(m)).scalar(),
      eps * eps, 1e-15);

  for (int trial = 0; trial < 100; ++trial) {
    Matrix a = random_matrix(3, 4, rng);
    Matrix b = random_matrix(3, 4, rng);
    double expect = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 4; ++j) {
        double d = a(i, j) - b(i, j);
        expect += d * d;
      }
    expect /= 12.0;
    ASSERT_NEAR(
        reconstruction_loss(Var::constant(a), Var::constant(b)).scalar(),
        expect, 1e-12);
    ASSERT_NEAR(consistency_loss(Var::constant(a), Var::constant(b)).scalar(),
                expect, 1e-12);
  }
}

TEST(MseLosses, ShapeMismatchIsContractViolation) {
  EXPECT_THROW(reconstruction_loss(Var::constant(Matrix::Zero(3, 4)),
                                   Var::constant(Matrix::Zero(4, 3))),
               std::invalid_argument);
  EXPECT_THROW(consistency_loss(Var::constant(Matrix::Zero(3, 4)),
                                Var::constant(Matrix::Zero(3, 5))),
               std::invalid_argument);
}

LossParts scalar_parts(double recon, double sim, double q, double adv,
                       double cc) {
  LossParts parts;
  parts.l_recon = Var::constant(Matrix::Constant(1, 1, recon));
  parts.l_sim = Var::constant(Matrix::Constant(1, 1, sim));
  parts.l_q = Var::constant(Matrix::Constant(1, 1, q));
  parts.l_adv = Var::constant(Matrix::Constant(1, 1, adv));
  parts.l_cc = Var::constant(Matrix::Constant(1, 1, cc));
  return parts;
}

TEST(TotalLoss, DefaultWeightsAndZeroCase) {
  LossWeights w;
  EXPECT_EQ(total_loss(scalar_parts(0, 0, 0, 0, 0), w).scalar(), 0.0);
  // 1 + 0.01 + 0.1 + 0.5 + 0.5
  EXPECT_NEAR(total_loss(scalar_parts(1, 1, 1, 1, 1), w).scalar(), 2.11,
              1e-12);
}

TEST(TotalLoss, MatchesDotProductOracleAndIsLinear) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    double parts[5], weights[4];
    for (double& p : parts) p = rng.uniform(-2.0, 2.0);
    for (double& w : weights) w = rng.uniform(0.0, 2.0);
    LossWeights lw{weights[0], weights[1], weights[2], weights[3]};
    double got = total_loss(
                     scalar_parts(parts[0], parts[1], parts[2], parts[3],
                                  parts[4]),
                     lw)
                     .scalar();
    double expect = parts[0] + weights[0] * parts[1] + weights[1] * parts[2] +
                    weights[2] * parts[3] + weights[3] * parts[4];
    ASSERT_NEAR(got, expect, 1e-12);

    // Doubling one part moves the total by exactly weight * part.
    double doubled = total_loss(
                         scalar_parts(parts[0], parts[1], 2.0 * parts[2],
                                      parts[3], parts[4]),
                         lw)
                         .scalar();
    ASSERT_NEAR(doubled - got, weights[1] * parts[2], 1e-12);
  }
}

TEST(TotalLoss, NonFinitePartNamesTheTerm) {
  LossWeights w;
  LossParts parts = scalar_parts(1, 2, 3, std::nan(""), 5);
  try {
    total_loss(parts, w);
    FAIL() << "expected std::runtime_error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("l_adv"), std::string::npos);
  }
}

TEST(TotalLoss, GradientsFlowThroughWeights) {
  LossWeights w;
  Var part = Var::param(Matrix::Constant(1, 1, 2.0));
  LossParts parts = scalar_parts(0, 0, 0, 0, 0);
  parts.l_sim = part;
  Var total = total_loss(parts, w);
  ad::backward(total);
  EXPECT_DOUBLE_EQ(part.grad()(0, 0), w.alpha);
}

}  // namespace
}  // namespace melvc
