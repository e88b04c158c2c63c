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

#include "melvc/fusion.h"

namespace melvc {
namespace {

using ad::Matrix;
using ad::Var;

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.array() == b.array()).all();
}

// Frame t of the first input carries value t, of the second 1000 + t, so
// every output frame's provenance is readable from its entries.
MelSpectrogram tagged_mel(int t_len, int channels, double offset) {
  MelSpectrogram mel;
  mel.frames.resize(t_len, channels);
  for (int t = 0; t < t_len; ++t) mel.frames.row(t).setConstant(offset + t);
  return mel;
}

Matrix random_matrix(int r, int c, Rng& rng) {
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  return m;
}

// Plain-loop attention oracle (duplicated on purpose; see style tests).
Matrix attention_oracle(const Matrix& q, const Matrix& k, const Matrix& v) {
  double scaling = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Matrix out(q.rows(), v.cols());
  for (int i = 0; i < q.rows(); ++i) {
    Eigen::VectorXd logits(k.rows());
    for (int j = 0; j < k.rows(); ++j)
      logits[j] = q.row(i).dot(k.row(j)) * scaling;
    double m = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - m).exp();
    Eigen::VectorXd w = e / e.sum();
    for (int c = 0; c < v.cols(); ++c) {
      double acc = 0.0;
      for (int j = 0; j < k.rows(); ++j) acc += w[j] * v(j, c);
      out(i, c) = acc;
    }
  }
  return out;
}

TEST(LinearFuse, SpecEnumerationExample) {
  // T=20, start=0, k=5: segments {0-4} then {10-14}; accepting the second
  // would reach fraction 0.5, so only {0-4} is replaced.
  MelSpectrogram a = tagged_mel(20, 3, 0.0);
  MelSpectrogram b = tagged_mel(20, 3, 1000.0);
  LinearFusionPlan plan{0, 5, 0.5};
  LinearFuseResult r = linear_fuse(a, b, plan);
  EXPECT_DOUBLE_EQ(r.mixed_fraction, 0.25);
  EXPECT_FALSE(r.degenerate);
  for (int t = 0; t < 20; ++t) {
    bool mixed = t <= 4;
    EXPECT_EQ(static_cast<bool>(r.from_second[t]), mixed) << "frame " << t;
    EXPECT_DOUBLE_EQ(r.mel.frames(t, 0), mixed ? 1000.0 + t : t);
  }
}

TEST(LinearFuse, SelfMixIsIdentity) {
  MelSpectrogram a = tagged_mel(24, 4, 7.0);
  LinearFuseResult r = linear_fuse(a, a, {3, 5, 0.5});
  EXPECT_TRUE(bitwise_equal(r.mel.frames, a.frames));
}

TEST(LinearFuse, SingleTrailingFrame) {
  int t_len = 17;
  MelSpectrogram a = tagged_mel(t_len, 2, 0.0);
  MelSpectrogram b = tagged_mel(t_len, 2, 1000.0);
  LinearFuseResult r = linear_fuse(a, b, {t_len - 1, 1, 0.5});
  EXPECT_DOUBLE_EQ(r.mixed_fraction, 1.0 / t_len);
  for (int t = 0; t < t_len - 1; ++t) EXPECT_EQ(r.from_second[t], 0);
  EXPECT_EQ(r.from_second[t_len - 1], 1);
}

TEST(LinearFuse, ErrorAndDegenerateCases) {
  MelSpectrogram a = tagged_mel(10, 2, 0.0);
  MelSpectrogram b = tagged_mel(10, 2, 1000.0);
  EXPECT_THROW(linear_fuse(a, b, {10, 5, 0.5}), std::invalid_argument);
  EXPECT_THROW(linear_fuse(a, b, {-1, 5, 0.5}), std::invalid_argument);
  EXPECT_THROW(linear_fuse(a, b, {0, 0, 0.5}), std::invalid_argument);
  EXPECT_THROW(linear_fuse(a, b, {0, 5, 0.6}), std::invalid_argument);
  EXPECT_THROW(linear_fuse(a, b, {0, 5, 0.0}), std::invalid_argument);

  MelSpectrogram c = tagged_mel(12, 2, 1000.0);
  EXPECT_THROW(linear_fuse(a, c, {0, 5, 0.5}), std::invalid_argument);

  LinearFuseResult r = linear_fuse(a, b, {0, 10, 0.5});  // k >= T
  EXPECT_TRUE(r.degenerate);
  EXPECT_TRUE(bitwise_equal(r.mel.frames, a.frames));
  EXPECT_DOUBLE_EQ(r.mixed_fraction, 0.0);
}

TEST(LinearFuse, FractionBoundAndFramePartitionProperty) {
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    int t_len = 6 + rng.uniform_int(120);
    int start = rng.uniform_int(t_len);
    MelSpectrogram a = tagged_mel(t_len, 2, 0.0);
    MelSpectrogram b = tagged_mel(t_len, 2, 1000.0);
    LinearFuseResult r = linear_fuse(a, b, {start, 5, 0.5});
    ASSERT_LT(r.mixed_fraction, 0.5);
    int mixed = 0;
    for (int t = 0; t < t_len; ++t) {
      double v = r.mel.frames(t, 0);
      if (r.from_second[t]) {
        ASSERT_DOUBLE_EQ(v, 1000.0 + t);  // whole frame from second input
        ++mixed;
      } else {
        ASSERT_DOUBLE_EQ(v, t);  // whole frame from first input
      }
    }
    ASSERT_DOUBLE_EQ(r.mixed_fraction,
                     static_cast<double>(mixed) / t_len);
  }
}

TEST(LinearFuse, Deterministic) {
  MelSpectrogram a = tagged_mel(40, 3, 0.0);
  MelSpectrogram b = tagged_mel(40, 3, 1000.0);
  LinearFuseResult r1 = linear_fuse(a, b, {7, 5, 0.5});
  LinearFuseResult r2 = linear_fuse(a, b, {7, 5, 0.5});
  EXPECT_TRUE(bitwise_equal(r1.mel.frames, r2.mel.frames));
  EXPECT_EQ(r1.from_second, r2.from_second);
}

DynamicFusionParams identity_params(int d_g, int n_groups) {
  DynamicFusionParams p;
  int w = d_g / n_groups;
  p.w_query = Var::param(Matrix::Identity(w, w));
  p.w_key = Var::param(Matrix::Identity(w, w));
  p.w_value = Var::param(Matrix::Identity(w, w));
  p.n_groups = n_groups;
  return p;
}

TEST(DynamicFuse, SingleGroupSelectsSecondEmbedding) {
  Rng rng(6);
  Matrix g1 = random_matrix(1, 8, rng);
  Matrix g2 = random_matrix(1, 8, rng);
  DynamicFusionParams p = identity_params(8, 1);
  DynamicFuseResult r = dynamic_fuse(Var::constant(g1), Var::constant(g2), p);
  // One key: the single attention weight is 1, so the fused vector is g2.
  EXPECT_DOUBLE_EQ(r.weights.value()(0, 0), 1.0);
  EXPECT_LT((r.fused.value() - g2).cwiseAbs().maxCoeff(), 1e-15);

  DynamicFuseResult self =
      dynamic_fuse(Var::constant(g1), Var::constant(g1), p);
  EXPECT_LT((self.fused.value() - g1).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(DynamicFuse, MatchesIndependentComputation) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix g1 = random_matrix(1, 8, rng);
    Matrix g2 = random_matrix(1, 8, rng);
    DynamicFusionParams p = identity_params(8, 4);
    DynamicFuseResult r =
        dynamic_fuse(Var::constant(g1), Var::constant(g2), p);

    Matrix r1(4, 2), r2(4, 2);
    for (int i = 0; i < 8; ++i) {
      r1(i / 2, i % 2) = g1(0, i);
      r2(i / 2, i % 2) = g2(0, i);
    }
    Matrix expect_groups = attention_oracle(r1, r2, r2);
    Matrix expect(1, 8);
    for (int i = 0; i < 8; ++i) expect(0, i) = expect_groups(i / 2, i % 2);
    ASSERT_LT((r.fused.value() - expect).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(DynamicFuse, OutputInConvexHullOfSecondEmbeddingGroups) {
  Rng rng(8);
  Matrix g1 = random_matrix(1, 12, rng);
  Matrix g2 = random_matrix(1, 12, rng);
  DynamicFusionParams p = identity_params(12, 4);
  DynamicFuseResult r = dynamic_fuse(Var::constant(g1), Var::constant(g2), p);
  int w = 3;
  for (int c = 0; c < w; ++c) {
    double lo = 1e300, hi = -1e300;
    for (int grp = 0; grp < 4; ++grp) {
      lo = std::min(lo, g2(0, grp * w + c));
      hi = std::max(hi, g2(0, grp * w + c));
    }
    for (int grp = 0; grp < 4; ++grp) {
      EXPECT_GE(r.fused.value()(0, grp * w + c), lo - 1e-12);
      EXPECT_LE(r.fused.value()(0, grp * w + c), hi + 1e-12);
    }
  }
}

TEST(DynamicFuse, WeightRowsAreDistributions) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    int n_groups = 1 + rng.uniform_int(4);
    int w = 1 + rng.uniform_int(4);
    int d_g = n_groups * w;
    Matrix g1 = random_matrix(1, d_g, rng);
    Matrix g2 = random_matrix(1, d_g, rng);
    DynamicFusionParams p = identity_params(d_g, n_groups);
    DynamicFuseResult r =
        dynamic_fuse(Var::constant(g1), Var::constant(g2), p);
    for (int i = 0; i < n_groups; ++i) {
      ASSERT_NEAR(r.weights.value().row(i).sum(), 1.0, 1e-6);
      ASSERT_GE(r.weights.value().row(i).minCoeff(), 0.0);
    }
  }
}

TEST(DynamicFuse, DivisibilityFailureIsConfigError) {
  Matrix g = Matrix::Zero(1, 10);
  DynamicFusionParams p = identity_params(12, 4);  // w=3 does not divide 10
  EXPECT_THROW(dynamic_fuse(Var::constant(g), Var::constant(g), p),
               std::runtime_error);

  ModelConfig cfg;
  cfg.gru_hidden = 5;  // d_g = 10
  cfg.n_groups = 4;
  cfg.content_channels = {64, 64, 64};
  EXPECT_THROW(cfg.validate(), std::runtime_error);
}

TEST(DynamicFuse, DeterministicAndTrainable) {
  Rng rng(10);
  Matrix g1 = random_matrix(1, 8, rng);
  Matrix g2 = random_matrix(1, 8, rng);
  DynamicFusionParams p = identity_params(8, 2);
  Var a = Var::constant(g1), b = Var::constant(g2);
  DynamicFuseResult r1 = dynamic_fuse(a, b, p);
  DynamicFuseResult r2 = dynamic_fuse(a, b, p);
  EXPECT_TRUE(bitwise_equal(r1.fused.value(), r2.fused.value()));

  // Gradients reach the transformation matrices.
  ad::backward(ad::sum_all(r1.fused));
  EXPECT_GT(p.w_query.grad().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT(p.w_key.grad().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT(p.w_value.grad().cwiseAbs().maxCoeff(), 0.0);
}

}  // namespace
}  // namespace melvc
