// tests/losses_test.cc

// Copyright 2026  The espum Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "espum/error.h"
#include "espum/losses.h"
#include "test_support.h"

namespace espum {
namespace {

TEST(SkipgramLossTest, SumOfL1AndSignGradient) {
  SkipgramDist p(2, SkipSpec{{1}}), t(2, SkipSpec{{1}});
  p.Set(0, 0.5);
  p.Set(1, 0.5);
  t.Set(0, 0.5);
  t.Set(3, 0.5);
  SkipgramMap pred{{p.spec(), p}}, target{{t.spec(), t}}, grad;
  EXPECT_DOUBLE_EQ(SkipgramLoss(pred, target, &grad), 1.0);
  const SkipgramDist &g = grad.at(p.spec());
  EXPECT_EQ(g.Get(0), 0.0);  // sign(0) = 0
  EXPECT_EQ(g.Get(1), 1.0);
  EXPECT_EQ(g.Get(3), -1.0);
}

TEST(SkipgramLossTest, MissingSpecThrows) {
  SkipgramDist p(2, SkipSpec{{1}});
  SkipgramMap pred{{p.spec(), p}}, target;
  EXPECT_THROW(SkipgramLoss(pred, target), Error);
}

TEST(UnigramLossTest, EqualMassesReduceToL1) {
  PositionalUnigram p{1, 2, {0.25, 0.75}, {1.0}};
  PositionalUnigram t{1, 2, {0.5, 0.5}, {1.0}};
  EXPECT_DOUBLE_EQ(UnigramLoss(p, t), 0.5);
}

TEST(UnigramLossTest, MassMismatchCounts) {
  // Position 1 carries 0.5 predicted mass and 1.0 target mass with the same
  // conditional distribution.
  PositionalUnigram p{2, 2, {1.0, 0.0, 0.25, 0.25}, {1.0, 0.5}};
  PositionalUnigram t{2, 2, {1.0, 0.0, 0.5, 0.5}, {1.0, 1.0}};
  EXPECT_DOUBLE_EQ(UnigramLoss(p, t), 0.5);
}

TEST(UnigramLossTest, GradientMatchesFiniteDifference) {
  Rng rng(1);
  PositionalUnigram p{3, 3, {}, {1.0, 0.8, 0.4}};
  PositionalUnigram t{3, 3, {}, {1.0, 0.9, 0.3}};
  for (int l = 0; l < 3; ++l)
    for (int a = 0; a < 3; ++a) {
      p.probs.push_back(p.mass[l] * (0.2 + rng.Uniform()) / 3.6);
      t.probs.push_back(t.mass[l] / 3.0);
    }
  PositionalUnigram g;
  UnigramLoss(p, t, &g);
  const double h = 1e-7;
  for (std::size_t i = 0; i < p.probs.size(); ++i) {
    auto a = p, b = p;
    a.probs[i] += h;
    b.probs[i] -= h;
    EXPECT_NEAR(g.probs[i], (UnigramLoss(a, t) - UnigramLoss(b, t)) / (2 * h), 1e-6);
  }
}

TEST(SmoothnessLossTest, ValueAndGradient) {
  Tensor r = Tensor::FromRows({{1, 0}, {0, 1}, {0, 1}});
  Tensor g({3, 2});
  EXPECT_DOUBLE_EQ(SmoothnessLoss(r, &g, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(g(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(g(1, 0), -1.0);
  EXPECT_DOUBLE_EQ(g(2, 0), 0.0);
}

TEST(SegmentBceTest, MatchesDirectFormula) {
  BceConfig cfg;
  BoundaryLabels l{{0, 1, 0, 1}, {0.9, 0.95, 0.5, 0.7}};
  std::vector<double> p = {0.2, 0.6, 0.5, 0.9};
  // Frame 2 is below the confidence threshold.
  double expect = -(std::log(0.8) + 1.1 * std::log(0.6) + 1.1 * std::log(0.9)) / 3;
  EXPECT_NEAR(SegmentBceLoss(p, l, cfg), expect, 1e-15);
  EXPECT_EQ(BceSelectedCount(l, cfg), 3u);
  std::vector<double> g(4, 0.0);
  SegmentBceSum(p, l, cfg, &g, 1.0);
  EXPECT_NEAR(g[0], 1 / 0.8, 1e-15);
  EXPECT_NEAR(g[1], -1.1 / 0.6, 1e-15);
  EXPECT_EQ(g[2], 0.0);
}

TEST(SegmentBceTest, ClampedFramesAreFiniteWithZeroGradient) {
  BoundaryLabels l{{1}, {1.0}};
  std::vector<double> p = {0.0};
  std::vector<double> g(1, 0.0);
  BceSum s = SegmentBceSum(p, l, BceConfig{}, &g, 1.0);
  EXPECT_TRUE(std::isfinite(s.sum));
  EXPECT_EQ(g[0], 0.0);
}

TEST(TotalLossTest, WeightsAndNonFinite) {
  LossParts parts{1, 2, 3, 4};
  LossWeights w{0.5, 2.0};
  EXPECT_DOUBLE_EQ(TotalLoss(parts, w), 1 + 2 + 6 + 2);
  parts.skipgram = std::numeric_limits<double>::quiet_NaN();
  try {
    TotalLoss(parts, w);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFinite);
    EXPECT_NE(std::string(e.what()).find("skipgram"), std::string::npos);
  }
}

TEST(SegmentBceTest, WorkedValues) {
  BceConfig cfg;
  BoundaryLabels zeros{{0, 0, 0}, {1.0, 1.0, 1.0}};
  std::vector<double> half = {0.5, 0.5, 0.5};
  EXPECT_NEAR(SegmentBceLoss(half, zeros, cfg), std::log(2.0), 1e-15);
  BoundaryLabels unsure{{0, 1, 0}, {0.6, 0.5, 0.55}};
  EXPECT_EQ(SegmentBceLoss(half, unsure, cfg), 0.0);
  BoundaryLabels one{{1}, {1.0}};
  EXPECT_NEAR(SegmentBceLoss(std::vector<double>{0.5}, one, cfg), 1.1 * std::log(2.0), 1e-15);
  EXPECT_THROW(SegmentBceLoss(std::vector<double>{0.5, 0.5}, one, cfg), Error);
}

TEST(SegmentBceTest, DecreasesTowardLabels) {
  BoundaryLabels l{{0, 1}, {1.0, 1.0}};
  double prev = std::numeric_limits<double>::infinity();
  for (double e : {0.4, 0.2, 0.1, 0.01, 0.001}) {
    std::vector<double> p = {e, 1 - e};
    double v = SegmentBceLoss(p, l, BceConfig{});
    EXPECT_LT(v, prev);
    EXPECT_GT(v, 0.0);
    prev = v;
  }
}

TEST(TotalLossTest, WorkedValues) {
  EXPECT_EQ(TotalLoss(LossParts{}, LossWeights{}), 0.0);
  EXPECT_DOUBLE_EQ(TotalLoss(LossParts{1, 1, 1, 1}, LossWeights{}), 19.0);
}

TEST(LossBoundsTest, NonNegativeAndAtMostTwoPerTerm) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int v = 3;
    std::vector<Tensor> a{testing::RandomRows(rng, 6, v)}, b{testing::RandomRows(rng, 7, v)};
    SkipgramMap pred, target;
    for (SkipSpec s : {SkipSpec{{1}}, SkipSpec{{2}}, SkipSpec{{1, 1}}}) {
      pred.emplace(s, ExpectedSkipgrams(a, s));
      target.emplace(s, ExpectedSkipgrams(b, s));
    }
    double sg = SkipgramLoss(pred, target);
    EXPECT_GE(sg, 0.0);
    EXPECT_LE(sg, 2.0 * 3);
    EXPECT_EQ(SkipgramLoss(pred, pred), 0.0);
    auto pu = ExpectedPositionalUnigram(a, 4), tu = ExpectedPositionalUnigram(b, 4);
    double ul = UnigramLoss(pu, tu);
    EXPECT_GE(ul, 0.0);
    EXPECT_LE(ul, 2.0 * 4);
    EXPECT_EQ(UnigramLoss(pu, pu), 0.0);
  }
}

}  // namespace
}  // namespace espum
