#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "slicevol/errors.hpp"
#include "slicevol/train/optimizer.hpp"
#include "slicevol/train/pairs.hpp"
#include "slicevol/train/schedule.hpp"

using namespace slicevol;
using namespace slicevol::train;
using ad::Tensor;

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

}  // namespace

TEST(RandomPairs, SameLabelBatchGivesPositives) {
  const std::vector<int> labels{1, 1, 1, 1};
  Rng rng(1);
  const PairBatch b = sample_random_pairs(labels, 50, rng);
  ASSERT_EQ(b.size(), 50u);
  EXPECT_EQ(b.positives(), 50u);
  EXPECT_NO_THROW(b.validate(labels));
}

TEST(RandomPairs, TwoOppositeLabelsGiveTheCrossPair) {
  const std::vector<int> labels{0, 1};
  Rng rng(2);
  const PairBatch b = sample_random_pairs(labels, 20, rng);
  ASSERT_EQ(b.size(), 20u);
  for (std::size_t i = 0; i < b.size(); ++i) {
    EXPECT_EQ(b.same[i], 0);
    EXPECT_EQ(b.anchors[i] + b.partners[i], 1u);
  }
}

TEST(RandomPairs, TooFewExamplesIsEmpty) {
  Rng rng(3);
  EXPECT_TRUE(sample_random_pairs(std::vector<int>{1}, 8, rng).empty());
  EXPECT_TRUE(sample_random_pairs(std::vector<int>{}, 8, rng).empty());
}

TEST(RandomPairs, BalancedFractionMonteCarlo) {
  const std::vector<int> labels{0, 1, 0, 1, 1, 0, 0, 1};
  Rng rng(4);
  std::size_t pos = 0, total = 0;
  for (int draw = 0; draw < 10000; ++draw) {
    const PairBatch b = sample_random_pairs(labels, 1, rng);
    b.validate(labels);
    pos += b.positives();
    total += b.size();
  }
  EXPECT_NEAR(static_cast<double>(pos) / static_cast<double>(total), 0.5, 0.02);
}

TEST(RandomPairs, Deterministic) {
  const std::vector<int> labels{0, 1, 1, 0, 1};
  Rng a(9), b(9);
  const PairBatch x = sample_random_pairs(labels, 30, a);
  const PairBatch y = sample_random_pairs(labels, 30, b);
  EXPECT_EQ(x.anchors, y.anchors);
  EXPECT_EQ(x.partners, y.partners);
}

TEST(PositivePairs, OnlyPositives) {
  const std::vector<int> labels{0, 1, 1, 0, 1};
  Rng rng(5);
  const PairBatch b = sample_positive_pairs(labels, 12, rng);
  EXPECT_EQ(b.positives(), 12u);
  b.validate(labels);
  EXPECT_TRUE(sample_positive_pairs(std::vector<int>{0, 1}, 4, rng).empty());
}

TEST(PairBatchContract, RejectsInconsistentPairs) {
  const std::vector<int> labels{0, 1, 1};
  EXPECT_THROW((PairBatch{{0}, {0}, {1}}).validate(labels), ContractError);
  EXPECT_THROW((PairBatch{{0}, {1}, {1}}).validate(labels), ContractError);
  EXPECT_THROW((PairBatch{{0}, {5}, {0}}).validate(labels), ContractError);
  EXPECT_NO_THROW((PairBatch{{1}, {2}, {1}}).validate(labels));
}

TEST(HardNegatives, LineExample) {
  const std::vector<std::vector<double>> e{{0.0}, {1.0}, {1.1}};
  const std::vector<int> labels{0, 0, 1};
  const PairBatch b = mine_hard_negatives(e, labels);
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b.anchors[1], 1u);
  EXPECT_EQ(b.partners[1], 2u);
  EXPECT_EQ(b.partners[0], 2u);
  EXPECT_EQ(b.partners[2], 1u);
  for (int s : b.same) EXPECT_EQ(s, 0);
}

TEST(HardNegatives, TwoPointsPairEachOther) {
  const std::vector<std::vector<double>> e{{0.0, 1.0}, {1.0, 0.0}};
  const PairBatch b = mine_hard_negatives(e, std::vector<int>{1, 0});
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b.partners[0], 1u);
  EXPECT_EQ(b.partners[1], 0u);
}

TEST(HardNegatives, SingleClassIsEmptyAndTiesPickLowestIndex) {
  const std::vector<std::vector<double>> e{{0.0}, {1.0}, {-1.0}};
  EXPECT_TRUE(mine_hard_negatives(e, std::vector<int>{1, 1, 1}).empty());
  const PairBatch b = mine_hard_negatives(e, std::vector<int>{0, 1, 1});
  EXPECT_EQ(b.partners[0], 1u);
}

TEST(HardNegatives, NearestOppositeExhaustive) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 10);
    std::vector<std::vector<double>> e(n, std::vector<double>(4));
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(uniform_index(rng, 2));
      for (double& x : e[i]) x = standard_normal(rng);
    }
    const PairBatch b = mine_hard_negatives(e, labels);
    if (b.empty()) continue;
    b.validate(labels);
    for (std::size_t k = 0; k < b.size(); ++k) {
      const std::size_t a = b.anchors[k];
      const double mined = sq_dist(e[a], e[b.partners[k]]);
      for (std::size_t j = 0; j < n; ++j) {
        if (labels[j] != labels[a]) EXPECT_LE(mined, sq_dist(e[a], e[j]));
      }
    }
  }
}

TEST(AdamW, ZeroGradientNoDecayLeavesParameters) {
  Tensor p = Tensor::vector({1.0, -2.0, 3.0}, true);
  std::vector<Tensor*> ps{&p};
  OptimizerState s = init_optimizer(ps);
  const std::vector<std::vector<double>> g{{0, 0, 0}};
  adamw_step(ps, g, s, 0.1, 0.0);
  EXPECT_EQ(p[0], 1.0);
  EXPECT_EQ(p[1], -2.0);
  EXPECT_EQ(p[2], 3.0);
  EXPECT_EQ(s.step, 1u);
}

TEST(AdamW, ZeroGradientDecayScales) {
  Tensor p = Tensor::vector({1.0, -2.0, 3.0}, true);
  std::vector<Tensor*> ps{&p};
  OptimizerState s = init_optimizer(ps);
  const std::vector<std::vector<double>> g{{0, 0, 0}};
  adamw_step(ps, g, s, 0.1, 0.01);
  EXPECT_DOUBLE_EQ(p[0], 0.999);
  EXPECT_DOUBLE_EQ(p[1], -1.998);
  EXPECT_DOUBLE_EQ(p[2], 2.997);
}

TEST(AdamW, MatchesReferenceRecurrence) {
  Tensor p = Tensor::vector({0.5, -1.5}, true);
  Tensor frozen = Tensor::vector({7.0});
  std::vector<Tensor*> ps{&p, &frozen};
  OptimizerState s = init_optimizer(ps);
  double theta[2] = {0.5, -1.5}, m[2] = {0, 0}, v[2] = {0, 0};
  const double lr = 0.05, wd = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (int t = 1; t <= 5; ++t) {
    const std::vector<std::vector<double>> g{{0.3 * t, -0.2 / t}, {1.0}};
    adamw_step(ps, g, s, lr, wd);
    for (int k = 0; k < 2; ++k) {
      theta[k] *= 1.0 - lr * wd;
      m[k] = b1 * m[k] + (1 - b1) * g[0][k];
      v[k] = b2 * v[k] + (1 - b2) * g[0][k] * g[0][k];
      const double mh = m[k] / (1 - std::pow(b1, t)), vh = v[k] / (1 - std::pow(b2, t));
      theta[k] -= lr * mh / (std::sqrt(vh) + eps);
      EXPECT_NEAR(p[k], theta[k], 1e-14);
    }
  }
  EXPECT_EQ(frozen[0], 7.0);
  EXPECT_TRUE(p.requires_grad());
}

TEST(AdamW, ShapeMismatch) {
  Tensor p = Tensor::vector({1.0, 2.0}, true);
  std::vector<Tensor*> ps{&p};
  OptimizerState s = init_optimizer(ps);
  EXPECT_THROW(adamw_step(ps, std::vector<std::vector<double>>{{1.0}}, s, 0.1, 0.0), ContractError);
  EXPECT_THROW(adamw_step(ps, std::vector<std::vector<double>>{}, s, 0.1, 0.0), ContractError);
}

TEST(CosineLr, Values) {
  EXPECT_DOUBLE_EQ(cosine_lr(0, 1e-4, 100), 1e-4);
  EXPECT_NEAR(cosine_lr(100, 1e-4, 100), 0.0, 1e-20);
  EXPECT_NEAR(cosine_lr(50, 1e-4, 100), 5e-5, 1e-18);
  for (std::size_t e = 0; e < 100; ++e) EXPECT_GE(cosine_lr(e, 1e-4, 100), cosine_lr(e + 1, 1e-4, 100));
  EXPECT_THROW(cosine_lr(101, 1e-4, 100), ContractError);
}

TEST(EarlyStop, Examples) {
  const std::vector<double> a{0.7, 0.6, 0.6, 0.6};
  const EarlyStop ra = early_stop_check(a, 3);
  EXPECT_TRUE(ra.stop);
  EXPECT_EQ(ra.best_epoch, 0u);
  EXPECT_FALSE(early_stop_check(std::span(a).first(3), 3).stop);

  const std::vector<double> b{0.5, 0.8, 0.7, 0.9};
  const EarlyStop rb = early_stop_check(b, 2);
  EXPECT_FALSE(rb.stop);
  EXPECT_EQ(rb.best_epoch, 3u);

  std::vector<double> rising;
  for (int i = 0; i < 100; ++i) {
    rising.push_back(0.01 * i);
    EXPECT_FALSE(early_stop_check(rising, 1).stop);
  }

  const std::vector<double> ties{0.5, 0.5, 0.5};
  EXPECT_EQ(early_stop_check(ties, 5).best_epoch, 0u);
  EXPECT_THROW(early_stop_check(ties, 0), ParameterError);
}
