#include <gtest/gtest.h>

#include <cmath>

#include "slicevol/autodiff/gradcheck.hpp"
#include "slicevol/autodiff/ops.hpp"
#include "slicevol/errors.hpp"
#include "slicevol/heads/heads.hpp"
#include "slicevol/heads/losses.hpp"
#include "test_support.hpp"

using namespace slicevol;
using namespace slicevol::heads;
using ad::Tensor;
using slicevol::testing::random_tensor;

namespace {

Tensor unit(std::vector<double> v) {
  double n = 0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  return Tensor::vector(std::move(v));
}

Tensor random_unit(std::size_t p, Rng& rng) {
  std::vector<double> v(p);
  for (double& x : v) x = standard_normal(rng);
  return unit(std::move(v));
}

}  // namespace

TEST(ClsHead, ShapeZeroInputAndDeterminism) {
  HeadsConfig cfg;
  Rng rng(1);
  ClsHeadParams p = init_cls_head(cfg, rng);
  Rng drop(0);
  const Tensor logits = cls_head(Tensor::zeros({32}), p, cfg, false, drop);
  ASSERT_EQ(logits.numel(), 2u);
  // make_linear starts with zero biases and LayerNorm with beta 0
  EXPECT_EQ(logits[0], 0.0);
  EXPECT_EQ(logits[1], 0.0);

  const Tensor z = random_tensor({32}, rng);
  const Tensor a = cls_head(z, p, cfg, false, drop);
  const Tensor b = cls_head(z, p, cfg, false, drop);
  EXPECT_EQ(a[0], b[0]);
  EXPECT_EQ(a[1], b[1]);
  EXPECT_THROW(cls_head(Tensor::zeros({16}), p, cfg, false, drop), DimensionError);
}

TEST(ClsHead, ArgmaxInvariantUnderLogitShift) {
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const Tensor l = random_tensor({2}, rng, 3.0);
    const double c = 10.0 * standard_normal(rng);
    const Tensor shifted = ad::add(l, Tensor::full({2}, c));
    const Tensor p = ad::softmax(l), ps = ad::softmax(shifted);
    EXPECT_EQ(p[1] > p[0], ps[1] > ps[0]);
    EXPECT_NEAR(p[1], ps[1], 1e-12);
  }
}

TEST(ProjHead, ShapeAndDeterminism) {
  HeadsConfig cfg;
  Rng rng(3);
  const ProjHeadParams p = init_proj_head(cfg, rng);
  const Tensor z = random_tensor({32}, rng);
  const Tensor a = proj_head(z, p, cfg);
  EXPECT_EQ(a.numel(), 16u);
  const Tensor b = proj_head(z, p, cfg);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(ProjHead, GradientMatchesFiniteDifferences) {
  HeadsConfig cfg;
  Rng rng(4);
  const ProjHeadParams p = init_proj_head(cfg, rng);
  const Tensor z = random_tensor({32}, rng, 1.0, true);
  const Tensor w = random_tensor({16}, rng);
  const Tensor inputs[] = {z, p.fc1.weight, p.fc2.weight};
  const auto report = ad::finite_diff_check(
      [&](std::span<const Tensor> in) {
        ProjHeadParams q = p;
        q.fc1.weight = in[1];
        q.fc2.weight = in[2];
        return ad::sum(ad::mul(proj_head(in[0], q, cfg), w));
      },
      inputs);
  EXPECT_LT(report.max_relative_error, 1e-4);
}

TEST(L2Normalize, ExamplesAndDegenerate) {
  const Tensor y = l2_normalize(Tensor::vector({3, 4, 0, 0}));
  EXPECT_NEAR(y[0], 0.6, 1e-15);
  EXPECT_NEAR(y[1], 0.8, 1e-15);
  EXPECT_EQ(y[2], 0.0);
  const Tensor e = Tensor::vector({0, 1, 0});
  const Tensor ye = l2_normalize(e);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(ye[i], e[i]);
  EXPECT_THROW(l2_normalize(Tensor::zeros({4})), DegenerateEmbeddingError);
  EXPECT_THROW(l2_normalize(Tensor::vector({1e-14, 0})), DegenerateEmbeddingError);

  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const Tensor u = l2_normalize(random_tensor({16}, rng, 100.0));
    double sq = 0;
    for (double v : u.data()) sq += v * v;
    EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-9);
  }
}

TEST(L2Normalize, Gradient) {
  Rng rng(6);
  const Tensor x = random_tensor({6}, rng, 1.0, true);
  const Tensor w = random_tensor({6}, rng);
  const Tensor in[] = {x};
  const auto r = ad::finite_diff_check(
      [&](std::span<const Tensor> v) { return ad::sum(ad::mul(l2_normalize(v[0]), w)); }, in);
  EXPECT_LT(r.max_relative_error, 1e-6);
}

TEST(CrossEntropy, Values) {
  EXPECT_NEAR(cross_entropy(Tensor::vector({0, 0}), 0).item(), std::log(2.0), 1e-15);
  EXPECT_NEAR(cross_entropy(Tensor::vector({0, 0}), 1).item(), 0.693147, 1e-6);
  // oracle: log(1 + e^-20) evaluated by its series
  const double tiny = cross_entropy(Tensor::vector({10, -10}), 0).item();
  const double e = std::exp(-20.0);
  EXPECT_NEAR(tiny, e - e * e / 2, 1e-24);
  EXPECT_NEAR(tiny, 2.06e-9, 0.005e-9);
  EXPECT_NEAR(cross_entropy(Tensor::vector({10, -10}), 1).item(), 20.0, 1e-8);
  EXPECT_THROW(cross_entropy(Tensor::vector({0, 0}), 2), ContractError);
}

TEST(CrossEntropy, Gradient) {
  Rng rng(7);
  for (int label = 0; label < 2; ++label) {
    const Tensor l = random_tensor({2}, rng, 2.0, true);
    const Tensor in[] = {l};
    const auto r = ad::finite_diff_check(
        [label](std::span<const Tensor> v) { return cross_entropy(v[0], label); }, in);
    EXPECT_LT(r.max_relative_error, 1e-6);
  }
}

TEST(Contrastive, Examples) {
  const Tensor a = unit({1, 2, 2});
  EXPECT_EQ(contrastive_margin_loss(a, a, 1, 1.0).item(), 0.0);
  EXPECT_EQ(contrastive_margin_loss(a, a, 0, 1.0).item(), 1.0);

  const Tensor x = Tensor::vector({1, 0});
  const Tensor y = Tensor::vector({0, 1});  // D = sqrt 2
  EXPECT_EQ(contrastive_margin_loss(x, y, 0, 1.0).item(), 0.0);
  EXPECT_NEAR(contrastive_margin_loss(x, y, 0, 2.0).item(),
              (2 - std::sqrt(2.0)) * (2 - std::sqrt(2.0)), 1e-15);
  const Tensor anti = Tensor::vector({-1, 0});
  EXPECT_NEAR(contrastive_margin_loss(x, anti, 1, 1.0).item(), 4.0, 1e-15);

  EXPECT_THROW(contrastive_margin_loss(x, Tensor::vector({2, 0}), 1, 1.0), ContractError);
  EXPECT_THROW(contrastive_margin_loss(x, y, 2, 1.0), ContractError);
  EXPECT_THROW(contrastive_margin_loss(x, Tensor::vector({0, 0, 1}), 1, 1.0), DimensionError);
}

TEST(Contrastive, SymmetricAndBounded) {
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const Tensor a = random_unit(8, rng), b = random_unit(8, rng);
    const int s = static_cast<int>(uniform_index(rng, 2));
    const double m = 0.2 + 2.0 * uniform01(rng);
    const double ab = contrastive_margin_loss(a, b, s, m).item();
    EXPECT_EQ(ab, contrastive_margin_loss(b, a, s, m).item());
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, std::max(4.0, m * m) + 1e-12);
  }
}

TEST(Contrastive, Gradient) {
  Rng rng(9);
  for (int s = 0; s < 2; ++s) {
    const Tensor a = random_unit(6, rng).as_leaf(true);
    const Tensor b = random_unit(6, rng).as_leaf(true);
    const Tensor in[] = {a, b};
    // normalize inside so finite-difference probes stay on the sphere
    const auto r = ad::finite_diff_check(
        [s](std::span<const Tensor> v) {
          return contrastive_margin_loss(l2_normalize(v[0]), l2_normalize(v[1]), s, 1.5);
        },
        in);
    EXPECT_LT(r.max_relative_error, 1e-6);
  }
}

TEST(AlphaSchedule, Values) {
  LossConfig cfg;
  EXPECT_EQ(alpha_schedule(0, cfg), 0.0);
  EXPECT_DOUBLE_EQ(alpha_schedule(15, cfg), 0.15);
  EXPECT_DOUBLE_EQ(alpha_schedule(30, cfg), 0.3);
  EXPECT_DOUBLE_EQ(alpha_schedule(1000, cfg), 0.3);
  double prev = 0.0;
  for (std::size_t e = 0; e < 100; ++e) {
    const double a = alpha_schedule(e, cfg);
    EXPECT_GE(a, prev);
    EXPECT_LE(a, cfg.alpha_max);
    prev = a;
  }
}

TEST(LossConfig, Validation) {
  LossConfig c;
  c.margin = 0;
  EXPECT_THROW(c.validate(), ParameterError);
  c = {};
  c.alpha_max = -0.1;
  EXPECT_THROW(c.validate(), ParameterError);
  c = {};
  c.ramp_epochs = 0;
  EXPECT_THROW(c.validate(), ParameterError);
}

TEST(MultiLoss, Examples) {
  const Tensor logits = Tensor::vector({0.3, -1.2});
  const Tensor x = Tensor::vector({1, 0}), y = Tensor::vector({0, 1});
  const double ce = cross_entropy(logits, 1).item();
  EXPECT_EQ(multi_loss(logits, 1, x, y, 1, 0.0, 1.0).item(), ce);
  EXPECT_EQ(multi_loss(logits, 1, x, y, 0, 0.3, 1.0).item(), ce);  // D > m
  // CE = ln 2, contrastive = 1 (s=0, D=0, m=1), alpha 0.3
  const double v = multi_loss(Tensor::vector({0, 0}), 0, x, x, 0, 0.3, 1.0).item();
  EXPECT_NEAR(v, 0.993147, 1e-6);
}

TEST(MultiLoss, GradientThroughBothHeads) {
  // Default widths: at d = 16 the last hidden layer has two units, and a
  // LayerNorm over two values is nearly constant, leaving gradients upstream
  // of it at the finite-difference noise floor.
  const HeadsConfig cfg;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const ClsHeadParams c = init_cls_head(cfg, rng);
    const ProjHeadParams p = init_proj_head(cfg, rng);
    const Tensor z1 = random_tensor({32}, rng, 1.0, true);
    const Tensor z2 = random_tensor({32}, rng, 1.0, true);
    const int s = static_cast<int>(seed % 2);
    const Tensor in[] = {z1, z2, c.fc1.weight, c.out.weight, p.fc2.weight};
    const auto r = ad::finite_diff_check(
        [&](std::span<const Tensor> v) {
          ClsHeadParams cc = c;
          cc.fc1.weight = v[2];
          cc.out.weight = v[3];
          ProjHeadParams pp = p;
          pp.fc2.weight = v[4];
          Rng off(0);
          const Tensor logits = cls_head(v[0], cc, cfg, false, off);
          return multi_loss(logits, 1, l2_normalize(proj_head(v[0], pp, cfg)),
                            l2_normalize(proj_head(v[1], pp, cfg)), s, 0.3, 1.0);
        },
        in);
    EXPECT_LT(r.max_relative_error, 1e-4) << "seed " << seed << " input " << r.worst_input << " index " << r.worst_index << " analytic " << r.analytic << " numeric " << r.numeric;
  }
}

TEST(CombineLosses, MeanForm) {
  const Tensor ce[] = {Tensor::vector({1.0}), Tensor::vector({3.0})};
  const Tensor con[] = {Tensor::vector({0.5}), Tensor::vector({1.5}), Tensor::vector({1.0})};
  EXPECT_DOUBLE_EQ(combine_losses(ce, con, 0.3).item(), 2.0 + 0.3 * 1.0);
  EXPECT_DOUBLE_EQ(combine_losses(ce, {}, 0.3).item(), 2.0);
  EXPECT_THROW(combine_losses({}, con, 0.3), ContractError);
}
