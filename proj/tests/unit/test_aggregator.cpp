#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "slicevol/aggregate/volume_aggregator.hpp"
#include "slicevol/autodiff/ops.hpp"
#include "slicevol/errors.hpp"
#include "slicevol/model.hpp"
#include "test_support.hpp"

using namespace slicevol;
using namespace slicevol::aggregate;
using ad::Tensor;
using slicevol::testing::max_abs_diff;
using slicevol::testing::random_tensor;

namespace {

AggregatorParams zero_table_params(const AggregatorConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  AggregatorParams p = init_aggregator(cfg, rng);
  p.slice_pos = Tensor::zeros(p.slice_pos.shape(), true);
  return p;
}

std::vector<std::size_t> test_permutation(std::size_t n) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  if (n > 3) std::swap(perm[0], perm[2]);
  return perm;
}

}  // namespace

TEST(StackCls, ShapesAndOrder) {
  Rng rng(1);
  std::vector<encoder::SliceTokens> slices;
  for (int i = 0; i < 16; ++i) slices.push_back({Tensor(), random_tensor({32}, rng)});
  const Tensor seq = stack_cls(slices);
  EXPECT_EQ(seq.shape(), (ad::Shape{16, 32}));
  for (std::size_t c = 0; c < 32; ++c) EXPECT_EQ(seq.at(5, c), slices[5].cls[c]);

  const Tensor one = stack_cls(std::span(slices).first(1));
  EXPECT_EQ(one.shape(), (ad::Shape{1, 32}));
  for (std::size_t c = 0; c < 32; ++c) EXPECT_EQ(one.at(0, c), slices[0].cls[c]);

  std::vector<encoder::SliceTokens> reversed(slices.rbegin(), slices.rend());
  const Tensor rev = stack_cls(reversed);
  for (std::size_t r = 0; r < 16; ++r)
    for (std::size_t c = 0; c < 32; ++c) EXPECT_EQ(rev.at(r, c), seq.at(15 - r, c));

  EXPECT_THROW(stack_cls({}), ContractError);
}

TEST(SlicePositional, AdditiveAndCapacity) {
  Rng rng(2);
  const Tensor table = random_tensor({8, 4}, rng);
  const Tensor seq = random_tensor({5, 4}, rng);

  const Tensor same = add_slice_positional(seq, Tensor::zeros({8, 4}));
  EXPECT_EQ(max_abs_diff(same.data(), seq.data()), 0.0);

  const Tensor pos = add_slice_positional(Tensor::zeros({5, 4}), table);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(pos[i], table[i]);

  const Tensor out = add_slice_positional(seq, table);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_NEAR(out[i] - seq[i], table[i], 1e-15);

  EXPECT_THROW(add_slice_positional(random_tensor({9, 4}, rng), table), CapacityError);
}

TEST(AttentionPool, IdenticalRowsGiveUniformWeights) {
  AggregatorConfig cfg;
  const AggregatorParams p = zero_table_params(cfg, 3);
  Rng rng(3);
  const Tensor row = random_tensor({1, 32}, rng);
  std::vector<Tensor> rows(7, row);
  const Tensor seq = add_slice_positional(ad::concat_rows(rows), p.slice_pos);
  const PoolResult r = attention_pool(seq, p, cfg);
  ASSERT_EQ(r.attention.weights.size(), 7u);
  for (double w : r.attention.weights) EXPECT_NEAR(w, 1.0 / 7.0, 1e-15);
}

TEST(AttentionPool, WeightsSumToOne) {
  AggregatorConfig cfg;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    AggregatorParams p = init_aggregator(cfg, rng);
    const std::size_t s = 1 + uniform_index(rng, cfg.max_slices);
    const PoolResult r = attention_pool(random_tensor({s, 32}, rng, 3.0), p, cfg);
    ASSERT_EQ(r.attention.weights.size(), s);
    double total = 0.0;
    for (double w : r.attention.weights) {
      EXPECT_GE(w, 0.0);
      total += w;
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
    EXPECT_NO_THROW(r.attention.validate());
  }
}

TEST(AttentionPool, PermutationEquivariantWithZeroTable) {
  AggregatorConfig cfg;
  const AggregatorParams p = zero_table_params(cfg, 4);
  Rng rng(4);
  const Tensor seq = random_tensor({9, 32}, rng);
  const auto perm = test_permutation(9);
  const PoolResult base = attention_pool(seq, p, cfg);
  const PoolResult moved = attention_pool(ad::gather_rows(seq, perm), p, cfg);
  const Tensor expect = ad::gather_rows(base.sequence, perm);
  EXPECT_LT(max_abs_diff(moved.sequence.data(), expect.data()), 1e-12);
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_NEAR(moved.attention.weights[i], base.attention.weights[perm[i]], 1e-12);
  }
}

TEST(MeanPool, Examples) {
  const Tensor row = Tensor::matrix(1, 3, {1, 2, 3});
  const Tensor single = mean_pool(row);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(single[i], row[i]);

  const Tensor two = mean_pool(Tensor::matrix(2, 2, {1, 1, 3, 3}));
  EXPECT_EQ(two[0], 2.0);
  EXPECT_EQ(two[1], 2.0);

  Rng rng(5);
  const Tensor seq = random_tensor({6, 5}, rng);
  const Tensor permuted = mean_pool(ad::gather_rows(seq, test_permutation(6)));
  EXPECT_LT(max_abs_diff(permuted.data(), mean_pool(seq).data()), 1e-14);
}

class EncodeVolume : public ::testing::Test {
 protected:
  ModelConfig cfg = slicevol::testing::tiny_model();
  ModelParams params = init_model(cfg, 11);
  std::vector<Tensor> slices;

  void SetUp() override {
    Rng rng(6);
    slicevol::testing::randomize_lora_b(params, rng);
    for (int i = 0; i < 6; ++i) slices.push_back(random_tensor({16, 16, 1}, rng));
  }

  VolumeEncoding run(std::span<const Tensor> s) const {
    return encode_volume(s, params.encoder, cfg.encoder, params.aggregator, cfg.aggregator);
  }
};

TEST_F(EncodeVolume, DeterministicAndShaped) {
  const VolumeEncoding a = run(slices);
  const VolumeEncoding b = run(slices);
  EXPECT_EQ(a.embedding.shape(), (ad::Shape{16}));
  EXPECT_TRUE(std::equal(a.embedding.data().begin(), a.embedding.data().end(),
                         b.embedding.data().begin()));
  EXPECT_EQ(a.attention.weights, b.attention.weights);
  EXPECT_THROW(run({}), ContractError);
}

TEST_F(EncodeVolume, DefaultWidth) {
  const ModelConfig full;
  const ModelParams p = init_model(full, 1);
  Rng rng(7);
  std::vector<Tensor> s;
  for (int i = 0; i < 2; ++i) s.push_back(random_tensor({64, 64, 1}, rng));
  const VolumeEncoding e =
      encode_volume(s, p.encoder, full.encoder, p.aggregator, full.aggregator);
  EXPECT_EQ(e.embedding.numel(), 32u);
}

TEST_F(EncodeVolume, ZeroTableGivesPermutationInvariance) {
  params.aggregator.slice_pos = Tensor::zeros(params.aggregator.slice_pos.shape(), true);
  const auto perm = test_permutation(slices.size());
  std::vector<Tensor> shuffled;
  for (std::size_t i : perm) shuffled.push_back(slices[i]);
  EXPECT_LT(max_abs_diff(run(shuffled).embedding.data(), run(slices).embedding.data()), 1e-9);
}

TEST_F(EncodeVolume, NonZeroTableCarriesPositionalInformation) {
  Rng rng(8);
  params.aggregator.slice_pos = random_tensor(params.aggregator.slice_pos.shape(), rng, 0.5, true);
  std::vector<Tensor> reversed(slices.rbegin(), slices.rend());
  EXPECT_GT(max_abs_diff(run(reversed).embedding.data(), run(slices).embedding.data()), 1e-6);
}

TEST(AttentionRecordContract, RejectsBadWeights) {
  EXPECT_THROW(AttentionRecord{}.validate(), ContractError);
  EXPECT_THROW((AttentionRecord{{0.5, 0.6}}).validate(), ContractError);
  EXPECT_THROW((AttentionRecord{{1.2, -0.2}}).validate(), ContractError);
  EXPECT_NO_THROW((AttentionRecord{{0.25, 0.75}}).validate());
}
