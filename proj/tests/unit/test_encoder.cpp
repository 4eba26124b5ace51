#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "slicevol/autodiff/ops.hpp"
#include "slicevol/encoder/slice_encoder.hpp"
#include "slicevol/errors.hpp"
#include "slicevol/model.hpp"
#include "test_support.hpp"

using namespace slicevol;
using namespace slicevol::encoder;
using ad::Tensor;
using slicevol::testing::random_tensor;

namespace {

EncoderParams make_params(const EncoderConfig& cfg, std::uint64_t seed = 7) {
  Rng rng(seed);
  return init_encoder(cfg, rng);
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

}  // namespace

TEST(ToThreeChannel, Replicates) {
  const Tensor zero = Tensor::zeros({4, 4, 1});
  const Tensor z3 = to_three_channel(zero);
  EXPECT_EQ(z3.shape(), (ad::Shape{4, 4, 3}));
  for (double v : z3.data()) EXPECT_EQ(v, 0.0);

  std::vector<double> px(16, 0.0);
  px[0] = 1.0;
  const Tensor one = to_three_channel(Tensor({4, 4, 1}, px));
  for (int c = 0; c < 3; ++c) EXPECT_EQ(one[c], 1.0);

  Rng rng(2);
  const Tensor x = random_tensor({5, 3, 1}, rng);
  double s_in = 0, s_out = 0;
  for (double v : x.data()) s_in += v;
  const Tensor x3 = to_three_channel(x);
  for (double v : x3.data()) s_out += v;
  EXPECT_NEAR(s_out, 3 * s_in, 1e-12);
  EXPECT_THROW(to_three_channel(Tensor::zeros({4, 4, 2})), DimensionError);
}

TEST(PatchEmbed, ZeroSliceAndPatchCount) {
  EncoderConfig cfg;  // 64 / 16
  EncoderParams p = make_params(cfg);
  p.patch_proj.bias = Tensor::zeros(p.patch_proj.bias.shape());
  const Tensor out = patch_embed(Tensor::zeros({64, 64, 3}), p, cfg);
  EXPECT_EQ(out.shape(), (ad::Shape{16, 32}));
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(patch_embed(Tensor::zeros({32, 32, 3}), p, cfg), DimensionError);
}

TEST(PatchEmbed, OnePixelChangesExactlyOneRow) {
  EncoderConfig cfg;
  const EncoderParams p = make_params(cfg);
  Rng rng(4);
  std::vector<double> img(64 * 64 * 3);
  for (double& v : img) v = uniform01(rng);
  const Tensor base = patch_embed(Tensor({64, 64, 3}, img), p, cfg);
  // pixel (37, 21) lies in patch row 2, column 1 -> patch index 9
  img[(37 * 64 + 21) * 3 + 1] += 0.5;
  const Tensor moved = patch_embed(Tensor({64, 64, 3}, img), p, cfg);
  for (std::size_t r = 0; r < 16; ++r) {
    bool differs = false;
    for (std::size_t c = 0; c < 32; ++c) differs |= base.at(r, c) != moved.at(r, c);
    EXPECT_EQ(differs, r == 9) << "row " << r;
  }
}

TEST(TransformerBlock, ZeroLoraBMatchesFrozenBitwise) {
  EncoderConfig cfg;
  const EncoderParams p = make_params(cfg);
  Rng rng(8);
  const Tensor x = random_tensor({2 * cfg.tokens(), cfg.embed_dim}, rng);
  const Tensor frozen = transformer_block(x, p.blocks.back(), nullptr, cfg, cfg.tokens());
  const Tensor adapted = transformer_block(x, p.blocks.back(), &p.lora, cfg, cfg.tokens());
  EXPECT_TRUE(bitwise_equal(frozen, adapted));
}

TEST(TransformerBlock, NonClsRowPermutationIsEquivariant) {
  EncoderConfig cfg;
  const EncoderParams p = make_params(cfg);
  Rng rng(12);
  const std::size_t t = cfg.tokens();
  const Tensor x = random_tensor({t, cfg.embed_dim}, rng);
  std::vector<std::size_t> perm(t);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin() + 1, perm.end());
  std::swap(perm[3], perm[7]);
  const Tensor y = transformer_block(x, p.blocks[0], nullptr, cfg, t);
  const Tensor yp = transformer_block(ad::gather_rows(x, perm), p.blocks[0], nullptr, cfg, t);
  const Tensor y_then_p = ad::gather_rows(y, perm);
  EXPECT_LT(slicevol::testing::max_abs_diff(yp.data(), y_then_p.data()), 1e-12);
}

TEST(TransformerBlock, FiniteForLargeInputs) {
  EncoderConfig cfg;
  const EncoderParams p = make_params(cfg);
  Rng rng(13);
  const Tensor x = random_tensor({cfg.tokens(), cfg.embed_dim}, rng, 1e3);
  const Tensor y = transformer_block(x, p.blocks.back(), &p.lora, cfg, cfg.tokens());
  for (double v : y.data()) EXPECT_TRUE(std::isfinite(v));
}

TEST(EncodeSlice, DeterministicAndShaped) {
  EncoderConfig cfg;
  const EncoderParams p = make_params(cfg);
  Rng rng(14);
  const Tensor slice = random_tensor({64, 64, 1}, rng);
  const SliceTokens a = encode_slice(slice, p, cfg);
  const SliceTokens b = encode_slice(slice, p, cfg);
  EXPECT_TRUE(bitwise_equal(a.tokens, b.tokens));
  EXPECT_EQ(a.cls.shape(), (ad::Shape{32}));
  EXPECT_EQ(a.tokens.shape(), (ad::Shape{17, 32}));
  for (std::size_t c = 0; c < 32; ++c) EXPECT_EQ(a.cls[c], a.tokens.at(0, c));
  EXPECT_THROW(encode_slice(random_tensor({32, 32, 1}, rng), p, cfg), DimensionError);
}

TEST(EncodeSlice, ZeroLoraBLeavesClsUnchangedVsFrozenEncoder) {
  EncoderConfig cfg;
  const EncoderParams p = make_params(cfg);
  Rng rng(15);
  const Tensor slice = random_tensor({64, 64, 1}, rng);
  const SliceTokens adapted = encode_slice(slice, p, cfg);
  const Tensor one[] = {slice};
  const Tensor frozen_tokens =
      transformer_block(frozen_prefix(one, p, cfg), p.blocks.back(), nullptr, cfg, cfg.tokens());
  EXPECT_TRUE(bitwise_equal(adapted.tokens, frozen_tokens));
}

TEST(EncodeSlice, BatchedPathMatchesPerSlice) {
  EncoderConfig cfg;
  const EncoderParams p = make_params(cfg);
  Rng rng(16);
  std::vector<Tensor> slices;
  for (int i = 0; i < 3; ++i) slices.push_back(random_tensor({64, 64, 1}, rng));
  const Tensor stacked = cls_rows(adapted_suffix(frozen_prefix(slices, p, cfg), p, cfg), cfg);
  for (std::size_t s = 0; s < 3; ++s) {
    const SliceTokens one = encode_slice(slices[s], p, cfg);
    for (std::size_t c = 0; c < 32; ++c) EXPECT_EQ(stacked.at(s, c), one.cls[c]);
  }
}

TEST(EncoderConfig, Validation) {
  EncoderConfig c;
  c.patch_size = 15;
  EXPECT_THROW(c.validate(), ParameterError);
  c = {};
  c.n_heads = 5;
  EXPECT_THROW(c.validate(), ParameterError);
  c = {};
  c.lora_rank = 0;
  EXPECT_THROW(c.validate(), ParameterError);
  EXPECT_EQ(EncoderConfig{}.patches(), 16u);
  EXPECT_DOUBLE_EQ(EncoderConfig{}.lora_scale(), 2.0);
}

TEST(FrozenPartition, OnlyLoraIsTrainableInsideEncoder) {
  const ModelParams p = init_model(ModelConfig{}, 1);
  for (const ParamEntry& e : param_manifest(p)) {
    if (e.name.rfind("encoder.", 0) == 0) {
      const bool lora = e.name.find(".lora_") != std::string::npos;
      EXPECT_EQ(e.trainable, lora) << e.name;
    } else {
      EXPECT_TRUE(e.trainable) << e.name;
    }
  }
}

TEST(Lora, InitializationScheme) {
  EncoderConfig cfg;
  const EncoderParams p = make_params(cfg, 99);
  for (const LoraAdapter* a : {&p.lora.qkv, &p.lora.proj, &p.lora.fc1, &p.lora.fc2}) {
    EXPECT_EQ(a->a.size(0), cfg.lora_rank);
    EXPECT_EQ(a->b.size(1), cfg.lora_rank);
    for (double v : a->b.data()) EXPECT_EQ(v, 0.0);
    double sq = 0;
    for (double v : a->a.data()) sq += v * v;
    const double sd = std::sqrt(sq / static_cast<double>(a->a.numel()));
    EXPECT_GT(sd, 0.01);
    EXPECT_LT(sd, 0.03);
    EXPECT_DOUBLE_EQ(a->scale, 2.0);
  }
}
