#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "slicevol/autodiff/tensor.hpp"
#include "slicevol/layers.hpp"
#include "slicevol/random.hpp"

namespace slicevol::encoder {

struct EncoderConfig {
  std::size_t image_size = 64;  // H = W
  std::size_t patch_size = 16;
  std::size_t embed_dim = 32;
  std::size_t n_blocks = 2;
  std::size_t n_heads = 4;
  std::size_t lora_rank = 4;
  double lora_alpha = 8.0;
  std::size_t mlp_ratio = 4;
  double layer_norm_eps = 1e-5;

  std::size_t patches_per_side() const { return image_size / patch_size; }
  std::size_t patches() const { return patches_per_side() * patches_per_side(); }
  std::size_t tokens() const { return patches() + 1; }  // CLS first
  std::size_t patch_dim() const { return 3 * patch_size * patch_size; }
  double lora_scale() const { return lora_alpha / static_cast<double>(lora_rank); }

  // Throws ParameterError on a violated invariant.
  void validate() const;
};

// Low-rank update attached to a frozen linear layer: y = W x + b + scale * B (A x).
struct LoraAdapter {
  ad::Tensor a;  // [r x in]
  ad::Tensor b;  // [out x r], zero at initialization
  double scale = 1.0;

  template <class F>
  void visit(std::string_view prefix, F&& f) {
    f(std::string(prefix) + ".lora_a", a);
    f(std::string(prefix) + ".lora_b", b);
  }
};

LoraAdapter make_lora(const LinearParams& base, const EncoderConfig& cfg, Rng& rng);
ad::Tensor apply_adapted(const LinearParams& base, const LoraAdapter* adapter, const ad::Tensor& x);

struct BlockParams {
  LayerNormParams norm1;
  LinearParams qkv;  // d -> 3d
  LinearParams proj;
  LayerNormParams norm2;
  LinearParams fc1;  // d -> mlp_ratio * d
  LinearParams fc2;

  template <class F>
  void visit(std::string_view prefix, F&& f) {
    const std::string p(prefix);
    norm1.visit(p + ".norm1", f);
    qkv.visit(p + ".qkv", f);
    proj.visit(p + ".proj", f);
    norm2.visit(p + ".norm2", f);
    fc1.visit(p + ".fc1", f);
    fc2.visit(p + ".fc2", f);
  }
};

struct BlockAdapters {
  LoraAdapter qkv, proj, fc1, fc2;

  template <class F>
  void visit(std::string_view prefix, F&& f) {
    const std::string p(prefix);
    qkv.visit(p + ".qkv", f);
    proj.visit(p + ".proj", f);
    fc1.visit(p + ".fc1", f);
    fc2.visit(p + ".fc2", f);
  }
};

// Everything here is frozen except the adapters on the last block.
struct EncoderParams {
  LinearParams patch_proj;  // 3p^2 -> d
  ad::Tensor patch_pos;     // [N x d], added to patch tokens
  ad::Tensor cls_token;     // [1 x d]
  std::vector<BlockParams> blocks;
  BlockAdapters lora;

  template <class F>
  void visit(std::string_view prefix, F&& f) {
    const std::string p(prefix);
    patch_proj.visit(p + ".patch_proj", f);
    f(p + ".patch_pos", patch_pos);
    f(p + ".cls_token", cls_token);
    for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].visit(p + ".block" + std::to_string(i), f);
    lora.visit(p + ".block" + std::to_string(blocks.size() - 1), f);
  }
};

EncoderParams init_encoder(const EncoderConfig& cfg, Rng& rng);

struct SliceTokens {
  ad::Tensor tokens;  // [(N+1) x d], row 0 is CLS
  ad::Tensor cls;     // [d]
};

// [H x W x 1] -> [H x W x 3] by channel replication.
ad::Tensor to_three_channel(const ad::Tensor& slice);

// Non-overlapping patches flattened in (row, col, channel) order: [N x 3p^2].
ad::Tensor patchify(const ad::Tensor& slice3, std::size_t patch_size);

// Linear projection of each patch: [N x d].
ad::Tensor patch_embed(const ad::Tensor& slice3, const EncoderParams& params,
                       const EncoderConfig& cfg);

// Pre-norm block (LN -> MHSA -> residual -> LN -> MLP -> residual) applied
// independently to each group of `group_tokens` consecutive rows.
ad::Tensor transformer_block(const ad::Tensor& tokens, const BlockParams& block,
                             const BlockAdapters* adapters, const EncoderConfig& cfg,
                             std::size_t group_tokens);

SliceTokens encode_slice(const ad::Tensor& slice, const EncoderParams& params,
                         const EncoderConfig& cfg);

// Batched slice path. Slice s occupies rows [s(N+1), (s+1)(N+1)) of the
// stacked token matrix. The split at the last block lets callers cache the
// part of the computation that depends on frozen parameters only.
ad::Tensor embed_slices(std::span<const ad::Tensor> slices, const EncoderParams& params,
                        const EncoderConfig& cfg);
ad::Tensor frozen_prefix(std::span<const ad::Tensor> slices, const EncoderParams& params,
                         const EncoderConfig& cfg);
ad::Tensor adapted_suffix(const ad::Tensor& prefix, const EncoderParams& params,
                          const EncoderConfig& cfg);
// CLS rows of a stacked token matrix: [S x d].
ad::Tensor cls_rows(const ad::Tensor& stacked_tokens, const EncoderConfig& cfg);

}  // namespace slicevol::encoder
