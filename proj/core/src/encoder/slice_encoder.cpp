#include "slicevol/encoder/slice_encoder.hpp"

#include "slicevol/autodiff/ops.hpp"
#include "slicevol/errors.hpp"

namespace slicevol::encoder {

namespace {

constexpr double kTokenInitStd = 0.02;
constexpr double kLoraInitStd = 0.02;

void require_slice(const ad::Tensor& slice, std::size_t channels, const EncoderConfig& cfg) {
  const ad::Shape want{cfg.image_size, cfg.image_size, channels};
  if (slice.shape() != want) {
    throw DimensionError("slice shape " + ad::to_string(slice.shape()) + ", expected " +
                         ad::to_string(want));
  }
}

}  // namespace

void EncoderConfig::validate() const {
  if (patch_size == 0 || image_size == 0 || image_size % patch_size != 0) {
    throw ParameterError("image_size must be a positive multiple of patch_size");
  }
  if (embed_dim == 0 || n_heads == 0 || embed_dim % n_heads != 0) {
    throw ParameterError("embed_dim must be divisible by n_heads");
  }
  if (n_blocks == 0) throw ParameterError("encoder needs at least one block");
  if (lora_rank == 0) throw ParameterError("lora_rank must be at least 1");
  if (!(lora_alpha > 0.0)) throw ParameterError("lora_alpha must be positive");
  if (mlp_ratio == 0) throw ParameterError("mlp_ratio must be positive");
  if (!(layer_norm_eps > 0.0)) throw ParameterError("layer_norm_eps must be positive");
}

LoraAdapter make_lora(const LinearParams& base, const EncoderConfig& cfg, Rng& rng) {
  LoraAdapter adapter;
  adapter.a = random_normal({cfg.lora_rank, base.in_features()}, kLoraInitStd, rng, true);
  adapter.b = ad::Tensor::zeros({base.out_features(), cfg.lora_rank}, true);
  adapter.scale = cfg.lora_scale();
  return adapter;
}

ad::Tensor apply_adapted(const LinearParams& base, const LoraAdapter* adapter,
                         const ad::Tensor& x) {
  ad::Tensor y = apply(base, x);
  if (adapter == nullptr) return y;
  const ad::Tensor low = ad::linear(ad::linear(x, adapter->a, {}), adapter->b, {});
  return ad::add(y, ad::scale(low, adapter->scale));
}

EncoderParams init_encoder(const EncoderConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t d = cfg.embed_dim;
  EncoderParams p;
  p.patch_proj = make_linear(cfg.patch_dim(), d, rng, false);
  p.patch_pos = random_normal({cfg.patches(), d}, kTokenInitStd, rng, false);
  p.cls_token = random_normal({1, d}, kTokenInitStd, rng, false);
  for (std::size_t i = 0; i < cfg.n_blocks; ++i) {
    BlockParams b;
    b.norm1 = make_layer_norm(d, false);
    b.qkv = make_linear(d, 3 * d, rng, false);
    b.proj = make_linear(d, d, rng, false);
    b.norm2 = make_layer_norm(d, false);
    b.fc1 = make_linear(d, cfg.mlp_ratio * d, rng, false);
    b.fc2 = make_linear(cfg.mlp_ratio * d, d, rng, false);
    p.blocks.push_back(std::move(b));
  }
  const BlockParams& last = p.blocks.back();
  p.lora.qkv = make_lora(last.qkv, cfg, rng);
  p.lora.proj = make_lora(last.proj, cfg, rng);
  p.lora.fc1 = make_lora(last.fc1, cfg, rng);
  p.lora.fc2 = make_lora(last.fc2, cfg, rng);
  return p;
}

ad::Tensor to_three_channel(const ad::Tensor& slice) {
  if (slice.dim() != 3 || slice.size(2) != 1) {
    throw DimensionError("to_three_channel expects [H x W x 1], got " + ad::to_string(slice.shape()));
  }
  const auto src = slice.data();
  std::vector<double> out(src.size() * 3);
  for (std::size_t i = 0; i < src.size(); ++i) {
    out[3 * i] = out[3 * i + 1] = out[3 * i + 2] = src[i];
  }
  return ad::Tensor({slice.size(0), slice.size(1), 3}, std::move(out));
}

ad::Tensor patchify(const ad::Tensor& slice3, std::size_t patch_size) {
  if (slice3.dim() != 3 || slice3.size(2) != 3) {
    throw DimensionError("patchify expects [H x W x 3], got " + ad::to_string(slice3.shape()));
  }
  const std::size_t h = slice3.size(0), w = slice3.size(1);
  if (patch_size == 0 || h % patch_size != 0 || w % patch_size != 0) {
    throw DimensionError("image " + ad::to_string(slice3.shape()) + " not divisible into " +
                         std::to_string(patch_size) + "-pixel patches");
  }
  const std::size_t ph = h / patch_size, pw = w / patch_size;
  const std::size_t dim = 3 * patch_size * patch_size;
  const auto src = slice3.data();
  std::vector<double> out(ph * pw * dim);
  for (std::size_t py = 0; py < ph; ++py) {
    for (std::size_t px = 0; px < pw; ++px) {
      double* dst = &out[(py * pw + px) * dim];
      for (std::size_t y = 0; y < patch_size; ++y) {
        const double* row = &src[((py * patch_size + y) * w + px * patch_size) * 3];
        std::copy_n(row, 3 * patch_size, dst + y * 3 * patch_size);
      }
    }
  }
  return ad::Tensor({ph * pw, dim}, std::move(out));
}

ad::Tensor patch_embed(const ad::Tensor& slice3, const EncoderParams& params,
                       const EncoderConfig& cfg) {
  require_slice(slice3, 3, cfg);
  return apply(params.patch_proj, patchify(slice3, cfg.patch_size));
}

ad::Tensor transformer_block(const ad::Tensor& tokens, const BlockParams& block,
                             const BlockAdapters* adapters, const EncoderConfig& cfg,
                             std::size_t group_tokens) {
  if (tokens.dim() != 2 || tokens.size(1) != cfg.embed_dim) {
    throw DimensionError("transformer_block expects [n x " + std::to_string(cfg.embed_dim) +
                         "], got " + ad::to_string(tokens.shape()));
  }
  const double eps = cfg.layer_norm_eps;
  const ad::Tensor h = apply(block.norm1, tokens, eps);
  const ad::Tensor qkv = apply_adapted(block.qkv, adapters ? &adapters->qkv : nullptr, h);
  const ad::Tensor attended = ad::self_attention(qkv, group_tokens, cfg.n_heads).output;
  const ad::Tensor x =
      ad::add(tokens, apply_adapted(block.proj, adapters ? &adapters->proj : nullptr, attended));
  const ad::Tensor h2 = apply(block.norm2, x, eps);
  const ad::Tensor hidden = ad::gelu(apply_adapted(block.fc1, adapters ? &adapters->fc1 : nullptr, h2));
  return ad::add(x, apply_adapted(block.fc2, adapters ? &adapters->fc2 : nullptr, hidden));
}

ad::Tensor embed_slices(std::span<const ad::Tensor> slices, const EncoderParams& params,
                        const EncoderConfig& cfg) {
  if (slices.empty()) throw ContractError("embed_slices needs at least one slice");
  std::vector<ad::Tensor> parts;
  parts.reserve(2 * slices.size());
  for (const ad::Tensor& slice : slices) {
    require_slice(slice, 1, cfg);
    parts.push_back(params.cls_token);
    parts.push_back(ad::add(patch_embed(to_three_channel(slice), params, cfg), params.patch_pos));
  }
  return ad::concat_rows(parts);
}

ad::Tensor frozen_prefix(std::span<const ad::Tensor> slices, const EncoderParams& params,
                         const EncoderConfig& cfg) {
  ad::Tensor x = embed_slices(slices, params, cfg);
  for (std::size_t i = 0; i + 1 < params.blocks.size(); ++i) {
    x = transformer_block(x, params.blocks[i], nullptr, cfg, cfg.tokens());
  }
  return x;
}

ad::Tensor adapted_suffix(const ad::Tensor& prefix, const EncoderParams& params,
                          const EncoderConfig& cfg) {
  return transformer_block(prefix, params.blocks.back(), &params.lora, cfg, cfg.tokens());
}

ad::Tensor cls_rows(const ad::Tensor& stacked_tokens, const EncoderConfig& cfg) {
  const std::size_t t = cfg.tokens();
  if (stacked_tokens.dim() != 2 || stacked_tokens.size(0) % t != 0) {
    throw DimensionError("stacked token matrix " + ad::to_string(stacked_tokens.shape()) +
                         " is not a whole number of slices");
  }
  std::vector<std::size_t> rows(stacked_tokens.size(0) / t);
  for (std::size_t s = 0; s < rows.size(); ++s) rows[s] = s * t;
  return ad::gather_rows(stacked_tokens, rows);
}

SliceTokens encode_slice(const ad::Tensor& slice, const EncoderParams& params,
                         const EncoderConfig& cfg) {
  const ad::Tensor one[] = {slice};
  const ad::Tensor tokens = adapted_suffix(frozen_prefix(one, params, cfg), params, cfg);
  return {tokens, ad::reshape(cls_rows(tokens, cfg), {cfg.embed_dim})};
}

}  // namespace slicevol::encoder
