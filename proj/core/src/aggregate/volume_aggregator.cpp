#include "slicevol/aggregate/volume_aggregator.hpp"

#include <cmath>

#include "slicevol/errors.hpp"

namespace slicevol::aggregate {

void AggregatorConfig::validate() const {
  if (embed_dim == 0 || n_heads == 0 || embed_dim % n_heads != 0) {
    throw ParameterError("aggregator embed_dim must be divisible by n_heads");
  }
  if (max_slices == 0) throw ParameterError("max_slices must be positive");
  if (pool_layers == 0) throw ParameterError("pool_layers must be at least 1");
  if (!(layer_norm_eps > 0.0)) throw ParameterError("layer_norm_eps must be positive");
}

AggregatorParams init_aggregator(const AggregatorConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t d = cfg.embed_dim;
  AggregatorParams p;
  p.slice_pos = random_normal({cfg.max_slices, d}, 0.02, rng, true);
  for (std::size_t i = 0; i < cfg.pool_layers; ++i) {
    PoolLayerParams layer;
    layer.norm = make_layer_norm(d, true);
    layer.qkv = make_linear(d, 3 * d, rng, true);
    layer.proj = make_linear(d, d, rng, true);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

AttentionRecord AttentionRecord::from_attention(const ad::AttentionResult& attention,
                                                std::size_t group) {
  const std::size_t s = attention.tokens;
  AttentionRecord record;
  record.weights.assign(s, 0.0);
  for (std::size_t h = 0; h < attention.heads; ++h) {
    for (std::size_t q = 0; q < s; ++q) {
      for (std::size_t k = 0; k < s; ++k) record.weights[k] += attention.prob(group, h, q, k);
    }
  }
  const double norm = 1.0 / static_cast<double>(attention.heads * s);
  for (double& w : record.weights) w *= norm;
  return record;
}

void AttentionRecord::validate(double tolerance) const {
  if (weights.empty()) throw ContractError("attention record is empty");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ContractError("attention weight is negative or non-finite");
    total += w;
  }
  if (std::abs(total - 1.0) > tolerance) {
    throw ContractError("attention weights sum to " + std::to_string(total));
  }
}

ad::Tensor stack_cls(std::span<const encoder::SliceTokens> slices) {
  if (slices.empty()) throw ContractError("stack_cls needs at least one slice");
  std::vector<ad::Tensor> rows;
  rows.reserve(slices.size());
  for (const auto& s : slices) rows.push_back(s.cls);
  return ad::concat_rows(rows);
}

ad::Tensor add_slice_positional(const ad::Tensor& sequence, const ad::Tensor& table) {
  const std::size_t s = sequence.rows();
  if (s > table.rows()) {
    throw CapacityError(std::to_string(s) + " slices exceed the positional table of " +
                        std::to_string(table.rows()));
  }
  return ad::add(sequence, ad::slice_rows(table, 0, s));
}

PoolResult attention_pool(const ad::Tensor& sequence, const AggregatorParams& params,
                          const AggregatorConfig& cfg) {
  if (sequence.dim() != 2 || sequence.size(1) != cfg.embed_dim) {
    throw DimensionError("attention_pool expects [S x " + std::to_string(cfg.embed_dim) + "]");
  }
  const std::size_t s = sequence.size(0);
  PoolResult result;
  ad::Tensor x = sequence;
  for (const PoolLayerParams& layer : params.layers) {
    const ad::Tensor h = apply(layer.norm, x, cfg.layer_norm_eps);
    const ad::AttentionResult att = ad::self_attention(apply(layer.qkv, h), s, cfg.n_heads);
    x = ad::add(x, apply(layer.proj, att.output));
    result.attention = AttentionRecord::from_attention(att);
  }
  result.sequence = x;
  return result;
}

ad::Tensor mean_pool(const ad::Tensor& sequence) { return ad::mean_rows(sequence); }

VolumeEncoding aggregate(const ad::Tensor& cls_sequence, const AggregatorParams& params,
                         const AggregatorConfig& cfg) {
  const ad::Tensor positioned = add_slice_positional(cls_sequence, params.slice_pos);
  PoolResult pooled = attention_pool(positioned, params, cfg);
  pooled.attention.validate();
  return {mean_pool(pooled.sequence), std::move(pooled.attention)};
}

VolumeEncoding encode_volume(std::span<const ad::Tensor> slices,
                             const encoder::EncoderParams& encoder_params,
                             const encoder::EncoderConfig& encoder_cfg,
                             const AggregatorParams& params, const AggregatorConfig& cfg) {
  if (slices.empty()) throw ContractError("volume has no slices");
  const ad::Tensor tokens = encoder::adapted_suffix(
      encoder::frozen_prefix(slices, encoder_params, encoder_cfg), encoder_params, encoder_cfg);
  return aggregate(encoder::cls_rows(tokens, encoder_cfg), params, cfg);
}

}  // namespace slicevol::aggregate
