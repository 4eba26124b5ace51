#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "slicevol/autodiff/ops.hpp"
#include "slicevol/encoder/slice_encoder.hpp"
#include "slicevol/layers.hpp"

namespace slicevol::aggregate {

struct AggregatorConfig {
  std::size_t embed_dim = 32;
  std::size_t n_heads = 4;
  std::size_t max_slices = 32;
  std::size_t pool_layers = 1;
  double layer_norm_eps = 1e-5;

  void validate() const;
};

struct PoolLayerParams {
  LayerNormParams norm;
  LinearParams qkv;
  LinearParams proj;

  template <class F>
  void visit(std::string_view prefix, F&& f) {
    const std::string p(prefix);
    norm.visit(p + ".norm", f);
    qkv.visit(p + ".qkv", f);
    proj.visit(p + ".proj", f);
  }
};

struct AggregatorParams {
  ad::Tensor slice_pos;  // [max_slices x d], learnable
  std::vector<PoolLayerParams> layers;

  template <class F>
  void visit(std::string_view prefix, F&& f) {
    const std::string p(prefix);
    f(p + ".slice_pos", slice_pos);
    for (std::size_t i = 0; i < layers.size(); ++i) layers[i].visit(p + ".pool" + std::to_string(i), f);
  }
};

AggregatorParams init_aggregator(const AggregatorConfig& cfg, Rng& rng);

// Per-slice share of attention: attention received by each slice as a key,
// averaged over heads and query positions. Non-negative, sums to one.
struct AttentionRecord {
  std::vector<double> weights;

  static AttentionRecord from_attention(const ad::AttentionResult& attention, std::size_t group = 0);
  // Throws ContractError unless weights are non-negative and sum to 1 within `tolerance`.
  void validate(double tolerance = 1e-9) const;
};

// [S x d] matrix whose row i is the CLS descriptor of slice i.
ad::Tensor stack_cls(std::span<const encoder::SliceTokens> slices);

// Row i += table[i]. Throws CapacityError when S exceeds the table.
ad::Tensor add_slice_positional(const ad::Tensor& sequence, const ad::Tensor& table);

struct PoolResult {
  ad::Tensor sequence;  // [S x d]
  AttentionRecord attention;
};

// Pre-norm residual multi-head self-attention across slices. With several
// layers the record comes from the last one.
PoolResult attention_pool(const ad::Tensor& sequence, const AggregatorParams& params,
                          const AggregatorConfig& cfg);

ad::Tensor mean_pool(const ad::Tensor& sequence);

struct VolumeEncoding {
  ad::Tensor embedding;  // z_V, [d]
  AttentionRecord attention;
};

// Slice-axis positional embedding, attention pooling, mean pooling.
VolumeEncoding aggregate(const ad::Tensor& cls_sequence, const AggregatorParams& params,
                         const AggregatorConfig& cfg);

VolumeEncoding encode_volume(std::span<const ad::Tensor> slices,
                             const encoder::EncoderParams& encoder_params,
                             const encoder::EncoderConfig& encoder_cfg,
                             const AggregatorParams& params, const AggregatorConfig& cfg);

}  // namespace slicevol::aggregate
