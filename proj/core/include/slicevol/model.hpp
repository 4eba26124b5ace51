#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "slicevol/aggregate/volume_aggregator.hpp"
#include "slicevol/data/volume.hpp"
#include "slicevol/encoder/slice_encoder.hpp"
#include "slicevol/heads/heads.hpp"

namespace slicevol {

struct ModelConfig {
  encoder::EncoderConfig encoder;
  aggregate::AggregatorConfig aggregator;
  heads::HeadsConfig heads;

  // Validates each part and that the embedding widths agree.
  void validate() const;
};

struct ModelParams {
  encoder::EncoderParams encoder;
  aggregate::AggregatorParams aggregator;
  heads::ClsHeadParams cls_head;
  heads::ProjHeadParams proj_head;

  // Canonical parameter manifest order.
  template <class F>
  void visit(F&& f) {
    encoder.visit("encoder", f);
    aggregator.visit("aggregator", f);
    cls_head.visit("cls_head", f);
    proj_head.visit("proj_head", f);
  }
};

ModelParams init_model(const ModelConfig& cfg, std::uint64_t seed);

struct ParamEntry {
  std::string name;
  ad::Shape shape;
  bool trainable = false;
};

std::vector<ParamEntry> param_manifest(const ModelParams& params);
void for_each_param(const ModelParams& params,
                    const std::function<void(const std::string&, const ad::Tensor&)>& f);
std::size_t trainable_count(const ModelParams& params);

struct ModelOutput {
  ad::Tensor logits;      // [2]
  ad::Tensor embedding;   // z_V, [d]
  ad::Tensor projection;  // unit-norm z~_p, [p]
  aggregate::AttentionRecord attention;

  // softmax(logits)[1]
  double positive_probability() const;
};

// Output of the frozen part of the encoder for every slice of a volume; it
// depends only on the input and frozen parameters, so it can be cached.
ad::Tensor compute_prefix(const ModelParams& params, const ModelConfig& cfg,
                          std::span<const ad::Tensor> slices);

ModelOutput forward_from_prefix(const ModelParams& params, const ModelConfig& cfg,
                                const ad::Tensor& prefix, bool training, Rng& rng);

ModelOutput forward(const ModelParams& params, const ModelConfig& cfg,
                    const data::MaskVolume& volume, bool training, Rng& rng);

// Checks a volume's in-plane geometry against the encoder.
void require_compatible(const data::MaskVolume& volume, const ModelConfig& cfg);

}  // namespace slicevol
