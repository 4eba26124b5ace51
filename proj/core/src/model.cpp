#include "slicevol/model.hpp"

#include <cmath>

#include "slicevol/errors.hpp"

namespace slicevol {

void ModelConfig::validate() const {
  encoder.validate();
  aggregator.validate();
  heads.validate();
  if (aggregator.embed_dim != encoder.embed_dim || heads.embed_dim != encoder.embed_dim) {
    throw ParameterError("encoder, aggregator and heads must share embed_dim");
  }
}

ModelParams init_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  // Separate substreams keep each component's initialization independent of
  // the sizes of the others.
  Rng enc_rng(substream_seed(seed, 1));
  Rng agg_rng(substream_seed(seed, 2));
  Rng cls_rng(substream_seed(seed, 3));
  Rng proj_rng(substream_seed(seed, 4));
  ModelParams p;
  p.encoder = encoder::init_encoder(cfg.encoder, enc_rng);
  p.aggregator = aggregate::init_aggregator(cfg.aggregator, agg_rng);
  p.cls_head = heads::init_cls_head(cfg.heads, cls_rng);
  p.proj_head = heads::init_proj_head(cfg.heads, proj_rng);
  return p;
}

void for_each_param(const ModelParams& params,
                    const std::function<void(const std::string&, const ad::Tensor&)>& f) {
  // visit() only reads here.
  const_cast<ModelParams&>(params).visit(
      [&f](const std::string& name, ad::Tensor& t) { f(name, t); });
}

std::vector<ParamEntry> param_manifest(const ModelParams& params) {
  std::vector<ParamEntry> out;
  for_each_param(params, [&out](const std::string& name, const ad::Tensor& t) {
    out.push_back({name, t.shape(), t.requires_grad()});
  });
  return out;
}

std::size_t trainable_count(const ModelParams& params) {
  std::size_t n = 0;
  for_each_param(params, [&n](const std::string&, const ad::Tensor& t) {
    if (t.requires_grad()) n += t.numel();
  });
  return n;
}

double ModelOutput::positive_probability() const {
  const double a = logits[0], b = logits[1];
  // softmax(l)[1] = 1 / (1 + exp(l0 - l1))
  return 1.0 / (1.0 + std::exp(a - b));
}

void require_compatible(const data::MaskVolume& volume, const ModelConfig& cfg) {
  if (volume.height != cfg.encoder.image_size || volume.width != cfg.encoder.image_size) {
    throw DimensionError("volume " + volume.patient_id + " is " + std::to_string(volume.height) +
                         "x" + std::to_string(volume.width) + ", encoder expects " +
                         std::to_string(cfg.encoder.image_size));
  }
  if (volume.slices > cfg.aggregator.max_slices) {
    throw CapacityError("volume " + volume.patient_id + " has " + std::to_string(volume.slices) +
                        " slices; positional table holds " +
                        std::to_string(cfg.aggregator.max_slices));
  }
}

ad::Tensor compute_prefix(const ModelParams& params, const ModelConfig& cfg,
                          std::span<const ad::Tensor> slices) {
  return encoder::frozen_prefix(slices, params.encoder, cfg.encoder);
}

ModelOutput forward_from_prefix(const ModelParams& params, const ModelConfig& cfg,
                                const ad::Tensor& prefix, bool training, Rng& rng) {
  const ad::Tensor tokens = encoder::adapted_suffix(prefix, params.encoder, cfg.encoder);
  aggregate::VolumeEncoding enc =
      aggregate::aggregate(encoder::cls_rows(tokens, cfg.encoder), params.aggregator, cfg.aggregator);
  ModelOutput out;
  out.embedding = enc.embedding;
  out.attention = std::move(enc.attention);
  out.logits = heads::cls_head(enc.embedding, params.cls_head, cfg.heads, training, rng);
  out.projection = heads::l2_normalize(heads::proj_head(enc.embedding, params.proj_head, cfg.heads));
  return out;
}

ModelOutput forward(const ModelParams& params, const ModelConfig& cfg,
                    const data::MaskVolume& volume, bool training, Rng& rng) {
  require_compatible(volume, cfg);
  const std::vector<ad::Tensor> slices = data::slice_tensors(volume);
  return forward_from_prefix(params, cfg, compute_prefix(params, cfg, slices), training, rng);
}

}  // namespace slicevol
