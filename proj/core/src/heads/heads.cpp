#include "slicevol/heads/heads.hpp"

#include <cmath>

#include "slicevol/autodiff/ops.hpp"
#include "slicevol/errors.hpp"

namespace slicevol::heads {

void HeadsConfig::validate() const {
  if (embed_dim < 8 || embed_dim % 8 != 0) {
    throw ParameterError("classification head needs embed_dim divisible by 8");
  }
  if (proj_dim == 0 || proj_hidden == 0) throw ParameterError("projection widths must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ParameterError("dropout must lie in [0, 1)");
  if (!(layer_norm_eps > 0.0)) throw ParameterError("layer_norm_eps must be positive");
}

ClsHeadParams init_cls_head(const HeadsConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t d = cfg.embed_dim;
  ClsHeadParams p;
  p.fc1 = make_linear(d, d / 2, rng, true);
  p.norm1 = make_layer_norm(d / 2, true);
  p.fc2 = make_linear(d / 2, d / 8, rng, true);
  p.norm2 = make_layer_norm(d / 8, true);
  p.out = make_linear(d / 8, 2, rng, true);
  return p;
}

ProjHeadParams init_proj_head(const HeadsConfig& cfg, Rng& rng) {
  cfg.validate();
  ProjHeadParams p;
  p.fc1 = make_linear(cfg.embed_dim, cfg.proj_hidden, rng, true);
  p.norm = make_layer_norm(cfg.proj_hidden, true);
  p.fc2 = make_linear(cfg.proj_hidden, cfg.proj_dim, rng, true);
  return p;
}

ad::Tensor cls_head(const ad::Tensor& z, const ClsHeadParams& params, const HeadsConfig& cfg,
                    bool training, Rng& rng) {
  if (z.numel() != cfg.embed_dim) {
    throw DimensionError("cls_head expects an embedding of width " + std::to_string(cfg.embed_dim));
  }
  const double eps = cfg.layer_norm_eps;
  ad::Tensor x = ad::gelu(apply(params.norm1, apply(params.fc1, z), eps));
  x = ad::dropout(x, cfg.dropout, training, rng);
  x = ad::gelu(apply(params.norm2, apply(params.fc2, x), eps));
  x = ad::dropout(x, cfg.dropout, training, rng);
  return apply(params.out, x);
}

ad::Tensor proj_head(const ad::Tensor& z, const ProjHeadParams& params, const HeadsConfig& cfg) {
  if (z.numel() != cfg.embed_dim) {
    throw DimensionError("proj_head expects an embedding of width " + std::to_string(cfg.embed_dim));
  }
  const ad::Tensor h = ad::gelu(apply(params.norm, apply(params.fc1, z), cfg.layer_norm_eps));
  return apply(params.fc2, h);
}

ad::Tensor l2_normalize(const ad::Tensor& z) {
  const auto v = z.data();
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double norm = std::sqrt(sq);
  if (!(norm > 1e-12)) {
    throw DegenerateEmbeddingError("projection has norm " + std::to_string(norm) +
                                   "; cannot place it on the unit sphere");
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / norm;
  return ad::make_op(z.shape(), std::move(out), {z},
                     [norm](const ad::detail::Node& self, std::span<const double> g,
                            std::span<const std::span<double>> gin) {
                       const auto& y = self.value;
                       double yg = 0.0;
                       for (std::size_t i = 0; i < g.size(); ++i) yg += y[i] * g[i];
                       for (std::size_t i = 0; i < g.size(); ++i) gin[0][i] += (g[i] - y[i] * yg) / norm;
                     });
}

}  // namespace slicevol::heads
