#pragma once

#include <cstddef>
#include <string>

#include "slicevol/autodiff/tensor.hpp"
#include "slicevol/layers.hpp"
#include "slicevol/random.hpp"

namespace slicevol::heads {

struct HeadsConfig {
  std::size_t embed_dim = 32;  // d; must be divisible by 8
  std::size_t proj_dim = 16;   // p
  std::size_t proj_hidden = 32;
  double dropout = 0.2;        // classification head only
  double layer_norm_eps = 1e-5;

  void validate() const;
};

// d -> d/2 -> d/8 -> 2, each hidden step Linear -> LayerNorm -> GELU -> Dropout.
struct ClsHeadParams {
  LinearParams fc1;
  LayerNormParams norm1;
  LinearParams fc2;
  LayerNormParams norm2;
  LinearParams out;

  template <class F>
  void visit(std::string_view prefix, F&& f) {
    const std::string p(prefix);
    fc1.visit(p + ".fc1", f);
    norm1.visit(p + ".norm1", f);
    fc2.visit(p + ".fc2", f);
    norm2.visit(p + ".norm2", f);
    out.visit(p + ".out", f);
  }
};

// d -> hidden -> p with LayerNorm + GELU in between.
struct ProjHeadParams {
  LinearParams fc1;
  LayerNormParams norm;
  LinearParams fc2;

  template <class F>
  void visit(std::string_view prefix, F&& f) {
    const std::string p(prefix);
    fc1.visit(p + ".fc1", f);
    norm.visit(p + ".norm", f);
    fc2.visit(p + ".fc2", f);
  }
};

ClsHeadParams init_cls_head(const HeadsConfig& cfg, Rng& rng);
ProjHeadParams init_proj_head(const HeadsConfig& cfg, Rng& rng);

// Two logits from a [d] volume embedding. Dropout is active only when training.
ad::Tensor cls_head(const ad::Tensor& z, const ClsHeadParams& params, const HeadsConfig& cfg,
                    bool training, Rng& rng);

// Unnormalized projection z_p of length p.
ad::Tensor proj_head(const ad::Tensor& z, const ProjHeadParams& params, const HeadsConfig& cfg);

// z / ||z||_2. Throws DegenerateEmbeddingError when ||z|| <= 1e-12.
ad::Tensor l2_normalize(const ad::Tensor& z);

}  // namespace slicevol::heads
