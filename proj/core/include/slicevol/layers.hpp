#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "slicevol/autodiff/tensor.hpp"
#include "slicevol/random.hpp"

namespace slicevol {

// Parameters are plain tensors; a parameter is trainable exactly when its
// tensor is a leaf that requires a gradient. Parameter structs expose
// `visit(prefix, f)` calling f(name, tensor&) in a fixed canonical order.

struct LinearParams {
  ad::Tensor weight;  // [out x in]
  ad::Tensor bias;    // [out]

  std::size_t in_features() const { return weight.size(1); }
  std::size_t out_features() const { return weight.size(0); }

  template <class F>
  void visit(std::string_view prefix, F&& f) {
    f(std::string(prefix) + ".weight", weight);
    f(std::string(prefix) + ".bias", bias);
  }
};

struct LayerNormParams {
  ad::Tensor gamma;
  ad::Tensor beta;

  template <class F>
  void visit(std::string_view prefix, F&& f) {
    f(std::string(prefix) + ".gamma", gamma);
    f(std::string(prefix) + ".beta", beta);
  }
};

ad::Tensor random_normal(ad::Shape shape, double stddev, Rng& rng, bool trainable);

// Weights ~ N(0, 1/in), zero bias.
LinearParams make_linear(std::size_t in, std::size_t out, Rng& rng, bool trainable);
// gamma = 1, beta = 0.
LayerNormParams make_layer_norm(std::size_t width, bool trainable);

ad::Tensor apply(const LinearParams& layer, const ad::Tensor& x);
ad::Tensor apply(const LayerNormParams& norm, const ad::Tensor& x, double eps);

}  // namespace slicevol
