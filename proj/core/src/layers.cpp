#include "slicevol/layers.hpp"

#include <cmath>

#include "slicevol/autodiff/ops.hpp"

namespace slicevol {

ad::Tensor random_normal(ad::Shape shape, double stddev, Rng& rng, bool trainable) {
  std::vector<double> values(ad::element_count(shape));
  for (double& v : values) v = stddev * standard_normal(rng);
  return ad::Tensor(std::move(shape), std::move(values), trainable);
}

LinearParams make_linear(std::size_t in, std::size_t out, Rng& rng, bool trainable) {
  LinearParams layer;
  layer.weight = random_normal({out, in}, 1.0 / std::sqrt(static_cast<double>(in)), rng, trainable);
  layer.bias = ad::Tensor::zeros({out}, trainable);
  return layer;
}

LayerNormParams make_layer_norm(std::size_t width, bool trainable) {
  return {ad::Tensor::full({width}, 1.0, trainable), ad::Tensor::zeros({width}, trainable)};
}

ad::Tensor apply(const LinearParams& layer, const ad::Tensor& x) {
  return ad::linear(x, layer.weight, layer.bias);
}

ad::Tensor apply(const LayerNormParams& norm, const ad::Tensor& x, double eps) {
  return ad::layer_norm(x, norm.gamma, norm.beta, eps);
}

}  // namespace slicevol
