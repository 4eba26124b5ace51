#include "slicevol/train/optimizer.hpp"

#include <cmath>

#include "slicevol/errors.hpp"

namespace slicevol::train {

OptimizerState init_optimizer(std::span<ad::Tensor* const> params) {
  OptimizerState s;
  s.m.resize(params.size());
  s.v.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->requires_grad()) {
      s.m[i].assign(params[i]->numel(), 0.0);
      s.v[i].assign(params[i]->numel(), 0.0);
    }
  }
  return s;
}

void adamw_step(std::span<ad::Tensor* const> params, std::span<const std::vector<double>> grads,
                OptimizerState& state, double lr, double weight_decay, const AdamWConfig& hyper) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ContractError("adamw_step: parameter, gradient and state counts differ");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    ad::Tensor& p = *params[i];
    if (!p.requires_grad()) continue;
    const std::size_t n = p.numel();
    if (grads[i].size() != n || state.m[i].size() != n || state.v[i].size() != n) {
      throw ContractError("adamw_step: shape mismatch for parameter " + std::to_string(i));
    }
    std::vector<double> theta(p.data().begin(), p.data().end());
    auto& m = state.m[i];
    auto& v = state.v[i];
    const auto& g = grads[i];
    for (std::size_t k = 0; k < n; ++k) {
      theta[k] -= lr * weight_decay * theta[k];
      m[k] = hyper.beta1 * m[k] + (1.0 - hyper.beta1) * g[k];
      v[k] = hyper.beta2 * v[k] + (1.0 - hyper.beta2) * g[k] * g[k];
      theta[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + hyper.eps);
    }
    p = ad::Tensor(p.shape(), std::move(theta), true);
  }
}

std::vector<ad::Tensor*> param_pointers(ModelParams& params) {
  std::vector<ad::Tensor*> out;
  params.visit([&out](const std::string&, ad::Tensor& t) { out.push_back(&t); });
  return out;
}

}  // namespace slicevol::train
