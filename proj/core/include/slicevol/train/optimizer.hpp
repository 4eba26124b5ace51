#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "slicevol/autodiff/tensor.hpp"
#include "slicevol/model.hpp"

namespace slicevol::train {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Moments are indexed like the parameter list they were created for; frozen
// parameters keep empty moment vectors.
struct OptimizerState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;
};

OptimizerState init_optimizer(std::span<ad::Tensor* const> params);

// One AdamW update. Decay (theta -= lr * wd * theta) is applied before, and
// separately from, the bias-corrected Adam step. Parameters that do not
// require a gradient are left untouched. Updated parameters are written back
// as fresh leaves.
void adamw_step(std::span<ad::Tensor* const> params, std::span<const std::vector<double>> grads,
                OptimizerState& state, double lr, double weight_decay,
                const AdamWConfig& hyper = {});

// Parameter pointers in canonical manifest order.
std::vector<ad::Tensor*> param_pointers(ModelParams& params);

}  // namespace slicevol::train
