#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "slicevol/autodiff/tensor.hpp"
#include "slicevol/random.hpp"

namespace slicevol::ad {

// Several operations treat a tensor as a stack of rows over its last axis
// ("row view"): a [a x b x d] tensor is a.b rows of width d.

Tensor matmul(const Tensor& a, const Tensor& b);     // [m x k] . [k x n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // [m x k] . [n x k]^T
Tensor transpose(const Tensor& a);

// x . W^T + b over the row view; W is [out x in], b is [out] or undefined.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
// Adds a [d] vector to every row of the row view.
Tensor add_bias(const Tensor& x, const Tensor& bias);

Tensor sum(const Tensor& a);   // scalar
Tensor mean(const Tensor& a);  // scalar
Tensor mean_rows(const Tensor& x);  // [n x d] -> [d]

Tensor reshape(const Tensor& a, Shape shape);
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count);
// Concatenates along the first axis; inputs share their trailing shape. 1-D
// inputs of width d are stacked into an [n x d] matrix.
Tensor concat_rows(std::span<const Tensor> parts);

// Exact erf form: x * Phi(x).
Tensor gelu(const Tensor& x);
// Normalizes each row of the row view, then applies gamma * x_hat + beta.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);
// Max-subtracted softmax along `axis` (negative counts from the end).
Tensor softmax(const Tensor& x, int axis = -1);
// Inverted dropout. Identity (same tensor) when !training or rate == 0.
Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng);

struct AttentionResult {
  Tensor output;  // [groups*tokens x d]
  // Row-stochastic attention probabilities, laid out [group][head][query][key].
  std::shared_ptr<const std::vector<double>> probs;
  std::size_t groups = 0;
  std::size_t heads = 0;
  std::size_t tokens = 0;

  double prob(std::size_t g, std::size_t h, std::size_t q, std::size_t k) const {
    return (*probs)[((g * heads + h) * tokens + q) * tokens + k];
  }
};

// Scaled dot-product multi-head self-attention over independent groups of
// `tokens` consecutive rows. `qkv` packs queries, keys and values as
// [groups*tokens x 3d] (columns q | k | v); heads must divide d.
AttentionResult self_attention(const Tensor& qkv, std::size_t tokens, std::size_t heads);

}  // namespace slicevol::ad
