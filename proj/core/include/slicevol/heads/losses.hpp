#pragma once

#include <cstddef>
#include <span>

#include "slicevol/autodiff/tensor.hpp"

namespace slicevol::heads {

struct LossConfig {
  double margin = 1.0;
  double alpha_max = 0.3;
  std::size_t ramp_epochs = 30;
  std::size_t hard_mining_start_epoch = 20;

  void validate() const;
  bool operator==(const LossConfig&) const = default;
};

// -log softmax(logits)[label], evaluated through log-sum-exp.
ad::Tensor cross_entropy(const ad::Tensor& logits, int label);

// s * D^2 + (1 - s) * max(0, m - D)^2 with D = ||z1 - z2||. Both embeddings
// must be unit norm (within 1e-6), otherwise ContractError.
ad::Tensor contrastive_margin_loss(const ad::Tensor& z1, const ad::Tensor& z2, int same_label,
                                   double margin);

// alpha_max * min(1, epoch / ramp_epochs)
double alpha_schedule(std::size_t epoch, const LossConfig& cfg);

// CE + alpha * contrastive for one volume pair.
ad::Tensor multi_loss(const ad::Tensor& logits, int label, const ad::Tensor& z1,
                      const ad::Tensor& z2, int same_label, double alpha, double margin);

// Batch form: mean CE over volumes + alpha * mean contrastive over pairs. With
// no pairs the contrastive term is absent.
ad::Tensor combine_losses(std::span<const ad::Tensor> ce_terms,
                          std::span<const ad::Tensor> contrastive_terms, double alpha);

}  // namespace slicevol::heads
