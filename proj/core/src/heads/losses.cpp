#include "slicevol/heads/losses.hpp"

#include <algorithm>
#include <cmath>

#include "slicevol/autodiff/ops.hpp"
#include "slicevol/errors.hpp"

namespace slicevol::heads {

namespace {

constexpr double kUnitNormTolerance = 1e-6;

void require_unit(const ad::Tensor& z, const char* which) {
  double sq = 0.0;
  for (double v : z.data()) sq += v * v;
  if (std::abs(std::sqrt(sq) - 1.0) > kUnitNormTolerance) {
    throw ContractError(std::string("contrastive loss needs unit-norm embeddings; ") + which +
                        " has norm " + std::to_string(std::sqrt(sq)));
  }
}

}  // namespace

void LossConfig::validate() const {
  if (!(margin > 0.0)) throw ParameterError("margin must be positive");
  if (!(alpha_max >= 0.0)) throw ParameterError("alpha_max must be non-negative");
  if (ramp_epochs == 0) throw ParameterError("ramp_epochs must be at least 1");
}

ad::Tensor cross_entropy(const ad::Tensor& logits, int label) {
  const auto l = logits.data();
  if (label < 0 || static_cast<std::size_t>(label) >= l.size()) {
    throw ContractError("label " + std::to_string(label) + " outside " + std::to_string(l.size()) +
                        " classes");
  }
  const std::size_t top = static_cast<std::size_t>(std::max_element(l.begin(), l.end()) - l.begin());
  double rest = 0.0;
  for (std::size_t j = 0; j < l.size(); ++j) {
    if (j != top) rest += std::exp(l[j] - l[top]);
  }
  // (max - l_y) + log(1 + sum_{j != max} exp(l_j - max)); log1p keeps tiny losses exact.
  const double loss = (l[top] - l[static_cast<std::size_t>(label)]) + std::log1p(rest);
  const double z = 1.0 + rest;
  return ad::make_op({1}, {loss}, {logits},
                     [label, top, z](const ad::detail::Node& self, std::span<const double> g,
                                     std::span<const std::span<double>> gin) {
                       const auto& x = self.inputs[0]->value;
                       for (std::size_t j = 0; j < x.size(); ++j) {
                         const double p = std::exp(x[j] - x[top]) / z;
                         const double target = j == static_cast<std::size_t>(label) ? 1.0 : 0.0;
                         gin[0][j] += g[0] * (p - target);
                       }
                     });
}

ad::Tensor contrastive_margin_loss(const ad::Tensor& z1, const ad::Tensor& z2, int same_label,
                                   double margin) {
  if (z1.shape() != z2.shape()) throw DimensionError("contrastive loss embeddings differ in shape");
  if (same_label != 0 && same_label != 1) throw ContractError("pair label must be 0 or 1");
  if (!(margin > 0.0)) throw ParameterError("margin must be positive");
  require_unit(z1, "first");
  require_unit(z2, "second");

  const auto a = z1.data();
  const auto b = z2.data();
  auto diff = std::make_shared<std::vector<double>>(a.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    (*diff)[i] = a[i] - b[i];
    sq += (*diff)[i] * (*diff)[i];
  }
  const double dist = std::sqrt(sq);
  double loss = 0.0;
  // dL/d(diff) = coeff * diff
  double coeff = 0.0;
  if (same_label == 1) {
    loss = sq;
    coeff = 2.0;
  } else if (dist < margin) {
    const double gap = margin - dist;
    loss = gap * gap;
    // At D = 0 the direction is undefined; take the zero subgradient.
    coeff = dist > 0.0 ? -2.0 * gap / dist : 0.0;
  }
  return ad::make_op({1}, {loss}, {z1, z2},
                     [diff, coeff](const ad::detail::Node&, std::span<const double> g,
                                   std::span<const std::span<double>> gin) {
                       const double c = g[0] * coeff;
                       for (std::size_t i = 0; i < diff->size(); ++i) {
                         if (!gin[0].empty()) gin[0][i] += c * (*diff)[i];
                         if (!gin[1].empty()) gin[1][i] -= c * (*diff)[i];
                       }
                     });
}

double alpha_schedule(std::size_t epoch, const LossConfig& cfg) {
  const double progress =
      std::min(1.0, static_cast<double>(epoch) / static_cast<double>(cfg.ramp_epochs));
  return cfg.alpha_max * progress;
}

ad::Tensor multi_loss(const ad::Tensor& logits, int label, const ad::Tensor& z1,
                      const ad::Tensor& z2, int same_label, double alpha, double margin) {
  return ad::add(cross_entropy(logits, label),
                 ad::scale(contrastive_margin_loss(z1, z2, same_label, margin), alpha));
}

ad::Tensor combine_losses(std::span<const ad::Tensor> ce_terms,
                          std::span<const ad::Tensor> contrastive_terms, double alpha) {
  if (ce_terms.empty()) throw ContractError("combine_losses needs at least one CE term");
  const ad::Tensor ce = ad::mean(ad::concat_rows(ce_terms));
  if (contrastive_terms.empty()) return ce;
  return ad::add(ce, ad::scale(ad::mean(ad::concat_rows(contrastive_terms)), alpha));
}

}  // namespace slicevol::heads
