#include "slicevol/train/schedule.hpp"

#include <cmath>
#include <numbers>

#include "slicevol/errors.hpp"

namespace slicevol::train {

double cosine_lr(std::size_t epoch, double lr0, std::size_t max_epochs) {
  if (max_epochs == 0 || epoch > max_epochs) {
    throw ContractError("cosine_lr: epoch outside [0, max_epochs]");
  }
  constexpr double lr_min = 0.0;
  const double phase = std::numbers::pi * static_cast<double>(epoch) / static_cast<double>(max_epochs);
  return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(phase));
}

EarlyStop early_stop_check(std::span<const double> history, std::size_t patience) {
  if (history.empty()) throw ContractError("early_stop_check: empty history");
  if (patience == 0) throw ParameterError("patience must be at least 1");
  EarlyStop r;
  for (std::size_t i = 1; i < history.size(); ++i) {
    if (history[i] > history[r.best_epoch]) r.best_epoch = i;
  }
  r.stop = history.size() - 1 - r.best_epoch >= patience;
  return r;
}

}  // namespace slicevol::train
