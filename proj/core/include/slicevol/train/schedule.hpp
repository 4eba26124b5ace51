#pragma once

#include <cstddef>
#include <span>

namespace slicevol::train {

// lr_min + (lr0 - lr_min)(1 + cos(pi epoch / max_epochs)) / 2 with lr_min = 0.
double cosine_lr(std::size_t epoch, double lr0, std::size_t max_epochs);

struct EarlyStop {
  bool stop = false;
  std::size_t best_epoch = 0;
};

// Best = first maximum. Stops once `patience` epochs have passed without a
// strictly greater score.
EarlyStop early_stop_check(std::span<const double> history, std::size_t patience);

}  // namespace slicevol::train
