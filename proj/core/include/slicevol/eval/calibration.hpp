#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "slicevol/eval/cohort.hpp"

namespace slicevol::eval {

struct CalibrationBin {
  double low = 0.0;
  double high = 0.0;  // the last bin includes 1.0
  std::size_t n = 0;
  double mean_predicted = 0.0;     // 0 when n = 0
  double observed_fraction = 0.0;  // 0 when n = 0

  double gap() const { return observed_fraction - mean_predicted; }
};

// Equal-width bins over [0, 1]; empty bins are kept with n = 0.
std::vector<CalibrationBin> reliability_bins(const ScoredCohort& cohort, std::size_t n_bins = 5);

// "(mean 0.13, n 9, observed 0.33)"
std::string format_bin(const CalibrationBin& bin);

struct ConfidenceBuckets {
  std::vector<std::string> uncertain_correct;
  std::vector<std::string> uncertain_wrong;
  std::vector<std::string> confident_correct;
  std::vector<std::string> confident_wrong;
  std::vector<std::string> mid_band;

  std::size_t total() const;
};

// confidence = |p - threshold|; < low_band is uncertain, >= high_band is
// confident, anything between goes to mid_band. Prediction is p >= threshold.
ConfidenceBuckets confidence_buckets(const ScoredCohort& cohort, double threshold,
                                     double low_band = 0.1, double high_band = 0.25);

}  // namespace slicevol::eval
