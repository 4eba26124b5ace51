#include "slicevol/eval/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "slicevol/errors.hpp"

namespace slicevol::eval {

std::vector<CalibrationBin> reliability_bins(const ScoredCohort& cohort, std::size_t n_bins) {
  if (n_bins < 2) throw ParameterError("reliability diagram needs at least two bins");
  cohort.validate();
  std::vector<CalibrationBin> bins(n_bins);
  std::vector<double> psum(n_bins, 0.0);
  std::vector<std::size_t> pos(n_bins, 0);
  const double w = 1.0 / static_cast<double>(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    bins[b].low = static_cast<double>(b) * w;
    bins[b].high = b + 1 == n_bins ? 1.0 : static_cast<double>(b + 1) * w;
  }
  for (const ScoredPatient& p : cohort.patients) {
    auto b = static_cast<std::size_t>(std::floor(p.probability * static_cast<double>(n_bins)));
    b = std::min(b, n_bins - 1);
    ++bins[b].n;
    psum[b] += p.probability;
    pos[b] += p.label == 1;
  }
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (bins[b].n == 0) continue;
    const double n = static_cast<double>(bins[b].n);
    bins[b].mean_predicted = psum[b] / n;
    bins[b].observed_fraction = static_cast<double>(pos[b]) / n;
  }
  return bins;
}

std::string format_bin(const CalibrationBin& bin) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "(mean %.2f, n %zu, observed %.2f)", bin.mean_predicted, bin.n,
                bin.observed_fraction);
  return buf;
}

std::size_t ConfidenceBuckets::total() const {
  return uncertain_correct.size() + uncertain_wrong.size() + confident_correct.size() +
         confident_wrong.size() + mid_band.size();
}

ConfidenceBuckets confidence_buckets(const ScoredCohort& cohort, double threshold, double low_band,
                                     double high_band) {
  if (!(low_band >= 0.0 && low_band <= high_band)) {
    throw ParameterError("confidence bands need 0 <= low_band <= high_band");
  }
  cohort.validate();
  ConfidenceBuckets out;
  for (const ScoredPatient& p : cohort.patients) {
    const double confidence = std::abs(p.probability - threshold);
    const bool correct = (p.probability >= threshold ? 1 : 0) == p.label;
    if (confidence < low_band) {
      (correct ? out.uncertain_correct : out.uncertain_wrong).push_back(p.id);
    } else if (confidence >= high_band) {
      (correct ? out.confident_correct : out.confident_wrong).push_back(p.id);
    } else {
      out.mid_band.push_back(p.id);
    }
  }
  return out;
}

}  // namespace slicevol::eval
