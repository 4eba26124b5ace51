#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "slicevol/eval/cohort.hpp"
#include "slicevol/eval/metrics.hpp"

namespace slicevol::eval {

struct BootstrapConfig {
  std::size_t resamples = 2000;
  std::uint64_t seed = 0;
  double level = 0.95;

  void validate() const;  // resamples >= 100, level in (0, 1)
};

// Percentile interval of bootstrap replicates; `point` is their median, so
// low <= point <= high always holds.
struct Interval {
  double point = 0.0;
  double low = 0.0;
  double high = 0.0;

  bool operator==(const Interval&) const = default;
};

// Linear interpolation between order statistics.
double percentile(std::span<const double> sorted, double q);
Interval percentile_interval(std::vector<double> values, double level);

// Resample `index`: patient indices drawn with replacement inside each label
// class, so class counts match the original. Seeded from substream `index`
// of `seed` and therefore independent of evaluation order.
std::vector<std::size_t> stratified_resample(std::span<const int> labels, std::uint64_t seed,
                                             std::size_t index);

struct MetricBootstrap {
  Metric metric = Metric::Accuracy;
  double observed = 0.0;  // on the full cohort
  Interval ci;
  std::vector<double> replicates;
};

MetricBootstrap bootstrap_metric(const ScoredCohort& cohort, Metric metric, double threshold,
                                 const BootstrapConfig& cfg);

struct PairedBootstrap {
  Metric metric = Metric::Accuracy;
  MetricBootstrap a;
  MetricBootstrap b;
  double observed_diff = 0.0;  // a - b
  Interval diff;
  // 2 min(P(diff <= 0), P(diff >= 0)) with add-one smoothing, capped at 1.
  double p_value = 1.0;
};

// Both models are scored on the same resamples, each at its own threshold.
// Patients are matched by id.
PairedBootstrap paired_bootstrap(const ScoredCohort& a, const ScoredCohort& b, Metric metric,
                                 double threshold_a, double threshold_b,
                                 const BootstrapConfig& cfg);

}  // namespace slicevol::eval
