#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "slicevol/eval/attention_export.hpp"
#include "slicevol/eval/bootstrap.hpp"
#include "slicevol/eval/calibration.hpp"
#include "slicevol/eval/cohort.hpp"
#include "slicevol/eval/delong.hpp"
#include "slicevol/eval/metrics.hpp"

namespace slicevol::eval {

struct EvalConfig {
  std::size_t bootstrap_resamples = 2000;
  std::uint64_t bootstrap_seed = 0;
  double confidence_level = 0.95;
  std::size_t reliability_bins = 5;
  double low_band = 0.1;
  double high_band = 0.25;

  void validate() const;
  bool operator==(const EvalConfig&) const = default;
};

struct MetricEntry {
  Metric metric = Metric::Accuracy;
  double observed = 0.0;
  Interval ci;  // bootstrap median and percentile bounds
};

struct ModelReport {
  std::string name;
  double threshold = 0.5;  // selected on the validation split
  double validation_f1 = 0.0;
  ConfusionMatrix confusion;  // observed counts at `threshold`
  PointMetrics point;
  std::vector<MetricEntry> metrics;

  const MetricEntry& at(Metric metric) const;
};

struct ComparisonEntry {
  Metric metric = Metric::Accuracy;
  double observed_diff = 0.0;
  Interval diff;
  double p_value = 1.0;
};

struct Comparison {
  std::string model;
  std::string baseline;
  DeLongResult delong;
  std::vector<ComparisonEntry> metrics;  // paired bootstrap
};

struct MetricsReport {
  std::string split;
  std::size_t n_patients = 0;
  std::size_t positives = 0;
  EvalConfig config;
  ModelReport model;
  std::optional<ModelReport> baseline;
  std::vector<Comparison> comparisons;
  std::vector<CalibrationBin> calibration;
  ConfidenceBuckets buckets;
  std::vector<AttentionSummary> attention;

  // CI low <= point <= high for every metric; bins partition the cohort.
  void validate() const;
};

struct ModelScores {
  std::string name;
  ScoredCohort validation;
  ScoredCohort evaluation;
};

// Threshold from each model's validation cohort, applied to its evaluation
// cohort; bootstrap CIs per model, and DeLong plus paired bootstrap against
// the baseline when one is given.
MetricsReport build_report(const ModelScores& model, const std::optional<ModelScores>& baseline,
                           std::span<const PatientAttention> attention, std::string split,
                           const EvalConfig& cfg);

// Numbers are written with 6 significant digits.
std::string report_to_json(const MetricsReport& report);
MetricsReport report_from_json(std::string_view text);
void write_report(const std::filesystem::path& path, const MetricsReport& report);
MetricsReport read_report(const std::filesystem::path& path);

double round_significant(double value, int digits = 6);

// Human-readable tables with values rounded to two decimals.
std::string render_summary(const MetricsReport& report);
std::string render_confusion_summary(const ConfusionMatrix& cm);

}  // namespace slicevol::eval
