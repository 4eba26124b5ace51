#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "slicevol/eval/cohort.hpp"

namespace slicevol::eval {

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

// Predicts class 1 iff probability >= threshold.
ConfusionMatrix confusion(const ScoredCohort& cohort, double threshold);
ConfusionMatrix confusion(std::span<const double> probabilities, std::span<const int> labels,
                          double threshold);

// Zero-denominator ratios are reported as 0 and flagged.
struct PointMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool accuracy_undefined = false;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

PointMetrics point_metrics(const ConfusionMatrix& cm);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // lowest score predicted positive at this point
};

// Operating points from the (0, 0) corner to (1, 1), one per distinct score.
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels);

// Trapezoid area under the threshold sweep. Throws UndefinedMetricError on a
// single-class cohort.
double roc_auc(const ScoredCohort& cohort);
double roc_auc(std::span<const double> scores, std::span<const int> labels);

// Fraction of (positive, negative) pairs ranked correctly, ties counted 1/2.
double roc_auc_pairwise(std::span<const double> scores, std::span<const int> labels);

struct ThresholdChoice {
  double threshold = 0.5;
  double f1 = 0.0;
};

// F1-maximizing cut among {0, 1} and the midpoints between adjacent distinct
// probabilities; the lowest threshold wins ties.
ThresholdChoice select_threshold(const ScoredCohort& cohort);
std::vector<double> threshold_candidates(std::span<const double> probabilities);

enum class Metric { Accuracy, Precision, Recall, F1, RocAuc, TP, FP, TN, FN };

std::string_view metric_name(Metric metric);
Metric metric_from_name(std::string_view name);
inline constexpr Metric kAllMetrics[] = {Metric::Accuracy, Metric::Precision, Metric::Recall,
                                         Metric::F1,       Metric::RocAuc,    Metric::TP,
                                         Metric::FP,       Metric::TN,        Metric::FN};

double evaluate_metric(Metric metric, std::span<const double> probabilities,
                       std::span<const int> labels, double threshold);

}  // namespace slicevol::eval
