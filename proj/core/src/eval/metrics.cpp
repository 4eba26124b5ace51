#include "slicevol/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "slicevol/errors.hpp"

namespace slicevol::eval {

namespace {

void require_paired(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ContractError("scores and labels differ in length");
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const int> labels) {
  std::size_t pos = 0;
  for (int y : labels) pos += y == 1;
  return {pos, labels.size() - pos};
}

double ratio(std::size_t num, std::size_t den, bool& undefined) {
  undefined = den == 0;
  return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionMatrix confusion(std::span<const double> probabilities, std::span<const int> labels,
                          double threshold) {
  require_paired(probabilities, labels);
  if (!std::isfinite(threshold)) throw ContractError("threshold must be finite");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted = probabilities[i] >= threshold;
    if (labels[i] == 1) {
      predicted ? ++cm.tp : ++cm.fn;
    } else {
      predicted ? ++cm.fp : ++cm.tn;
    }
  }
  return cm;
}

ConfusionMatrix confusion(const ScoredCohort& cohort, double threshold) {
  return confusion(cohort.probabilities(), cohort.labels(), threshold);
}

PointMetrics point_metrics(const ConfusionMatrix& cm) {
  PointMetrics m;
  m.accuracy = ratio(cm.tp + cm.tn, cm.total(), m.accuracy_undefined);
  m.precision = ratio(cm.tp, cm.tp + cm.fp, m.precision_undefined);
  m.recall = ratio(cm.tp, cm.tp + cm.fn, m.recall_undefined);
  // 2TP / (2TP + FP + FN) equals the harmonic mean but is one correctly
  // rounded division, which matters when the value sits on a display tie.
  m.f1_undefined = m.precision_undefined || m.recall_undefined || cm.tp == 0;
  m.f1 = m.f1_undefined ? 0.0
                        : static_cast<double>(2 * cm.tp) / static_cast<double>(2 * cm.tp + cm.fp + cm.fn);
  return m;
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels) {
  require_paired(scores, labels);
  const auto [pos, neg] = class_counts(labels);
  if (pos == 0 || neg == 0) throw UndefinedMetricError("ROC needs both classes present");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<RocPoint> pts{{0.0, 0.0, INFINITY}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double s = scores[order[k]];
    for (; k < order.size() && scores[order[k]] == s; ++k) labels[order[k]] == 1 ? ++tp : ++fp;
    pts.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                   static_cast<double>(tp) / static_cast<double>(pos), s});
  }
  return pts;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  require_paired(scores, labels);
  const auto [pos, neg] = class_counts(labels);
  if (pos == 0 || neg == 0) throw UndefinedMetricError("ROC-AUC needs both classes present");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  // Sweep the threshold down through the distinct scores; each step moves the
  // operating point by (dfp, dtp) and adds the trapezoid under that segment.
  // Areas are kept in count units (multiples of 1/2) so the sum is exact.
  double area = 0.0;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double s = scores[order[k]];
    std::size_t dtp = 0, dfp = 0;
    for (; k < order.size() && scores[order[k]] == s; ++k) labels[order[k]] == 1 ? ++dtp : ++dfp;
    area += static_cast<double>(dfp) * (static_cast<double>(tp) + 0.5 * static_cast<double>(dtp));
    tp += dtp;
  }
  return area / (static_cast<double>(pos) * static_cast<double>(neg));
}

double roc_auc(const ScoredCohort& cohort) { return roc_auc(cohort.probabilities(), cohort.labels()); }

double roc_auc_pairwise(std::span<const double> scores, std::span<const int> labels) {
  require_paired(scores, labels);
  const auto [pos, neg] = class_counts(labels);
  if (pos == 0 || neg == 0) throw UndefinedMetricError("ROC-AUC needs both classes present");
  double wins = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / (static_cast<double>(pos) * static_cast<double>(neg));
}

std::vector<double> threshold_candidates(std::span<const double> probabilities) {
  std::vector<double> u(probabilities.begin(), probabilities.end());
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  std::vector<double> c{0.0};
  for (std::size_t i = 0; i + 1 < u.size(); ++i) c.push_back(0.5 * (u[i] + u[i + 1]));
  c.push_back(1.0);
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

ThresholdChoice select_threshold(const ScoredCohort& cohort) {
  cohort.validate();
  if (!cohort.has_both_classes()) throw UndefinedMetricError("threshold selection needs both classes");
  const auto probs = cohort.probabilities();
  const auto labels = cohort.labels();
  ThresholdChoice best{0.0, -1.0};
  for (double t : threshold_candidates(probs)) {
    const double f1 = point_metrics(confusion(probs, labels, t)).f1;
    if (f1 > best.f1) best = {t, f1};
  }
  return best;
}

std::string_view metric_name(Metric metric) {
  switch (metric) {
    case Metric::Accuracy: return "accuracy";
    case Metric::Precision: return "precision";
    case Metric::Recall: return "recall";
    case Metric::F1: return "f1";
    case Metric::RocAuc: return "roc_auc";
    case Metric::TP: return "tp";
    case Metric::FP: return "fp";
    case Metric::TN: return "tn";
    case Metric::FN: return "fn";
  }
  return "?";
}

Metric metric_from_name(std::string_view name) {
  for (Metric m : kAllMetrics) {
    if (metric_name(m) == name) return m;
  }
  throw ParameterError("unknown metric '" + std::string(name) + "'");
}

double evaluate_metric(Metric metric, std::span<const double> probabilities,
                       std::span<const int> labels, double threshold) {
  if (metric == Metric::RocAuc) return roc_auc(probabilities, labels);
  const ConfusionMatrix cm = confusion(probabilities, labels, threshold);
  const PointMetrics pm = point_metrics(cm);
  switch (metric) {
    case Metric::Accuracy: return pm.accuracy;
    case Metric::Precision: return pm.precision;
    case Metric::Recall: return pm.recall;
    case Metric::F1: return pm.f1;
    case Metric::TP: return static_cast<double>(cm.tp);
    case Metric::FP: return static_cast<double>(cm.fp);
    case Metric::TN: return static_cast<double>(cm.tn);
    case Metric::FN: return static_cast<double>(cm.fn);
    case Metric::RocAuc: break;
  }
  return 0.0;
}

}  // namespace slicevol::eval
