#include <gtest/gtest.h>

#include <cstdio>
#include <string>

#include "slicevol/errors.hpp"
#include "slicevol/eval/cohort.hpp"
#include "slicevol/eval/metrics.hpp"
#include "slicevol/random.hpp"

using namespace slicevol;
using namespace slicevol::eval;

namespace {

std::string two_dp(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct TableColumn {
  const char* name;
  ConfusionMatrix cm;
  const char* accuracy;
  const char* precision;
  const char* recall;
  const char* f1;
};

// Confusion counts and printed two-decimal metrics, one entry per model column.
const TableColumn kTable[] = {
    {"baseline", {20, 12, 8, 14}, "0.52", "0.62", "0.59", "0.61"},
    {"ml_frozen", {31, 15, 5, 3}, "0.67", "0.67", "0.91", "0.78"},
    {"ce_finetuned", {15, 3, 17, 19}, "0.59", "0.83", "0.44", "0.58"},
    {"ml_finetuned", {21, 5, 15, 13}, "0.67", "0.81", "0.62", "0.70"},
};

ScoredCohort random_cohort(Rng& rng, std::size_t n, std::size_t levels) {
  std::vector<double> p(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = static_cast<double>(uniform_index(rng, levels)) / static_cast<double>(levels - 1);
    y[i] = static_cast<int>(uniform_index(rng, 2));
  }
  y[0] = 0;
  y[n - 1] = 1;
  return make_cohort(p, y);
}

}  // namespace

TEST(Confusion, Examples) {
  const ScoredCohort c = make_cohort({0.9, 0.2, 0.4, 0.7}, {1, 0, 1, 0});
  const ConfusionMatrix all = confusion(c, 0.0);
  EXPECT_EQ(all.fn, 0u);
  EXPECT_EQ(all.tn, 0u);
  const ConfusionMatrix none = confusion(c, 0.9 + 1e-9);
  EXPECT_EQ(none.tp, 0u);
  EXPECT_EQ(none.fp, 0u);
  const ConfusionMatrix two = confusion(make_cohort({0.9, 0.2}, {1, 0}), 0.5);
  EXPECT_EQ(two, (ConfusionMatrix{1, 0, 1, 0}));
  EXPECT_EQ(confusion(c, 0.5).total(), 4u);
  // the threshold itself counts as positive
  EXPECT_EQ(confusion(make_cohort({0.5}, {1}), 0.5).tp, 1u);
}

TEST(PointMetrics, TableColumnsRoundToPrintedValues) {
  for (const TableColumn& col : kTable) {
    const PointMetrics m = point_metrics(col.cm);
    EXPECT_EQ(two_dp(m.accuracy), col.accuracy) << col.name;
    EXPECT_EQ(two_dp(m.precision), col.precision) << col.name;
    EXPECT_EQ(two_dp(m.recall), col.recall) << col.name;
    EXPECT_EQ(two_dp(m.f1), col.f1) << col.name;
  }
}

TEST(PointMetrics, UnroundedValues) {
  const PointMetrics ft = point_metrics({21, 5, 15, 13});
  EXPECT_NEAR(ft.precision, 21.0 / 26.0, 1e-15);
  EXPECT_NEAR(ft.recall, 21.0 / 34.0, 1e-15);
  EXPECT_NEAR(ft.accuracy, 36.0 / 54.0, 1e-15);
  EXPECT_NEAR(ft.f1, 0.7, 1e-15);
  const PointMetrics perfect = point_metrics({10, 0, 0, 0});
  EXPECT_EQ(perfect.accuracy, 1.0);
  EXPECT_EQ(perfect.precision, 1.0);
  EXPECT_EQ(perfect.recall, 1.0);
  EXPECT_EQ(perfect.f1, 1.0);
}

TEST(PointMetrics, UndefinedRatiosAreFlagged) {
  const PointMetrics m = point_metrics({0, 0, 5, 0});
  EXPECT_TRUE(m.precision_undefined);
  EXPECT_TRUE(m.recall_undefined);
  EXPECT_TRUE(m.f1_undefined);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.f1, 0.0);
  EXPECT_FALSE(m.accuracy_undefined);
  EXPECT_TRUE(point_metrics({}).accuracy_undefined);
}

TEST(RocAuc, Examples) {
  EXPECT_EQ(roc_auc(make_cohort({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1})), 1.0);
  EXPECT_EQ(roc_auc(make_cohort({0.4, 0.4, 0.4, 0.4}, {0, 1, 0, 1})), 0.5);
  EXPECT_EQ(roc_auc(make_cohort({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1})), 0.75);
  EXPECT_THROW(roc_auc(make_cohort({0.1, 0.4}, {1, 1})), UndefinedMetricError);
}

TEST(RocAuc, TrapezoidMatchesPairwise) {
  Rng rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 60);
    const ScoredCohort c = random_cohort(rng, n, 2 + uniform_index(rng, 12));
    EXPECT_NEAR(roc_auc(c), roc_auc_pairwise(c.probabilities(), c.labels()), 1e-12);
  }
}

TEST(RocAuc, ComplementAndLabelFlip) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const ScoredCohort c = random_cohort(rng, 30, 7);
    ScoredCohort both = c, labels_only = c;
    for (auto& p : both.patients) {
      p.probability = 1.0 - p.probability;
      p.label = 1 - p.label;
    }
    for (auto& p : labels_only.patients) p.label = 1 - p.label;
    const double auc = roc_auc(c);
    EXPECT_NEAR(roc_auc(both), auc, 1e-12);
    EXPECT_NEAR(roc_auc(labels_only), 1.0 - auc, 1e-12);
  }
}

TEST(RocCurve, EndsAtCorners) {
  const auto pts = roc_curve(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1});
  EXPECT_EQ(pts.front().fpr, 0.0);
  EXPECT_EQ(pts.front().tpr, 0.0);
  EXPECT_EQ(pts.back().fpr, 1.0);
  EXPECT_EQ(pts.back().tpr, 1.0);
  EXPECT_EQ(pts.size(), 5u);
}

TEST(SelectThreshold, Examples) {
  const ThresholdChoice a = select_threshold(make_cohort({0.2, 0.6, 0.8}, {0, 1, 1}));
  EXPECT_DOUBLE_EQ(a.threshold, 0.4);
  EXPECT_EQ(a.f1, 1.0);

  const ThresholdChoice sep = select_threshold(make_cohort({0.1, 0.3, 0.7, 0.9}, {0, 0, 1, 1}));
  EXPECT_DOUBLE_EQ(sep.threshold, 0.5);

  const ThresholdChoice flat = select_threshold(make_cohort({0.6, 0.6, 0.6}, {0, 1, 1}));
  EXPECT_LE(flat.threshold, 0.6);
  EXPECT_NEAR(flat.f1, 0.8, 1e-12);

  EXPECT_THROW(select_threshold(make_cohort({0.2, 0.6}, {1, 1})), UndefinedMetricError);
}

TEST(SelectThreshold, BeatsEveryProbedThreshold) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const ScoredCohort c = random_cohort(rng, 25, 9);
    const ThresholdChoice best = select_threshold(c);
    for (int k = 0; k <= 200; ++k) {
      const double t = k / 200.0;
      EXPECT_GE(best.f1, point_metrics(confusion(c, t)).f1);
    }
  }
}

TEST(Metric, NamesRoundTrip) {
  for (Metric m : kAllMetrics) EXPECT_EQ(metric_from_name(metric_name(m)), m);
  EXPECT_THROW(metric_from_name("auc"), ParameterError);
}

TEST(Cohort, ParsingFormats) {
  const ScoredCohort c = make_cohort({0.25, 0.75}, {0, 1});
  EXPECT_EQ(parse_cohort(cohort_to_jsonl(c)), c);
  EXPECT_EQ(parse_cohort("id,probability,label\np0,0.25,0\np1,0.75,1\n"), c);
  EXPECT_EQ(parse_cohort("p0\t0.25\t0\np1 0.75 1\n"), c);
  EXPECT_THROW(parse_cohort("p0,1.5,0\n"), ContractError);
  EXPECT_THROW(parse_cohort("p0,0.5,0\np0,0.5,1\n"), ContractError);
}
