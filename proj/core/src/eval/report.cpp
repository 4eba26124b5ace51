#include "slicevol/eval/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <json.hpp>

#include "io/blob_file.hpp"
#include "slicevol/errors.hpp"

namespace slicevol::eval {

using nlohmann::json;

void EvalConfig::validate() const {
  BootstrapConfig{bootstrap_resamples, bootstrap_seed, confidence_level}.validate();
  if (reliability_bins < 2) throw ParameterError("reliability_bins must be at least 2");
  if (!(low_band >= 0.0 && low_band <= high_band)) {
    throw ParameterError("confidence bands need 0 <= low_band <= high_band");
  }
}

const MetricEntry& ModelReport::at(Metric metric) const {
  for (const MetricEntry& e : metrics) {
    if (e.metric == metric) return e;
  }
  throw ContractError("report has no entry for " + std::string(metric_name(metric)));
}

void MetricsReport::validate() const {
  auto check = [](const Interval& ci, std::string_view what) {
    if (!(ci.low <= ci.point && ci.point <= ci.high)) {
      throw ContractError("interval for " + std::string(what) + " is not ordered");
    }
  };
  for (const ModelReport* m : {&model, baseline ? &*baseline : nullptr}) {
    if (m == nullptr) continue;
    for (const MetricEntry& e : m->metrics) check(e.ci, metric_name(e.metric));
    if (m->confusion.total() != n_patients) throw ContractError("confusion matrix does not cover the cohort");
  }
  for (const Comparison& c : comparisons) {
    for (const ComparisonEntry& e : c.metrics) check(e.diff, metric_name(e.metric));
  }
  std::size_t binned = 0;
  for (const CalibrationBin& b : calibration) binned += b.n;
  if (!calibration.empty() && binned != n_patients) throw ContractError("calibration bins do not partition the cohort");
  if (buckets.total() != 0 && buckets.total() != n_patients) {
    throw ContractError("confidence buckets do not partition the cohort");
  }
}

namespace {

ModelReport model_report(const ModelScores& s, const EvalConfig& cfg) {
  ModelReport r;
  r.name = s.name;
  const ThresholdChoice t = select_threshold(s.validation);
  r.threshold = t.threshold;
  r.validation_f1 = t.f1;
  r.confusion = confusion(s.evaluation, t.threshold);
  r.point = point_metrics(r.confusion);
  const BootstrapConfig bc{cfg.bootstrap_resamples, cfg.bootstrap_seed, cfg.confidence_level};
  for (Metric m : kAllMetrics) {
    const MetricBootstrap b = bootstrap_metric(s.evaluation, m, t.threshold, bc);
    r.metrics.push_back({m, b.observed, b.ci});
  }
  return r;
}

}  // namespace

MetricsReport build_report(const ModelScores& model, const std::optional<ModelScores>& baseline,
                           std::span<const PatientAttention> attention, std::string split,
                           const EvalConfig& cfg) {
  cfg.validate();
  const ScoredCohort& cohort = model.evaluation;
  cohort.validate();
  if (!cohort.has_both_classes()) throw UndefinedMetricError("evaluation split needs both classes");

  MetricsReport r;
  r.split = std::move(split);
  r.n_patients = cohort.size();
  r.positives = cohort.positives();
  r.config = cfg;
  r.model = model_report(model, cfg);
  if (baseline) {
    r.baseline = model_report(*baseline, cfg);
    Comparison c;
    c.model = model.name;
    c.baseline = baseline->name;
    c.delong = delong_test(cohort, baseline->evaluation);
    const BootstrapConfig bc{cfg.bootstrap_resamples, cfg.bootstrap_seed, cfg.confidence_level};
    for (Metric m : {Metric::Accuracy, Metric::Precision, Metric::Recall, Metric::F1, Metric::RocAuc}) {
      const PairedBootstrap pb = paired_bootstrap(cohort, baseline->evaluation, m, r.model.threshold,
                                                  r.baseline->threshold, bc);
      c.metrics.push_back({m, pb.observed_diff, pb.diff, pb.p_value});
    }
    r.comparisons.push_back(std::move(c));
  }
  r.calibration = reliability_bins(cohort, cfg.reliability_bins);
  r.buckets = confidence_buckets(cohort, r.model.threshold, cfg.low_band, cfg.high_band);
  r.attention = export_attention(attention);
  r.validate();
  return r;
}

double round_significant(double value, int digits) {
  if (value == 0.0 || !std::isfinite(value)) return value;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  return std::strtod(buf, nullptr);
}

namespace {

double r6(double v) { return round_significant(v, 6); }

json interval_json(const Interval& ci) {
  return {{"point", r6(ci.point)}, {"low", r6(ci.low)}, {"high", r6(ci.high)}};
}

Interval interval_from(const json& j) {
  return {j.at("point").get<double>(), j.at("low").get<double>(), j.at("high").get<double>()};
}

json model_json(const ModelReport& m) {
  json metrics = json::object();
  for (const MetricEntry& e : m.metrics) {
    json entry = interval_json(e.ci);
    entry["observed"] = r6(e.observed);
    metrics[std::string(metric_name(e.metric))] = entry;
  }
  return {{"name", m.name},
          {"threshold", r6(m.threshold)},
          {"validation_f1", r6(m.validation_f1)},
          {"confusion", {{"tp", m.confusion.tp}, {"fp", m.confusion.fp}, {"tn", m.confusion.tn}, {"fn", m.confusion.fn}}},
          {"undefined",
           {{"accuracy", m.point.accuracy_undefined},
            {"precision", m.point.precision_undefined},
            {"recall", m.point.recall_undefined},
            {"f1", m.point.f1_undefined}}},
          {"metrics", metrics}};
}

ModelReport model_from(const json& j) {
  ModelReport m;
  m.name = j.at("name").get<std::string>();
  m.threshold = j.at("threshold").get<double>();
  m.validation_f1 = j.at("validation_f1").get<double>();
  const json& c = j.at("confusion");
  m.confusion = {c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(),
                 c.at("tn").get<std::size_t>(), c.at("fn").get<std::size_t>()};
  m.point = point_metrics(m.confusion);
  for (const auto& [name, e] : j.at("metrics").items()) {
    m.metrics.push_back({metric_from_name(name), e.at("observed").get<double>(), interval_from(e)});
  }
  // JSON objects come back key-sorted; restore the canonical order.
  std::vector<MetricEntry> ordered;
  for (Metric k : kAllMetrics) {
    for (const MetricEntry& e : m.metrics) {
      if (e.metric == k) ordered.push_back(e);
    }
  }
  m.metrics = std::move(ordered);
  return m;
}

json nullable(double v, std::size_t n) { return n == 0 ? json(nullptr) : json(r6(v)); }

}  // namespace

std::string report_to_json(const MetricsReport& r) {
  json comparisons = json::array();
  for (const Comparison& c : r.comparisons) {
    json metrics = json::array();
    for (const ComparisonEntry& e : c.metrics) {
      metrics.push_back({{"metric", metric_name(e.metric)},
                         {"observed_diff", r6(e.observed_diff)},
                         {"diff", interval_json(e.diff)},
                         {"p_value", r6(e.p_value)}});
    }
    comparisons.push_back({{"model", c.model},
                           {"baseline", c.baseline},
                           {"delong",
                            {{"auc_model", r6(c.delong.auc_a)},
                             {"auc_baseline", r6(c.delong.auc_b)},
                             {"delta", r6(c.delong.delta)},
                             {"variance", r6(c.delong.variance)},
                             {"z", r6(c.delong.z)},
                             {"p_value", r6(c.delong.p_value)}}},
                           {"paired_bootstrap", metrics}});
  }
  json bins = json::array();
  for (const CalibrationBin& b : r.calibration) {
    bins.push_back({{"low", r6(b.low)},
                    {"high", r6(b.high)},
                    {"n", b.n},
                    {"mean_predicted", nullable(b.mean_predicted, b.n)},
                    {"observed_fraction", nullable(b.observed_fraction, b.n)}});
  }
  json attention = json::array();
  for (const AttentionSummary& a : r.attention) {
    std::vector<double> w;
    for (double x : a.weights) w.push_back(r6(x));
    attention.push_back({{"id", a.id}, {"weights", w}, {"entropy", r6(a.entropy)}, {"max_index", a.max_index}});
  }
  const EvalConfig& cfg = r.config;
  json j = {
      {"format", "slicevol-metrics"},
      {"version", 1},
      {"split", r.split},
      {"n_patients", r.n_patients},
      {"positives", r.positives},
      {"config",
       {{"bootstrap_resamples", cfg.bootstrap_resamples},
        {"bootstrap_seed", cfg.bootstrap_seed},
        {"confidence_level", r6(cfg.confidence_level)},
        {"reliability_bins", cfg.reliability_bins},
        {"low_band", r6(cfg.low_band)},
        {"high_band", r6(cfg.high_band)}}},
      {"interval_note", "point = bootstrap median, low/high = percentile bounds; observed = full cohort"},
      {"model", model_json(r.model)},
      {"baseline", r.baseline ? model_json(*r.baseline) : json(nullptr)},
      {"comparisons", comparisons},
      {"calibration", bins},
      {"confidence_buckets",
       {{"uncertain_correct", r.buckets.uncertain_correct},
        {"uncertain_wrong", r.buckets.uncertain_wrong},
        {"confident_correct", r.buckets.confident_correct},
        {"confident_wrong", r.buckets.confident_wrong},
        {"mid_band", r.buckets.mid_band}}},
      {"attention", attention}};
  return j.dump(2) + "\n";
}

MetricsReport report_from_json(std::string_view text) {
  MetricsReport r;
  try {
    const json j = json::parse(text);
    if (j.at("format") != "slicevol-metrics") throw HeaderError("not a metrics report");
    r.split = j.at("split").get<std::string>();
    r.n_patients = j.at("n_patients").get<std::size_t>();
    r.positives = j.at("positives").get<std::size_t>();
    const json& c = j.at("config");
    r.config.bootstrap_resamples = c.at("bootstrap_resamples").get<std::size_t>();
    r.config.bootstrap_seed = c.at("bootstrap_seed").get<std::uint64_t>();
    r.config.confidence_level = c.at("confidence_level").get<double>();
    r.config.reliability_bins = c.at("reliability_bins").get<std::size_t>();
    r.config.low_band = c.at("low_band").get<double>();
    r.config.high_band = c.at("high_band").get<double>();
    r.model = model_from(j.at("model"));
    if (!j.at("baseline").is_null()) r.baseline = model_from(j.at("baseline"));
    for (const json& cj : j.at("comparisons")) {
      Comparison cmp;
      cmp.model = cj.at("model").get<std::string>();
      cmp.baseline = cj.at("baseline").get<std::string>();
      const json& d = cj.at("delong");
      cmp.delong = {d.at("auc_model").get<double>(), d.at("auc_baseline").get<double>(),
                    d.at("delta").get<double>(),     d.at("variance").get<double>(),
                    d.at("z").get<double>(),         d.at("p_value").get<double>()};
      for (const json& e : cj.at("paired_bootstrap")) {
        cmp.metrics.push_back({metric_from_name(e.at("metric").get<std::string>()),
                               e.at("observed_diff").get<double>(), interval_from(e.at("diff")),
                               e.at("p_value").get<double>()});
      }
      r.comparisons.push_back(std::move(cmp));
    }
    for (const json& b : j.at("calibration")) {
      CalibrationBin bin;
      bin.low = b.at("low").get<double>();
      bin.high = b.at("high").get<double>();
      bin.n = b.at("n").get<std::size_t>();
      if (bin.n > 0) {
        bin.mean_predicted = b.at("mean_predicted").get<double>();
        bin.observed_fraction = b.at("observed_fraction").get<double>();
      }
      r.calibration.push_back(bin);
    }
    const json& bk = j.at("confidence_buckets");
    r.buckets.uncertain_correct = bk.at("uncertain_correct").get<std::vector<std::string>>();
    r.buckets.uncertain_wrong = bk.at("uncertain_wrong").get<std::vector<std::string>>();
    r.buckets.confident_correct = bk.at("confident_correct").get<std::vector<std::string>>();
    r.buckets.confident_wrong = bk.at("confident_wrong").get<std::vector<std::string>>();
    r.buckets.mid_band = bk.at("mid_band").get<std::vector<std::string>>();
    for (const json& a : j.at("attention")) {
      r.attention.push_back({a.at("id").get<std::string>(), a.at("weights").get<std::vector<double>>(),
                             a.at("entropy").get<double>(), a.at("max_index").get<std::size_t>()});
    }
  } catch (const json::exception& e) {
    throw HeaderError(std::string("metrics report: ") + e.what());
  }
  return r;
}

void write_report(const std::filesystem::path& path, const MetricsReport& report) {
  io::write_file(path, report_to_json(report));
}

MetricsReport read_report(const std::filesystem::path& path) {
  return report_from_json(io::read_file(path));
}

namespace {

std::string fmt2(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void model_table(std::string& out, const ModelReport& m) {
  out += "model " + m.name + "  threshold " + fmt2(m.threshold) + "\n";
  const ConfusionMatrix& cm = m.confusion;
  out += "  TP " + std::to_string(cm.tp) + "  FP " + std::to_string(cm.fp) + "  TN " +
         std::to_string(cm.tn) + "  FN " + std::to_string(cm.fn) + "  (observed counts)\n";
  char line[160];
  std::snprintf(line, sizeof line, "  %-10s %9s %8s  %s\n", "metric", "observed", "median", "95% CI");
  out += line;
  for (const MetricEntry& e : m.metrics) {
    std::snprintf(line, sizeof line, "  %-10s %9s %8s  [%s, %s]\n",
                  std::string(metric_name(e.metric)).c_str(), fmt2(e.observed).c_str(),
                  fmt2(e.ci.point).c_str(), fmt2(e.ci.low).c_str(), fmt2(e.ci.high).c_str());
    out += line;
  }
}

}  // namespace

std::string render_summary(const MetricsReport& r) {
  std::string out = "split " + r.split + ": " + std::to_string(r.n_patients) + " patients, " +
                    std::to_string(r.positives) + " positive\n\n";
  model_table(out, r.model);
  if (r.baseline) {
    out += "\n";
    model_table(out, *r.baseline);
  }
  for (const Comparison& c : r.comparisons) {
    out += "\n" + c.model + " vs " + c.baseline + "\n";
    out += "  DeLong: AUC " + fmt2(c.delong.auc_a) + " vs " + fmt2(c.delong.auc_b) + ", z " +
           fmt2(c.delong.z) + ", p " + fmt2(c.delong.p_value) + "\n";
    for (const ComparisonEntry& e : c.metrics) {
      out += "  " + std::string(metric_name(e.metric)) + " diff " + fmt2(e.observed_diff) + " [" +
             fmt2(e.diff.low) + ", " + fmt2(e.diff.high) + "], p " + fmt2(e.p_value) + "\n";
    }
  }
  if (!r.calibration.empty()) {
    out += "\nreliability\n";
    for (const CalibrationBin& b : r.calibration) {
      out += "  [" + fmt2(b.low) + ", " + fmt2(b.high) + "] " + format_bin(b) + "\n";
    }
  }
  const ConfidenceBuckets& k = r.buckets;
  out += "\nconfidence buckets: uncertain-correct " + std::to_string(k.uncertain_correct.size()) +
         ", uncertain-wrong " + std::to_string(k.uncertain_wrong.size()) + ", confident-correct " +
         std::to_string(k.confident_correct.size()) + ", confident-wrong " +
         std::to_string(k.confident_wrong.size()) + ", mid-band " + std::to_string(k.mid_band.size()) + "\n";
  return out;
}

std::string render_confusion_summary(const ConfusionMatrix& cm) {
  const PointMetrics m = point_metrics(cm);
  return "TP " + std::to_string(cm.tp) + "  FP " + std::to_string(cm.fp) + "  TN " +
         std::to_string(cm.tn) + "  FN " + std::to_string(cm.fn) + "\n" + "precision " +
         fmt2(m.precision) + "  recall " + fmt2(m.recall) + "  f1 " + fmt2(m.f1) + "  accuracy " +
         fmt2(m.accuracy) + "\n";
}

}  // namespace slicevol::eval
