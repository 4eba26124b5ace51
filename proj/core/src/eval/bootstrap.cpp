#include "slicevol/eval/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "slicevol/errors.hpp"
#include "slicevol/random.hpp"

namespace slicevol::eval {

void BootstrapConfig::validate() const {
  if (resamples < 100) throw ParameterError("bootstrap needs at least 100 resamples");
  if (!(level > 0.0 && level < 1.0)) throw ParameterError("confidence level must be in (0, 1)");
}

double percentile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ContractError("percentile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  // Equal neighbours give their common value exactly.
  if (sorted[lo] == sorted[hi]) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Interval percentile_interval(std::vector<double> values, double level) {
  std::sort(values.begin(), values.end());
  const double tail = 0.5 * (1.0 - level);
  return {percentile(values, 0.5), percentile(values, tail), percentile(values, 1.0 - tail)};
}

std::vector<std::size_t> stratified_resample(std::span<const int> labels, std::uint64_t seed,
                                             std::size_t index) {
  std::vector<std::size_t> members[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw ContractError("labels must be 0 or 1");
    members[labels[i]].push_back(i);
  }
  if (members[0].empty() || members[1].empty()) {
    throw ContractError("stratified bootstrap needs both classes present");
  }
  Rng rng(substream_seed(seed, index));
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (const auto& cls : members) {
    for (std::size_t k = 0; k < cls.size(); ++k) out.push_back(cls[uniform_index(rng, cls.size())]);
  }
  return out;
}

namespace {

struct Gathered {
  std::vector<double> probs;
  std::vector<int> labels;
};

void gather(std::span<const double> probs, std::span<const int> labels,
            std::span<const std::size_t> idx, Gathered& out) {
  out.probs.resize(idx.size());
  out.labels.resize(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.probs[k] = probs[idx[k]];
    out.labels[k] = labels[idx[k]];
  }
}

MetricBootstrap summarize(Metric metric, double observed, std::vector<double> replicates,
                          double level) {
  MetricBootstrap r;
  r.metric = metric;
  r.observed = observed;
  r.ci = percentile_interval(replicates, level);
  r.replicates = std::move(replicates);
  return r;
}

}  // namespace

MetricBootstrap bootstrap_metric(const ScoredCohort& cohort, Metric metric, double threshold,
                                 const BootstrapConfig& cfg) {
  cfg.validate();
  cohort.validate();
  const auto probs = cohort.probabilities();
  const auto labels = cohort.labels();
  std::vector<double> reps(cfg.resamples);
  Gathered g;
  for (std::size_t b = 0; b < cfg.resamples; ++b) {
    gather(probs, labels, stratified_resample(labels, cfg.seed, b), g);
    reps[b] = evaluate_metric(metric, g.probs, g.labels, threshold);
  }
  return summarize(metric, evaluate_metric(metric, probs, labels, threshold), std::move(reps),
                   cfg.level);
}

PairedBootstrap paired_bootstrap(const ScoredCohort& a, const ScoredCohort& b, Metric metric,
                                 double threshold_a, double threshold_b,
                                 const BootstrapConfig& cfg) {
  cfg.validate();
  a.validate();
  b.validate();
  if (a.size() != b.size()) throw ContractError("paired bootstrap: cohorts cover different patients");
  std::unordered_map<std::string, std::size_t> where;
  for (std::size_t i = 0; i < b.size(); ++i) where.emplace(b.patients[i].id, i);
  const auto probs_a = a.probabilities();
  const auto labels = a.labels();
  std::vector<double> probs_b(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto it = where.find(a.patients[i].id);
    if (it == where.end()) {
      throw ContractError("paired bootstrap: patient " + a.patients[i].id + " missing from second cohort");
    }
    if (b.patients[it->second].label != labels[i]) {
      throw ContractError("paired bootstrap: labels differ for patient " + a.patients[i].id);
    }
    probs_b[i] = b.patients[it->second].probability;
  }

  std::vector<double> ra(cfg.resamples), rb(cfg.resamples), rd(cfg.resamples);
  std::size_t le = 0, ge = 0;
  Gathered ga, gb;
  for (std::size_t k = 0; k < cfg.resamples; ++k) {
    const auto idx = stratified_resample(labels, cfg.seed, k);
    gather(probs_a, labels, idx, ga);
    gather(probs_b, labels, idx, gb);
    ra[k] = evaluate_metric(metric, ga.probs, ga.labels, threshold_a);
    rb[k] = evaluate_metric(metric, gb.probs, gb.labels, threshold_b);
    rd[k] = ra[k] - rb[k];
    le += rd[k] <= 0.0;
    ge += rd[k] >= 0.0;
  }
  PairedBootstrap r;
  r.metric = metric;
  r.a = summarize(metric, evaluate_metric(metric, probs_a, labels, threshold_a), std::move(ra), cfg.level);
  r.b = summarize(metric, evaluate_metric(metric, probs_b, labels, threshold_b), std::move(rb), cfg.level);
  r.observed_diff = r.a.observed - r.b.observed;
  r.diff = percentile_interval(rd, cfg.level);
  const double denom = static_cast<double>(cfg.resamples + 1);
  const double tail = std::min(static_cast<double>(le + 1) / denom, static_cast<double>(ge + 1) / denom);
  r.p_value = std::min(1.0, 2.0 * tail);
  return r;
}

}  // namespace slicevol::eval
