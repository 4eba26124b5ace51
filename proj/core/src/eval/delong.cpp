#include "slicevol/eval/delong.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <unordered_map>

#include "slicevol/errors.hpp"

namespace slicevol::eval {

std::vector<double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j - 1) + 1.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

double two_sided_p(double z) { return std::erfc(std::abs(z) / std::numbers::sqrt2); }

namespace {

// Structural components of one model's AUC: V10 over positives, V01 over negatives.
struct Placements {
  double auc = 0.0;
  std::vector<double> v10;
  std::vector<double> v01;
};

Placements placements(std::span<const double> pos, std::span<const double> neg) {
  const std::size_t m = pos.size(), n = neg.size();
  std::vector<double> all(pos.begin(), pos.end());
  all.insert(all.end(), neg.begin(), neg.end());
  const auto tz = midranks(all);
  const auto tx = midranks(pos);
  const auto ty = midranks(neg);
  Placements p;
  p.v10.resize(m);
  p.v01.resize(n);
  for (std::size_t i = 0; i < m; ++i) p.v10[i] = (tz[i] - tx[i]) / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) p.v01[j] = 1.0 - (tz[m + j] - ty[j]) / static_cast<double>(m);
  p.auc = std::accumulate(p.v10.begin(), p.v10.end(), 0.0) / static_cast<double>(m);
  return p;
}

double covariance(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
  return s / (n - 1.0);
}

void split_scores(const ScoredCohort& c, std::vector<double>& pos, std::vector<double>& neg) {
  for (const ScoredPatient& p : c.patients) (p.label == 1 ? pos : neg).push_back(p.probability);
}

void require_two_each(std::size_t m, std::size_t n) {
  if (m < 2 || n < 2) {
    throw UndefinedMetricError("DeLong variance needs at least two patients of each class");
  }
}

}  // namespace

double delong_variance(const ScoredCohort& cohort) {
  cohort.validate();
  std::vector<double> pos, neg;
  split_scores(cohort, pos, neg);
  require_two_each(pos.size(), neg.size());
  const Placements p = placements(pos, neg);
  return covariance(p.v10, p.v10) / static_cast<double>(pos.size()) +
         covariance(p.v01, p.v01) / static_cast<double>(neg.size());
}

DeLongResult delong_test(const ScoredCohort& a, const ScoredCohort& b) {
  a.validate();
  b.validate();
  if (a.size() != b.size()) throw ContractError("DeLong: cohorts cover different patients");
  std::unordered_map<std::string, std::size_t> where;
  for (std::size_t i = 0; i < b.size(); ++i) where.emplace(b.patients[i].id, i);

  std::vector<double> pos_a, neg_a, pos_b, neg_b;
  for (const ScoredPatient& p : a.patients) {
    const auto it = where.find(p.id);
    if (it == where.end()) throw ContractError("DeLong: patient " + p.id + " missing from second cohort");
    const ScoredPatient& q = b.patients[it->second];
    if (q.label != p.label) throw ContractError("DeLong: labels differ for patient " + p.id);
    (p.label == 1 ? pos_a : neg_a).push_back(p.probability);
    (p.label == 1 ? pos_b : neg_b).push_back(q.probability);
  }
  require_two_each(pos_a.size(), neg_a.size());
  const double m = static_cast<double>(pos_a.size());
  const double n = static_cast<double>(neg_a.size());

  const Placements pa = placements(pos_a, neg_a);
  const Placements pb = placements(pos_b, neg_b);
  const double var_a = covariance(pa.v10, pa.v10) / m + covariance(pa.v01, pa.v01) / n;
  const double var_b = covariance(pb.v10, pb.v10) / m + covariance(pb.v01, pb.v01) / n;
  const double cov = covariance(pa.v10, pb.v10) / m + covariance(pa.v01, pb.v01) / n;

  DeLongResult r;
  r.auc_a = pa.auc;
  r.auc_b = pb.auc;
  r.delta = pa.auc - pb.auc;
  r.variance = std::max(0.0, (var_a + var_b) - 2.0 * cov);
  if (r.variance > 0.0 && r.delta != 0.0) {
    r.z = r.delta / std::sqrt(r.variance);
    r.p_value = two_sided_p(r.z);
  }
  return r;
}

}  // namespace slicevol::eval
