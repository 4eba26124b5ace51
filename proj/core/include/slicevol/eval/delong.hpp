#pragma once

#include <span>
#include <vector>

#include "slicevol/eval/cohort.hpp"

namespace slicevol::eval {

struct DeLongResult {
  double auc_a = 0.0;
  double auc_b = 0.0;
  double delta = 0.0;     // auc_a - auc_b
  double variance = 0.0;  // of the difference
  double z = 0.0;
  double p_value = 1.0;   // two-sided
};

// Paired comparison of two models scored on the same patients. Patients are
// matched by id; differing id sets or labels raise ContractError. A zero
// variance gives z = 0 and p = 1.
DeLongResult delong_test(const ScoredCohort& a, const ScoredCohort& b);

// DeLong variance estimate of a single AUC.
double delong_variance(const ScoredCohort& cohort);

// Average ranks (1-based) with ties sharing the mean of their positions.
std::vector<double> midranks(std::span<const double> values);

// 2 * (1 - Phi(|z|))
double two_sided_p(double z);

}  // namespace slicevol::eval
