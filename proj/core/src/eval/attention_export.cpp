#include "slicevol/eval/attention_export.hpp"

#include <cmath>

namespace slicevol::eval {

double attention_entropy(std::span<const double> weights) {
  double h = 0.0;
  for (double w : weights) {
    if (w > 0.0) h -= w * std::log(w);
  }
  return h;
}

std::vector<AttentionSummary> export_attention(std::span<const PatientAttention> records) {
  std::vector<AttentionSummary> out;
  out.reserve(records.size());
  for (const PatientAttention& r : records) {
    r.record.validate(1e-9);
    AttentionSummary s;
    s.id = r.id;
    s.weights = r.record.weights;
    s.entropy = attention_entropy(s.weights);
    for (std::size_t i = 1; i < s.weights.size(); ++i) {
      if (s.weights[i] > s.weights[s.max_index]) s.max_index = i;
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace slicevol::eval
