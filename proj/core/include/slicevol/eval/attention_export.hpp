#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "slicevol/aggregate/volume_aggregator.hpp"

namespace slicevol::eval {

struct PatientAttention {
  std::string id;
  aggregate::AttentionRecord record;
};

struct AttentionSummary {
  std::string id;
  std::vector<double> weights;
  double entropy = 0.0;  // natural log, 0 log 0 = 0
  std::size_t max_index = 0;  // first maximum
};

// Re-validates every record (sum to 1 within 1e-9) and summarizes it.
std::vector<AttentionSummary> export_attention(std::span<const PatientAttention> records);

double attention_entropy(std::span<const double> weights);

}  // namespace slicevol::eval
