#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace slicevol::eval {

struct ScoredPatient {
  std::string id;
  double probability = 0.0;  // P(class 1)
  int label = 0;

  bool operator==(const ScoredPatient&) const = default;
};

struct ScoredCohort {
  std::vector<ScoredPatient> patients;

  std::size_t size() const { return patients.size(); }
  std::size_t positives() const;
  std::size_t negatives() const { return size() - positives(); }
  bool has_both_classes() const { return positives() > 0 && negatives() > 0; }
  std::vector<double> probabilities() const;
  std::vector<int> labels() const;

  // Probabilities finite in [0, 1], labels in {0, 1}, unique ids.
  void validate() const;

  bool operator==(const ScoredCohort&) const = default;
};

ScoredCohort make_cohort(const std::vector<double>& probabilities, const std::vector<int>& labels);

// One JSON object per line: {"id": ..., "probability": ..., "label": ...}.
std::string cohort_to_jsonl(const ScoredCohort& cohort);
// Accepts JSON lines or delimited text (id,probability,label; comma, tab or
// whitespace separated, optional header line).
ScoredCohort parse_cohort(std::string_view text);

void write_cohort(const std::filesystem::path& path, const ScoredCohort& cohort);
ScoredCohort read_cohort(const std::filesystem::path& path);

}  // namespace slicevol::eval
