#include "slicevol/eval/cohort.hpp"

#include <charconv>
#include <cmath>
#include <json.hpp>
#include <set>
#include <sstream>

#include "io/blob_file.hpp"
#include "slicevol/errors.hpp"

namespace slicevol::eval {

std::size_t ScoredCohort::positives() const {
  std::size_t n = 0;
  for (const ScoredPatient& p : patients) n += p.label == 1;
  return n;
}

std::vector<double> ScoredCohort::probabilities() const {
  std::vector<double> out;
  out.reserve(patients.size());
  for (const ScoredPatient& p : patients) out.push_back(p.probability);
  return out;
}

std::vector<int> ScoredCohort::labels() const {
  std::vector<int> out;
  out.reserve(patients.size());
  for (const ScoredPatient& p : patients) out.push_back(p.label);
  return out;
}

void ScoredCohort::validate() const {
  std::set<std::string_view> ids;
  for (const ScoredPatient& p : patients) {
    if (!std::isfinite(p.probability) || p.probability < 0.0 || p.probability > 1.0) {
      throw ContractError("patient " + p.id + ": probability outside [0, 1]");
    }
    if (p.label != 0 && p.label != 1) throw ContractError("patient " + p.id + ": label not 0/1");
    if (!ids.insert(p.id).second) throw ContractError("duplicate patient id " + p.id);
  }
}

ScoredCohort make_cohort(const std::vector<double>& probabilities, const std::vector<int>& labels) {
  if (probabilities.size() != labels.size()) {
    throw ContractError("make_cohort: probabilities and labels differ in length");
  }
  ScoredCohort c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    c.patients.push_back({"p" + std::to_string(i), probabilities[i], labels[i]});
  }
  c.validate();
  return c;
}

std::string cohort_to_jsonl(const ScoredCohort& cohort) {
  std::string out;
  for (const ScoredPatient& p : cohort.patients) {
    out += nlohmann::json{{"id", p.id}, {"probability", p.probability}, {"label", p.label}}.dump();
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',' || ch == '\t' || ch == ' ') {
      if (!cur.empty()) fields.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  if (!cur.empty()) fields.push_back(std::move(cur));
  return fields;
}

template <class T>
bool parse_number(const std::string& s, T& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

ScoredCohort parse_cohort(std::string_view text) {
  ScoredCohort cohort;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    if (line[first] == '{') {
      try {
        const auto j = nlohmann::json::parse(line);
        cohort.patients.push_back({j.at("id").get<std::string>(), j.at("probability").get<double>(),
                                   j.at("label").get<int>()});
      } catch (const nlohmann::json::exception& e) {
        throw DecodeError("cohort line " + std::to_string(lineno) + ": " + e.what());
      }
      continue;
    }
    const auto fields = split_fields(line);
    ScoredPatient p;
    if (fields.size() != 3 || !parse_number(fields[1], p.probability) ||
        !parse_number(fields[2], p.label)) {
      if (cohort.patients.empty() && lineno == 1) continue;  // header
      throw DecodeError("cohort line " + std::to_string(lineno) + ": expected id, probability, label");
    }
    p.id = fields[0];
    cohort.patients.push_back(std::move(p));
  }
  cohort.validate();
  return cohort;
}

void write_cohort(const std::filesystem::path& path, const ScoredCohort& cohort) {
  io::write_file(path, cohort_to_jsonl(cohort));
}

ScoredCohort read_cohort(const std::filesystem::path& path) {
  return parse_cohort(io::read_file(path));
}

}  // namespace slicevol::eval
