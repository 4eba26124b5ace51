#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace slicevol::cli {

struct GenerateArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct TrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string dataset;
  std::string out;
};

struct EvaluateArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string dataset;
  std::string checkpoint;
  std::string baseline_checkpoint;
  std::string split = "test";
  std::string out;
};

struct ReportArgs {
  std::string input;
  std::string out;
};

int run_generate(const GenerateArgs& args);
int run_train(const TrainArgs& args);
int run_evaluate(const EvaluateArgs& args);
int run_report(const ReportArgs& args);

}  // namespace slicevol::cli
