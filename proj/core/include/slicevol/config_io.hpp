#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "slicevol/data/manifest.hpp"
#include "slicevol/data/synth.hpp"
#include "slicevol/eval/report.hpp"
#include "slicevol/model.hpp"
#include "slicevol/train/trainer.hpp"

namespace slicevol {

// Everything a pipeline run needs. The JSON form has the sections "model",
// "train", "synth", "split" and "eval"; each section and each key is optional
// and falls back to the defaults. Unknown keys raise ParameterError.
struct RunConfig {
  ModelConfig model;
  train::TrainConfig train;
  data::SynthConfig synth;
  data::SplitFractions split;
  eval::EvalConfig eval;
};

RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_to_json(const RunConfig& cfg);

}  // namespace slicevol
