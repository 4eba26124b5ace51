#pragma once

// JSON mapping of the configuration structs. Readers start from defaults,
// override the keys present and reject unknown keys.

#include <json.hpp>

#include "slicevol/data/manifest.hpp"
#include "slicevol/data/synth.hpp"
#include "slicevol/eval/report.hpp"
#include "slicevol/model.hpp"
#include "slicevol/train/trainer.hpp"

namespace slicevol::config {

using nlohmann::json;

json to_json(const encoder::EncoderConfig& c);
json to_json(const aggregate::AggregatorConfig& c);
json to_json(const heads::HeadsConfig& c);
json to_json(const ModelConfig& c);
json to_json(const heads::LossConfig& c);
json to_json(const train::TrainConfig& c);
json to_json(const data::SynthConfig& c);
json to_json(const data::SplitFractions& c);
json to_json(const eval::EvalConfig& c);

encoder::EncoderConfig encoder_from_json(const json& j);
aggregate::AggregatorConfig aggregator_from_json(const json& j);
heads::HeadsConfig heads_from_json(const json& j);
ModelConfig model_from_json(const json& j);
heads::LossConfig loss_from_json(const json& j);
train::TrainConfig train_from_json(const json& j);
data::SynthConfig synth_from_json(const json& j);
data::SplitFractions split_from_json(const json& j);
eval::EvalConfig eval_from_json(const json& j);

}  // namespace slicevol::config
