#include "slicevol/config_io.hpp"

#include <set>

#include "io/blob_file.hpp"
#include "json_config.hpp"
#include "slicevol/errors.hpp"

namespace slicevol {

namespace config {

namespace {

// Copies j[key] into `field` when present.
template <class T>
void take(const json& j, const char* key, T& field) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    field = it->get<T>();
  } catch (const json::exception& e) {
    throw ParameterError(std::string("config key '") + key + "': " + e.what());
  }
}

void only_keys(const json& j, std::initializer_list<const char*> keys, const char* section) {
  if (!j.is_object()) throw ParameterError(std::string("config section '") + section + "' must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.contains(k)) {
      throw ParameterError("unknown key '" + k + "' in config section '" + section + "'");
    }
  }
}

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  const auto it = j.find(key);
  return it == j.end() ? empty : *it;
}

}  // namespace

json to_json(const encoder::EncoderConfig& c) {
  return {{"image_size", c.image_size}, {"patch_size", c.patch_size}, {"embed_dim", c.embed_dim},
          {"n_blocks", c.n_blocks},     {"n_heads", c.n_heads},       {"lora_rank", c.lora_rank},
          {"lora_alpha", c.lora_alpha}, {"mlp_ratio", c.mlp_ratio},   {"layer_norm_eps", c.layer_norm_eps}};
}

encoder::EncoderConfig encoder_from_json(const json& j) {
  only_keys(j, {"image_size", "patch_size", "embed_dim", "n_blocks", "n_heads", "lora_rank",
                "lora_alpha", "mlp_ratio", "layer_norm_eps"},
            "model.encoder");
  encoder::EncoderConfig c;
  take(j, "image_size", c.image_size);
  take(j, "patch_size", c.patch_size);
  take(j, "embed_dim", c.embed_dim);
  take(j, "n_blocks", c.n_blocks);
  take(j, "n_heads", c.n_heads);
  take(j, "lora_rank", c.lora_rank);
  take(j, "lora_alpha", c.lora_alpha);
  take(j, "mlp_ratio", c.mlp_ratio);
  take(j, "layer_norm_eps", c.layer_norm_eps);
  return c;
}

json to_json(const aggregate::AggregatorConfig& c) {
  return {{"embed_dim", c.embed_dim},
          {"n_heads", c.n_heads},
          {"max_slices", c.max_slices},
          {"pool_layers", c.pool_layers},
          {"layer_norm_eps", c.layer_norm_eps}};
}

aggregate::AggregatorConfig aggregator_from_json(const json& j) {
  only_keys(j, {"embed_dim", "n_heads", "max_slices", "pool_layers", "layer_norm_eps"}, "model.aggregator");
  aggregate::AggregatorConfig c;
  take(j, "embed_dim", c.embed_dim);
  take(j, "n_heads", c.n_heads);
  take(j, "max_slices", c.max_slices);
  take(j, "pool_layers", c.pool_layers);
  take(j, "layer_norm_eps", c.layer_norm_eps);
  return c;
}

json to_json(const heads::HeadsConfig& c) {
  return {{"embed_dim", c.embed_dim},
          {"proj_dim", c.proj_dim},
          {"proj_hidden", c.proj_hidden},
          {"dropout", c.dropout},
          {"layer_norm_eps", c.layer_norm_eps}};
}

heads::HeadsConfig heads_from_json(const json& j) {
  only_keys(j, {"embed_dim", "proj_dim", "proj_hidden", "dropout", "layer_norm_eps"}, "model.heads");
  heads::HeadsConfig c;
  take(j, "embed_dim", c.embed_dim);
  take(j, "proj_dim", c.proj_dim);
  take(j, "proj_hidden", c.proj_hidden);
  take(j, "dropout", c.dropout);
  take(j, "layer_norm_eps", c.layer_norm_eps);
  return c;
}

json to_json(const ModelConfig& c) {
  return {{"encoder", to_json(c.encoder)}, {"aggregator", to_json(c.aggregator)}, {"heads", to_json(c.heads)}};
}

ModelConfig model_from_json(const json& j) {
  only_keys(j, {"encoder", "aggregator", "heads", "embed_dim"}, "model");
  ModelConfig c;
  // A top-level embed_dim sets all three widths at once.
  if (j.contains("embed_dim")) {
    std::size_t d = 0;
    take(j, "embed_dim", d);
    c.encoder.embed_dim = c.aggregator.embed_dim = c.heads.embed_dim = d;
  }
  if (j.contains("encoder")) {
    json e = j.at("encoder");
    if (!e.contains("embed_dim")) e["embed_dim"] = c.encoder.embed_dim;
    c.encoder = encoder_from_json(e);
  }
  if (j.contains("aggregator")) {
    json a = j.at("aggregator");
    if (!a.contains("embed_dim")) a["embed_dim"] = c.aggregator.embed_dim;
    c.aggregator = aggregator_from_json(a);
  }
  if (j.contains("heads")) {
    json h = j.at("heads");
    if (!h.contains("embed_dim")) h["embed_dim"] = c.heads.embed_dim;
    c.heads = heads_from_json(h);
  }
  return c;
}

json to_json(const heads::LossConfig& c) {
  return {{"margin", c.margin},
          {"alpha_max", c.alpha_max},
          {"ramp_epochs", c.ramp_epochs},
          {"hard_mining_start_epoch", c.hard_mining_start_epoch}};
}

heads::LossConfig loss_from_json(const json& j) {
  only_keys(j, {"margin", "alpha_max", "ramp_epochs", "hard_mining_start_epoch"}, "train.loss");
  heads::LossConfig c;
  take(j, "margin", c.margin);
  take(j, "alpha_max", c.alpha_max);
  take(j, "ramp_epochs", c.ramp_epochs);
  take(j, "hard_mining_start_epoch", c.hard_mining_start_epoch);
  return c;
}

json to_json(const train::TrainConfig& c) {
  return {{"lr0", c.lr0},
          {"max_epochs", c.max_epochs},
          {"early_stop_patience", c.early_stop_patience},
          {"batch_size", c.batch_size},
          {"weight_decay", c.weight_decay},
          {"seed", c.seed},
          {"loss", to_json(c.loss)}};
}

train::TrainConfig train_from_json(const json& j) {
  only_keys(j, {"lr0", "max_epochs", "early_stop_patience", "batch_size", "weight_decay", "seed", "loss"},
            "train");
  train::TrainConfig c;
  take(j, "lr0", c.lr0);
  take(j, "max_epochs", c.max_epochs);
  take(j, "early_stop_patience", c.early_stop_patience);
  take(j, "batch_size", c.batch_size);
  take(j, "weight_decay", c.weight_decay);
  take(j, "seed", c.seed);
  if (j.contains("loss")) c.loss = loss_from_json(j.at("loss"));
  return c;
}

json to_json(const data::SynthConfig& c) {
  return {{"n_patients", c.n_patients}, {"class_balance", c.class_balance}, {"signal", c.signal},
          {"noise", c.noise},           {"seed", c.seed},                   {"height", c.height},
          {"width", c.width},           {"slices", c.slices}};
}

data::SynthConfig synth_from_json(const json& j) {
  only_keys(j, {"n_patients", "class_balance", "signal", "noise", "seed", "height", "width", "slices"},
            "synth");
  data::SynthConfig c;
  take(j, "n_patients", c.n_patients);
  take(j, "class_balance", c.class_balance);
  take(j, "signal", c.signal);
  take(j, "noise", c.noise);
  take(j, "seed", c.seed);
  take(j, "height", c.height);
  take(j, "width", c.width);
  take(j, "slices", c.slices);
  return c;
}

json to_json(const data::SplitFractions& c) {
  return {{"train", c.train}, {"val", c.val}, {"test", c.test}};
}

data::SplitFractions split_from_json(const json& j) {
  only_keys(j, {"train", "val", "test"}, "split");
  data::SplitFractions c;
  take(j, "train", c.train);
  take(j, "val", c.val);
  take(j, "test", c.test);
  return c;
}

json to_json(const eval::EvalConfig& c) {
  return {{"bootstrap_resamples", c.bootstrap_resamples},
          {"bootstrap_seed", c.bootstrap_seed},
          {"confidence_level", c.confidence_level},
          {"reliability_bins", c.reliability_bins},
          {"low_band", c.low_band},
          {"high_band", c.high_band}};
}

eval::EvalConfig eval_from_json(const json& j) {
  only_keys(j, {"bootstrap_resamples", "bootstrap_seed", "confidence_level", "reliability_bins",
                "low_band", "high_band"},
            "eval");
  eval::EvalConfig c;
  take(j, "bootstrap_resamples", c.bootstrap_resamples);
  take(j, "bootstrap_seed", c.bootstrap_seed);
  take(j, "confidence_level", c.confidence_level);
  take(j, "reliability_bins", c.reliability_bins);
  take(j, "low_band", c.low_band);
  take(j, "high_band", c.high_band);
  return c;
}

}  // namespace config

RunConfig parse_run_config(std::string_view text) {
  config::json j;
  try {
    j = config::json::parse(text);
  } catch (const config::json::exception& e) {
    throw ParameterError(std::string("config is not valid JSON: ") + e.what());
  }
  config::only_keys(j, {"model", "train", "synth", "split", "eval"}, "root");
  RunConfig c;
  c.model = config::model_from_json(config::section(j, "model"));
  c.train = config::train_from_json(config::section(j, "train"));
  c.synth = config::synth_from_json(config::section(j, "synth"));
  c.split = config::split_from_json(config::section(j, "split"));
  c.eval = config::eval_from_json(config::section(j, "eval"));
  c.model.validate();
  c.train.validate();
  c.synth.validate();
  c.eval.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(io::read_file(path));
}

std::string run_config_to_json(const RunConfig& c) {
  const config::json j = {{"model", config::to_json(c.model)},
                          {"train", config::to_json(c.train)},
                          {"synth", config::to_json(c.synth)},
                          {"split", config::to_json(c.split)},
                          {"eval", config::to_json(c.eval)}};
  return j.dump(2) + "\n";
}

}  // namespace slicevol
