#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slicevol/data/volume.hpp"
#include "slicevol/heads/losses.hpp"
#include "slicevol/model.hpp"
#include "slicevol/train/optimizer.hpp"
#include "slicevol/train/pairs.hpp"

namespace slicevol::train {

struct TrainConfig {
  double lr0 = 1e-4;
  std::size_t max_epochs = 100;
  std::size_t early_stop_patience = 10;
  std::size_t batch_size = 8;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;
  heads::LossConfig loss;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

// Frozen-prefix outputs of a set of volumes, computed once and reused by
// every epoch (the prefix depends on frozen parameters only).
struct EncodedSet {
  std::vector<std::string> ids;
  std::vector<int> labels;
  std::vector<ad::Tensor> prefixes;

  std::size_t size() const { return labels.size(); }
};

EncodedSet encode_prefixes(const ModelParams& params, const ModelConfig& cfg,
                           std::span<const data::MaskVolume> volumes);

struct EpochStats {
  std::size_t epoch = 0;
  double lr = 0.0;
  double alpha = 0.0;
  double mean_ce = 0.0;           // over volumes
  double mean_contrastive = 0.0;  // over pairs; 0 when no pairs were formed
  std::size_t batches = 0;
  std::size_t pairs = 0;
  std::size_t hard_negatives = 0;
  std::string strategy;  // "random" or "hard"
  double val_f1 = 0.0;   // at threshold 0.5
  std::optional<double> val_auc;

  bool operator==(const EpochStats&) const = default;
};

struct Trainer {
  ModelConfig model_cfg;
  TrainConfig cfg;
  ModelParams params;
  OptimizerState optimizer;
  std::vector<ad::Tensor*> slots;  // into params, canonical order

  Trainer(ModelConfig model_cfg, TrainConfig cfg, ModelParams params);
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  // One pass over the training set in shuffled mini-batches, one optimizer
  // step per batch. Pair selection and dropout draw from `rng`.
  EpochStats train_epoch(const EncodedSet& train, std::size_t epoch, Rng& rng);

  // Fills the pair batch the epoch's strategy prescribes for one mini-batch.
  PairBatch make_pairs(std::span<const int> labels, std::span<const std::vector<double>> projections,
                       std::size_t epoch, Rng& rng) const;
};

// P(class 1) per volume, inference mode.
std::vector<double> predict(const ModelParams& params, const ModelConfig& cfg, const EncodedSet& set);

struct ValidationScore {
  double f1 = 0.0;
  std::optional<double> auc;  // absent for a single-class split
};

ValidationScore validation_score(const ModelParams& params, const ModelConfig& cfg,
                                 const EncodedSet& val);

struct FitResult {
  ModelParams params;  // restored from the best epoch
  std::vector<EpochStats> log;
  std::size_t best_epoch = 0;
  double best_metric = 0.0;
  bool stopped_early = false;
};

using EpochCallback = std::function<void(const EpochStats&)>;

FitResult fit(const ModelConfig& model_cfg, const TrainConfig& cfg,
              std::span<const data::MaskVolume> train, std::span<const data::MaskVolume> val,
              const EpochCallback& on_epoch = {});

// Same, starting from given parameters and pre-encoded splits.
FitResult fit(const ModelConfig& model_cfg, const TrainConfig& cfg, ModelParams init,
              const EncodedSet& train, const EncodedSet& val, const EpochCallback& on_epoch = {});

std::string epoch_to_json(const EpochStats& stats);
std::string training_log_jsonl(std::span<const EpochStats> log);

}  // namespace slicevol::train
