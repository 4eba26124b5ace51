#include "slicevol/train/trainer.hpp"

#include <json.hpp>
#include <numeric>
#include <set>

#include "slicevol/autodiff/ops.hpp"
#include "slicevol/errors.hpp"
#include "slicevol/eval/metrics.hpp"
#include "slicevol/train/schedule.hpp"

namespace slicevol::train {

void TrainConfig::validate() const {
  if (!(lr0 > 0.0)) throw ParameterError("lr0 must be positive");
  if (max_epochs == 0) throw ParameterError("max_epochs must be at least 1");
  if (early_stop_patience == 0) throw ParameterError("early_stop_patience must be at least 1");
  if (batch_size == 0) throw ParameterError("batch_size must be at least 1");
  if (!(weight_decay >= 0.0)) throw ParameterError("weight_decay must be non-negative");
  loss.validate();
}

EncodedSet encode_prefixes(const ModelParams& params, const ModelConfig& cfg,
                           std::span<const data::MaskVolume> volumes) {
  EncodedSet set;
  for (const data::MaskVolume& v : volumes) {
    require_compatible(v, cfg);
    const auto slices = data::slice_tensors(v);
    set.ids.push_back(v.patient_id);
    set.labels.push_back(v.label);
    set.prefixes.push_back(compute_prefix(params, cfg, slices));
  }
  return set;
}

Trainer::Trainer(ModelConfig model_cfg_, TrainConfig cfg_, ModelParams params_)
    : model_cfg(std::move(model_cfg_)), cfg(std::move(cfg_)), params(std::move(params_)) {
  model_cfg.validate();
  cfg.validate();
  slots = param_pointers(params);
  optimizer = init_optimizer(slots);
}

PairBatch Trainer::make_pairs(std::span<const int> labels,
                              std::span<const std::vector<double>> projections, std::size_t epoch,
                              Rng& rng) const {
  if (epoch < cfg.loss.hard_mining_start_epoch) return sample_random_pairs(labels, labels.size(), rng);
  PairBatch pairs = mine_hard_negatives(projections, labels);
  if (pairs.empty()) return sample_random_pairs(labels, labels.size(), rng);
  pairs.append(sample_positive_pairs(labels, pairs.size(), rng));
  return pairs;
}

EpochStats Trainer::train_epoch(const EncodedSet& train, std::size_t epoch, Rng& rng) {
  if (train.size() == 0) throw ContractError("train_epoch: empty training set");
  EpochStats stats;
  stats.epoch = epoch;
  stats.lr = cosine_lr(epoch, cfg.lr0, cfg.max_epochs);
  stats.alpha = heads::alpha_schedule(epoch, cfg.loss);
  stats.strategy = epoch < cfg.loss.hard_mining_start_epoch ? "random" : "hard";

  // Fisher-Yates with our own index draw keeps the order portable.
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);

  double ce_total = 0.0, con_total = 0.0;
  std::vector<std::vector<double>> grads(slots.size());
  for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
    const std::size_t n = std::min(cfg.batch_size, order.size() - start);
    std::vector<ad::Tensor> ce_terms, projections;
    std::vector<std::vector<double>> proj_values;
    std::vector<int> labels;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = order[start + k];
      const ModelOutput out = forward_from_prefix(params, model_cfg, train.prefixes[i], true, rng);
      ce_terms.push_back(heads::cross_entropy(out.logits, train.labels[i]));
      projections.push_back(out.projection);
      // Nothing upstream of the projection head uses dropout, so these values
      // equal an inference-mode pass with the current parameters.
      proj_values.emplace_back(out.projection.data().begin(), out.projection.data().end());
      labels.push_back(train.labels[i]);
    }
    const PairBatch pairs = make_pairs(labels, proj_values, epoch, rng);
    std::vector<ad::Tensor> con_terms;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      con_terms.push_back(heads::contrastive_margin_loss(projections[pairs.anchors[p]],
                                                         projections[pairs.partners[p]],
                                                         pairs.same[p], cfg.loss.margin));
    }
    const ad::Tensor loss = heads::combine_losses(ce_terms, con_terms, stats.alpha);
    for (const ad::Tensor& t : ce_terms) ce_total += t.item();
    for (const ad::Tensor& t : con_terms) con_total += t.item();
    stats.pairs += pairs.size();
    stats.hard_negatives += stats.strategy == "hard" ? pairs.size() - pairs.positives() : 0;
    ++stats.batches;

    const ad::Gradients g = ad::backward(loss);
    for (std::size_t s = 0; s < slots.size(); ++s) {
      grads[s] = slots[s]->requires_grad() ? g.of(*slots[s]) : std::vector<double>{};
    }
    adamw_step(slots, grads, optimizer, stats.lr, cfg.weight_decay);
  }
  stats.mean_ce = ce_total / static_cast<double>(train.size());
  stats.mean_contrastive = stats.pairs > 0 ? con_total / static_cast<double>(stats.pairs) : 0.0;
  return stats;
}

std::vector<double> predict(const ModelParams& params, const ModelConfig& cfg, const EncodedSet& set) {
  Rng unused(0);
  std::vector<double> out;
  out.reserve(set.size());
  for (const ad::Tensor& prefix : set.prefixes) {
    out.push_back(forward_from_prefix(params, cfg, prefix, false, unused).positive_probability());
  }
  return out;
}

ValidationScore validation_score(const ModelParams& params, const ModelConfig& cfg,
                                 const EncodedSet& val) {
  const std::vector<double> probs = predict(params, cfg, val);
  ValidationScore s;
  s.f1 = eval::point_metrics(eval::confusion(probs, val.labels, 0.5)).f1;
  bool pos = false, neg = false;
  for (int y : val.labels) (y == 1 ? pos : neg) = true;
  if (pos && neg) s.auc = eval::roc_auc(probs, val.labels);
  return s;
}

FitResult fit(const ModelConfig& model_cfg, const TrainConfig& cfg, ModelParams init,
              const EncodedSet& train, const EncodedSet& val, const EpochCallback& on_epoch) {
  if (val.size() == 0) throw ContractError("fit: empty validation split");
  const std::set<std::string> train_ids(train.ids.begin(), train.ids.end());
  for (const std::string& id : val.ids) {
    if (train_ids.contains(id)) throw ContractError("fit: patient " + id + " is in both splits");
  }
  Trainer trainer(model_cfg, cfg, std::move(init));
  FitResult result;
  result.params = trainer.params;
  std::vector<double> history;
  const std::uint64_t epoch_seed = substream_seed(cfg.seed, 0x7a11);
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Rng rng(substream_seed(epoch_seed, epoch));
    EpochStats stats = trainer.train_epoch(train, epoch, rng);
    const ValidationScore vs = validation_score(trainer.params, model_cfg, val);
    stats.val_f1 = vs.f1;
    stats.val_auc = vs.auc;
    history.push_back(vs.f1);
    result.log.push_back(stats);
    if (on_epoch) on_epoch(stats);

    const EarlyStop es = early_stop_check(history, cfg.early_stop_patience);
    if (es.best_epoch == epoch) {
      result.params = trainer.params;  // tensors are immutable, so this is a snapshot
      result.best_epoch = epoch;
      result.best_metric = vs.f1;
    }
    if (es.stop) {
      result.stopped_early = true;
      break;
    }
  }
  return result;
}

FitResult fit(const ModelConfig& model_cfg, const TrainConfig& cfg,
              std::span<const data::MaskVolume> train, std::span<const data::MaskVolume> val,
              const EpochCallback& on_epoch) {
  cfg.validate();
  ModelParams init = init_model(model_cfg, cfg.seed);
  const EncodedSet tr = encode_prefixes(init, model_cfg, train);
  const EncodedSet va = encode_prefixes(init, model_cfg, val);
  return fit(model_cfg, cfg, std::move(init), tr, va, on_epoch);
}

std::string epoch_to_json(const EpochStats& s) {
  nlohmann::json j = {{"epoch", s.epoch},
                      {"lr", s.lr},
                      {"alpha", s.alpha},
                      {"mean_ce", s.mean_ce},
                      {"mean_contrastive", s.mean_contrastive},
                      {"batches", s.batches},
                      {"pairs", s.pairs},
                      {"hard_negatives", s.hard_negatives},
                      {"strategy", s.strategy},
                      {"val_f1", s.val_f1},
                      {"val_auc", s.val_auc ? nlohmann::json(*s.val_auc) : nlohmann::json(nullptr)}};
  return j.dump();
}

std::string training_log_jsonl(std::span<const EpochStats> log) {
  std::string out;
  for (const EpochStats& s : log) out += epoch_to_json(s) + "\n";
  return out;
}

}  // namespace slicevol::train
