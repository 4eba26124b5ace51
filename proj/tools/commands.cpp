#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "slicevol/config_io.hpp"
#include "slicevol/data/manifest.hpp"
#include "slicevol/data/synth.hpp"
#include "slicevol/errors.hpp"
#include "slicevol/eval/report.hpp"
#include "slicevol/train/checkpoint.hpp"
#include "slicevol/train/trainer.hpp"

namespace fs = std::filesystem;

namespace slicevol::cli {

namespace {

RunConfig config_or_defaults(const std::string& path) {
  return path.empty() ? RunConfig{} : load_run_config(path);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Scored {
  eval::ScoredCohort cohort;
  std::vector<eval::PatientAttention> attention;
};

Scored score(const train::Checkpoint& ckpt, std::span<const data::MaskVolume> volumes) {
  Scored s;
  Rng unused(0);
  for (const data::MaskVolume& v : volumes) {
    const ModelOutput out = forward(ckpt.params, ckpt.model, v, false, unused);
    s.cohort.patients.push_back({v.patient_id, out.positive_probability(), v.label});
    s.attention.push_back({v.patient_id, out.attention});
  }
  return s;
}

}  // namespace

int run_generate(const GenerateArgs& args) {
  RunConfig cfg = config_or_defaults(args.config);
  if (args.seed) cfg.synth.seed = *args.seed;
  const fs::path out(args.out);
  const std::vector<data::MaskVolume> volumes = data::generate_synthetic(cfg.synth);
  data::DatasetManifest m = data::write_volumes(volumes, out, cfg.synth);
  m = data::split_dataset(std::move(m), cfg.split, cfg.synth.seed);
  data::write_manifest(out / "manifest.json", m);

  nlohmann::json summary = {{"manifest", (out / "manifest.json").string()},
                            {"patients", m.patients.size()},
                            {"warnings", m.warnings}};
  for (data::Split s : {data::Split::Train, data::Split::Val, data::Split::Test}) {
    const auto idx = m.indices(s);
    std::size_t pos = 0;
    for (std::size_t i : idx) pos += m.patients[i].label == 1;
    summary["splits"][std::string(data::to_string(s))] = {{"size", idx.size()}, {"positives", pos}};
  }
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int run_train(const TrainArgs& args) {
  RunConfig cfg = config_or_defaults(args.config);
  if (args.seed) cfg.train.seed = *args.seed;
  const fs::path manifest_path(args.dataset);
  const data::DatasetManifest m = data::read_manifest(manifest_path);
  const fs::path dir = manifest_path.parent_path();
  const auto train_set = data::load_split(m, dir, data::Split::Train);
  const auto val_set = data::load_split(m, dir, data::Split::Val);
  if (train_set.empty() || val_set.empty()) throw ContractError("dataset needs non-empty train and val splits");

  const fs::path out(args.out);
  fs::create_directories(out);
  std::ofstream log(out / "training_log.jsonl", std::ios::binary);
  const train::FitResult result =
      train::fit(cfg.model, cfg.train, train_set, val_set, [&](const train::EpochStats& s) {
        const std::string line = train::epoch_to_json(s);
        log << line << "\n" << std::flush;
        std::cerr << line << "\n";
      });

  train::Checkpoint ckpt{cfg.model, cfg.train, result.best_epoch, result.best_metric, result.params};
  train::save_checkpoint(out / "checkpoint.ckpt", ckpt);
  write_text(out / "config.json", run_config_to_json(cfg));
  std::cout << nlohmann::json{{"checkpoint", (out / "checkpoint.ckpt").string()},
                              {"epochs_run", result.log.size()},
                              {"best_epoch", result.best_epoch},
                              {"best_val_f1", result.best_metric},
                              {"stopped_early", result.stopped_early}}
                   .dump(2)
            << "\n";
  return 0;
}

int run_evaluate(const EvaluateArgs& args) {
  RunConfig cfg = config_or_defaults(args.config);
  if (args.seed) cfg.eval.bootstrap_seed = *args.seed;
  const fs::path manifest_path(args.dataset);
  const data::DatasetManifest m = data::read_manifest(manifest_path);
  const fs::path dir = manifest_path.parent_path();
  const auto val_set = data::load_split(m, dir, data::Split::Val);
  const auto eval_set = data::load_split(m, dir, data::split_from_string(args.split));
  if (val_set.empty() || eval_set.empty()) throw ContractError("validation or evaluation split is empty");

  const train::Checkpoint model = train::load_checkpoint(args.checkpoint);
  Scored model_val = score(model, val_set);
  Scored model_eval = score(model, eval_set);
  const eval::ModelScores model_scores{fs::path(args.checkpoint).stem().string(), model_val.cohort,
                                       model_eval.cohort};

  std::optional<eval::ModelScores> baseline_scores;
  if (!args.baseline_checkpoint.empty()) {
    const train::Checkpoint baseline = train::load_checkpoint(args.baseline_checkpoint);
    std::string name = fs::path(args.baseline_checkpoint).stem().string();
    if (name == model_scores.name) name += " (baseline)";
    baseline_scores = eval::ModelScores{name, score(baseline, val_set).cohort, score(baseline, eval_set).cohort};
  }

  const eval::MetricsReport report =
      eval::build_report(model_scores, baseline_scores, model_eval.attention, args.split, cfg.eval);
  const fs::path out(args.out);
  eval::write_report(out / "report.json", report);
  eval::write_cohort(out / "scores_val.jsonl", model_val.cohort);
  eval::write_cohort(out / ("scores_" + args.split + ".jsonl"), model_eval.cohort);
  const std::string summary = eval::render_summary(report);
  write_text(out / "summary.txt", summary);
  std::cout << summary;
  return 0;
}

int run_report(const ReportArgs& args) {
  const std::string text = read_text(args.input);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(std::string("report input is not JSON: ") + e.what());
  }
  std::string table;
  if (j.is_object() && j.value("format", "") == "slicevol-metrics") {
    table = eval::render_summary(eval::report_from_json(text));
  } else if (j.is_object() && j.contains("tp") && j.contains("fp") && j.contains("tn") && j.contains("fn")) {
    eval::ConfusionMatrix cm;
    try {
      cm = {j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(), j.at("tn").get<std::size_t>(),
            j.at("fn").get<std::size_t>()};
    } catch (const nlohmann::json::exception& e) {
      throw DecodeError(std::string("confusion matrix counts: ") + e.what());
    }
    table = eval::render_confusion_summary(cm);
  } else {
    throw DecodeError("report input is neither a metrics report nor a {tp, fp, tn, fn} object");
  }
  if (!args.out.empty()) write_text(args.out, table);
  std::cout << table;
  return 0;
}

}  // namespace slicevol::cli
