#include <CLI11.hpp>
#include <exception>
#include <iostream>
#include <json.hpp>

#include "commands.hpp"
#include "slicevol/errors.hpp"

namespace {

const char* category(const std::exception& e) {
  using namespace slicevol;
  if (dynamic_cast<const HeaderError*>(&e)) return "header_error";
  if (dynamic_cast<const TruncationError*>(&e)) return "truncation_error";
  if (dynamic_cast<const ShapeError*>(&e)) return "shape_error";
  if (dynamic_cast<const DecodeError*>(&e)) return "decode_error";
  if (dynamic_cast<const ParameterError*>(&e)) return "parameter_error";
  if (dynamic_cast<const DimensionError*>(&e)) return "dimension_error";
  if (dynamic_cast<const CapacityError*>(&e)) return "capacity_error";
  if (dynamic_cast<const ContractError*>(&e)) return "contract_error";
  if (dynamic_cast<const UndefinedMetricError*>(&e)) return "undefined_metric";
  if (dynamic_cast<const Error*>(&e)) return "error";
  return "internal_error";
}

}  // namespace

int main(int argc, char** argv) {
  using namespace slicevol::cli;
  CLI::App app{"slicevol: slice-attention response classifier on lesion-mask volumes"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a synthetic dataset and its split manifest");
  g->add_option("--config", gen.config, "Run config (JSON)")->check(CLI::ExistingFile);
  g->add_option("--seed", gen.seed, "Overrides synth.seed; also seeds the split");
  g->add_option("--out", gen.out, "Output directory")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Fit a model on the train split, early-stopping on val");
  t->add_option("--config", tr.config, "Run config (JSON)")->check(CLI::ExistingFile);
  t->add_option("--seed", tr.seed, "Overrides train.seed");
  t->add_option("--dataset", tr.dataset, "Dataset manifest")->required()->check(CLI::ExistingFile);
  t->add_option("--out", tr.out, "Output directory")->required();

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Score a split and write a metrics report");
  e->add_option("--config", ev.config, "Run config (JSON); only the eval section is used")
      ->check(CLI::ExistingFile);
  e->add_option("--seed", ev.seed, "Overrides eval.bootstrap_seed");
  e->add_option("--dataset", ev.dataset, "Dataset manifest")->required()->check(CLI::ExistingFile);
  e->add_option("--checkpoint", ev.checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  e->add_option("--baseline-checkpoint", ev.baseline_checkpoint, "Checkpoint to compare against")
      ->check(CLI::ExistingFile);
  e->add_option("--split", ev.split, "Split to evaluate")->check(CLI::IsMember({"train", "val", "test"}));
  e->add_option("--out", ev.out, "Output directory")->required();

  ReportArgs rp;
  auto* r = app.add_subcommand("report", "Render a metrics report or confusion matrix as a table");
  r->add_option("input", rp.input, "MetricsReport JSON or {tp, fp, tn, fn} JSON")
      ->required()
      ->check(CLI::ExistingFile);
  r->add_option("--out", rp.out, "Also write the table to this file");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*g) return run_generate(gen);
    if (*t) return run_train(tr);
    if (*e) return run_evaluate(ev);
    if (*r) return run_report(rp);
  } catch (const std::exception& ex) {
    std::cerr << nlohmann::json{{"error", category(ex)}, {"message", ex.what()}}.dump() << "\n";
    return 2;
  }
  return 1;
}
