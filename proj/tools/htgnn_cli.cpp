// SPDX-License-Identifier: Apache-2.0
// Command line front end: simulate, preprocess, train, evaluate, predict and
// repeated experiments over seeds.
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "htgnn/checkpoint.hpp"
#include "htgnn/csv.hpp"
#include "htgnn/dataset.hpp"
#include "htgnn/experiment.hpp"

namespace fs = std::filesystem;
using namespace htgnn;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "random seed");
}

ExperimentConfig load_config(const CommonOptions& o) {
  return o.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(o.config);
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

int simulate(const CommonOptions& o, const fs::path& out) {
  auto cfg = load_config(o);
  if (o.seed) cfg.data_seed = *o.seed;
  const auto layout = RigLayout::two_bearing_default();
  const auto recordings = simulate_dataset(cfg.simulator, layout, cfg.data_seed);
  write_raw_dataset(out, layout, recordings, make_split(recordings.size(), cfg.split));
  std::cout << "wrote " << recordings.size() << " cases to " << out.string() << '\n';
  return 0;
}

int preprocess_cmd(const CommonOptions& o, const fs::path& data, const fs::path& out) {
  const auto cfg = load_config(o);
  const auto n = read_manifest(data / kManifestFile).size();
  write_processed_dataset(data, out, cfg.preprocess, make_split(n, cfg.split));
  std::cout << "processed " << n << " cases into " << out.string() << '\n';
  return 0;
}

void write_reports(const fs::path& out, const MetricsReport& report, std::string_view model) {
  write_metrics_csv(out / "metrics.csv", report);
  write_summary_csv(out / "summary.csv", report);
  write_plot_csv(out / "plot.csv", report, model);
}

void print_summary(std::string_view model, const MetricsReport& r) {
  std::printf("%s seen   (%zu cases): MAE %.3f / %.3f kN, MAPE %.2f / %.2f %%\n", std::string(model).c_str(),
              r.seen.cases, r.seen.mae_fx, r.seen.mae_fy, r.seen.mape_fx, r.seen.mape_fy);
  std::printf("%s unseen (%zu cases): MAE %.3f / %.3f kN, MAPE %.2f / %.2f %%\n", std::string(model).c_str(),
              r.unseen.cases, r.unseen.mae_fx, r.unseen.mae_fy, r.unseen.mape_fx, r.unseen.mape_fy);
}

int train_cmd(const CommonOptions& o, const std::string& model_name, const fs::path& data, const fs::path& out) {
  auto cfg = load_config(o);
  if (o.seed) cfg.training.seed = *o.seed;
  const auto kind = model_kind_from_string(model_name);
  const auto prepared = load_dataset(data, cfg);
  fs::create_directories(out);
  auto run = run_training(kind, cfg, prepared, cfg.training.seed);
  save_checkpoint(out / "checkpoint.json", *run.model, *prepared.graph, run.normalization, cfg.preprocess);
  write_training_log(out / "training_log.csv", run.training.log);
  write_json(out / "config.json", cfg.to_json());
  std::cout << "best epoch " << run.training.best_epoch << ", validation L1 "
            << csv::format(run.training.best_validation_loss) << '\n';
  return 0;
}

int evaluate_cmd(const CommonOptions& o, const fs::path& checkpoint, const fs::path& data, const fs::path& out) {
  const auto cfg = load_config(o);
  auto ck = load_checkpoint(checkpoint);
  const auto prepared = load_dataset(data, cfg);
  if (ck.graph && !(*ck.graph == *prepared.graph)) {
    throw DataError("checkpoint graph does not match the dataset layout");
  }
  const auto report = evaluate(*ck.model, ck.normalization, prepared.windows, prepared.assignment.test,
                               prepared.conditions, cfg.eval_batch_size);
  fs::create_directories(out);
  write_reports(out, report, ck.model->kind());
  print_summary(ck.model->kind(), report);
  return 0;
}

int predict_cmd(const fs::path& checkpoint, const fs::path& window_csv) {
  auto ck = load_checkpoint(checkpoint);
  if (!ck.graph) throw DataError("checkpoint has no graph manifest");
  const std::vector<WindowSample> windows{read_window_csv(window_csv, *ck.graph)};
  const std::vector<std::size_t> idx{0};
  const auto kn = predict_kn(*ck.model, ck.normalization, windows, idx, 1);
  std::cout << csv::format_fixed(kn[0][0], 6) << ',' << csv::format_fixed(kn[0][1], 6) << '\n';
  return 0;
}

int experiment_cmd(const CommonOptions& o, const std::vector<std::string>& models, std::size_t seeds,
                   const fs::path& data, const fs::path& out) {
  auto cfg = load_config(o);
  const std::uint64_t base = o.seed.value_or(cfg.training.seed);
  const auto prepared = load_dataset(data, cfg);
  fs::create_directories(out);
  write_json(out / "config.json", cfg.to_json());
  for (const auto& name : models) {
    const auto kind = model_kind_from_string(name);
    std::vector<MetricsReport> runs;
    for (std::size_t i = 0; i < seeds; ++i) {
      const auto seed = base + i;
      auto run = run_training(kind, cfg, prepared, seed);
      const auto dir = out / (name + "_seed" + std::to_string(seed));
      fs::create_directories(dir);
      write_reports(dir, run.metrics, name);
      write_training_log(dir / "training_log.csv", run.training.log);
      print_summary(name + " seed " + std::to_string(seed), run.metrics);
      runs.push_back(std::move(run.metrics));
    }
    write_repeat_summary_csv(out / (name + "_repeats.csv"), summarize_runs(runs), name);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bearing-load virtual sensor: heterogeneous temporal GNN and 1D-CNN baseline"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string model = "htgnn";
  std::vector<std::string> models{"htgnn", "cnn"};
  std::string data, out, checkpoint, window;
  std::size_t seeds = 3;

  auto* sim = app.add_subcommand("simulate", "simulate the condition grid and write case CSVs");
  add_common(sim, common);
  sim->add_option("--out", out, "output directory")->required();

  auto* pre = app.add_subcommand("preprocess", "turn raw case CSVs into model-ready series");
  add_common(pre, common);
  pre->add_option("--data", data, "raw dataset directory")->required()->check(CLI::ExistingDirectory);
  pre->add_option("--out", out, "output directory")->required();

  auto* tr = app.add_subcommand("train", "train a model and write a checkpoint and training log");
  add_common(tr, common);
  tr->add_option("--model", model, "htgnn or cnn")->check(CLI::IsMember({"htgnn", "cnn"}));
  tr->add_option("--data", data, "raw or processed dataset directory")->required()->check(CLI::ExistingDirectory);
  tr->add_option("--out", out, "output directory")->required();

  auto* ev = app.add_subcommand("evaluate", "per-case metrics of a checkpoint on the test conditions");
  add_common(ev, common);
  ev->add_option("--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  ev->add_option("--data", data, "raw or processed dataset directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--out", out, "output directory")->required();

  auto* pr = app.add_subcommand("predict", "print F_x,F_y in kN for one window CSV");
  pr->add_option("--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  pr->add_option("--window", window, "window CSV: sensor ids and speed per time step")
      ->required()
      ->check(CLI::ExistingFile);

  auto* ex = app.add_subcommand("experiment", "repeated training over consecutive seeds");
  add_common(ex, common);
  ex->add_option("--model", models, "models to run")->check(CLI::IsMember({"htgnn", "cnn"}));
  ex->add_option("--seeds", seeds, "number of seeds")->check(CLI::PositiveNumber);
  ex->add_option("--data", data, "raw or processed dataset directory")->required()->check(CLI::ExistingDirectory);
  ex->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return app.exit(e);
  }

  try {
    if (*sim) return simulate(common, out);
    if (*pre) return preprocess_cmd(common, data, out);
    if (*tr) return train_cmd(common, model, data, out);
    if (*ev) return evaluate_cmd(common, checkpoint, data, out);
    if (*pr) return predict_cmd(checkpoint, window);
    if (*ex) return experiment_cmd(common, models, seeds, data, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
