// SPDX-License-Identifier: Apache-2.0
#include "htgnn/experiment.hpp"

#include <fstream>

#include "htgnn/json_fields.hpp"

namespace htgnn {

void ExperimentConfig::validate() const {
  model.validate();
  baseline.validate();
  training.validate();
  split.validate();
  preprocess.validate();
  if (model.window != preprocess.window || baseline.window != preprocess.window) {
    throw ConfigError("model.window, baseline.window and preprocess.window must agree");
  }
  if (eval_batch_size == 0) throw ConfigError("eval_batch_size must be positive");
}

nlohmann::json ExperimentConfig::to_json() const {
  return {{"model", model.to_json()},         {"baseline", baseline.to_json()},
          {"training", training.to_json()},   {"split", split.to_json()},
          {"simulator", simulator.to_json()}, {"preprocess", preprocess.to_json()},
          {"data_seed", data_seed},           {"eval_batch_size", eval_batch_size}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  constexpr std::string_view section = "config";
  json_fields::require_known(
      j, {"model", "baseline", "training", "split", "simulator", "preprocess", "data_seed", "eval_batch_size"}, section);
  ExperimentConfig c;
  if (j.contains("model")) c.model = ModelConfig::from_json(j.at("model"));
  if (j.contains("baseline")) c.baseline = BaselineConfig::from_json(j.at("baseline"));
  if (j.contains("training")) c.training = TrainConfig::from_json(j.at("training"));
  if (j.contains("split")) c.split = SplitConfig::from_json(j.at("split"));
  if (j.contains("simulator")) c.simulator = SimulationConfig::from_json(j.at("simulator"));
  if (j.contains("preprocess")) c.preprocess = PreprocessConfig::from_json(j.at("preprocess"));
  json_fields::read(j, "data_seed", c.data_seed, section);
  json_fields::read(j, "eval_batch_size", c.eval_batch_size, section);
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

ModelKind model_kind_from_string(std::string_view name) {
  if (name == "htgnn") return ModelKind::Htgnn;
  if (name == "cnn") return ModelKind::Cnn;
  throw ConfigError("unknown model '" + std::string(name) + "', expected htgnn or cnn");
}

std::string_view to_string(ModelKind kind) { return kind == ModelKind::Htgnn ? "htgnn" : "cnn"; }

PreparedData prepare_data(const ExperimentConfig& cfg, const RigLayout& layout,
                          std::span<const CaseRecording> recordings) {
  cfg.validate();
  std::vector<ProcessedCase> cases;
  cases.reserve(recordings.size());
  for (std::size_t id = 0; id < recordings.size(); ++id) cases.push_back(preprocess(recordings[id], id, cfg.preprocess));
  return prepare_processed(cfg, layout, cases);
}

PreparedData prepare_processed(const ExperimentConfig& cfg, const RigLayout& layout,
                               std::span<const ProcessedCase> cases) {
  cfg.validate();
  if (cases.empty()) throw DataError("dataset has no cases");
  PreparedData data;
  data.layout = layout;
  data.graph.emplace(build_bearing_graph(layout));
  data.plan = make_split(cases.size(), cfg.split);
  for (std::size_t id = 0; id < cases.size(); ++id) {
    const auto& pc = cases[id];
    if (pc.case_id != id) throw DataError("case ids must be 0..n-1 in order, found " + std::to_string(pc.case_id));
    data.conditions.push_back(pc.condition);
    data.case_length.push_back(pc.length());
    auto w = window_slice(pc, *data.graph, cfg.preprocess.window, cfg.preprocess.stride, !data.plan.is_unseen(id));
    data.windows.insert(data.windows.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
  }
  data.assignment = assign_windows(data.windows, data.case_length, data.plan);
  return data;
}

std::unique_ptr<LoadModel> make_model(ModelKind kind, const ExperimentConfig& cfg, const HeteroGraph& graph) {
  if (kind == ModelKind::Htgnn) return std::make_unique<HtgnnModel>(cfg.model, graph);
  return std::make_unique<CnnBaseline>(cfg.baseline, graph.num_nodes(MetaType::Temperature),
                                       graph.num_nodes(MetaType::Vibration));
}

RunOutput run_training(ModelKind kind, const ExperimentConfig& cfg, const PreparedData& data, std::uint64_t seed) {
  RunOutput out;
  out.model = make_model(kind, cfg, *data.graph);
  out.normalization = Normalization::fit(data.windows, data.assignment.train);
  std::vector<WindowSample> standardized;
  standardized.reserve(data.windows.size());
  for (const auto& w : data.windows) standardized.push_back(out.normalization.apply(w));
  auto tc = cfg.training;
  tc.seed = seed;
  out.training = train(*out.model, standardized, data.assignment.train, data.assignment.validation, tc);
  out.metrics = evaluate(*out.model, out.normalization, data.windows, data.assignment.test, data.conditions,
                         cfg.eval_batch_size);
  return out;
}

}  // namespace htgnn
