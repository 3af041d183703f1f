// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "htgnn/baseline.hpp"
#include "htgnn/metrics.hpp"
#include "htgnn/model.hpp"
#include "htgnn/rigsim.hpp"
#include "htgnn/split.hpp"
#include "htgnn/training.hpp"

namespace htgnn {

/// Every tunable of a run. JSON sections: model, baseline, training, split,
/// simulator, preprocess, plus data_seed and eval_batch_size.
struct ExperimentConfig {
  ModelConfig model;
  BaselineConfig baseline;
  TrainConfig training;
  SplitConfig split;
  SimulationConfig simulator;
  PreprocessConfig preprocess;
  std::uint64_t data_seed = 7;
  std::size_t eval_batch_size = 512;

  /// Throws ConfigError when model, baseline and preprocessing windows differ.
  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
};

enum class ModelKind { Htgnn, Cnn };
ModelKind model_kind_from_string(std::string_view name);
std::string_view to_string(ModelKind kind);

/// Windows of a dataset with its split applied.
struct PreparedData {
  RigLayout layout;
  std::optional<HeteroGraph> graph;
  std::vector<OperatingCondition> conditions;  // by case id
  std::vector<std::size_t> case_length;        // processed samples per case
  std::vector<WindowSample> windows;           // raw units, seen flag set
  SplitPlan plan;
  WindowAssignment assignment;
};

/// Preprocesses raw recordings (case id = position) and slices them.
PreparedData prepare_data(const ExperimentConfig& cfg, const RigLayout& layout,
                          std::span<const CaseRecording> recordings);
/// Same from already processed cases; case ids must equal positions.
PreparedData prepare_processed(const ExperimentConfig& cfg, const RigLayout& layout,
                               std::span<const ProcessedCase> cases);

std::unique_ptr<LoadModel> make_model(ModelKind kind, const ExperimentConfig& cfg, const HeteroGraph& graph);

struct RunOutput {
  std::unique_ptr<LoadModel> model;
  Normalization normalization;
  TrainResult training;
  MetricsReport metrics;
};

/// Fits normalization on the training windows, trains with `seed` and
/// evaluates on the test windows.
RunOutput run_training(ModelKind kind, const ExperimentConfig& cfg, const PreparedData& data, std::uint64_t seed);

}  // namespace htgnn
