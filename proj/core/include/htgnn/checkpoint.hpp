// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <optional>

#include <nlohmann/json.hpp>

#include "htgnn/graph.hpp"
#include "htgnn/model.hpp"
#include "htgnn/rigsim.hpp"
#include "htgnn/training.hpp"

namespace htgnn {

inline constexpr const char* kCheckpointFormat = "htgnn.checkpoint";
inline constexpr int kCheckpointFormatVersion = 1;

/// Node lists (in node order) and edges of every relation.
nlohmann::json graph_to_json(const HeteroGraph& g);
HeteroGraph graph_from_json(const nlohmann::json& j);

struct Checkpoint {
  std::unique_ptr<LoadModel> model;
  std::optional<HeteroGraph> graph;
  Normalization normalization;
  PreprocessConfig preprocess;
};

/// One self-describing JSON file: model kind and config, graph manifest,
/// normalization, preprocessing, buffers and the parameter container.
void save_checkpoint(const std::filesystem::path& path, const LoadModel& model, const HeteroGraph& graph,
                     const Normalization& norm, const PreprocessConfig& preprocess);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace htgnn
