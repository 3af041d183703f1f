// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <memory>
#include <random>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "htgnn/dynamics.hpp"
#include "htgnn/graph.hpp"
#include "htgnn/interaction.hpp"
#include "htgnn/parameters.hpp"
#include "htgnn/sample.hpp"
#include "htgnn/tensor.hpp"

namespace htgnn {

struct ModelConfig {
  std::size_t node_embedding_dim = 10;  // d_w = d_T = d_V
  std::size_t gnn_layers = 3;
  std::size_t gnn_hidden = 80;
  std::size_t head_hidden = 40;
  std::size_t head_layers = 2;  // linear layers in the head, the last one emits the output
  std::size_t window = 30;
  std::size_t output_dim = 2;

  void validate() const;
  EncoderConfig encoder() const;

  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys raise ConfigError.
  static ModelConfig from_json(const nlohmann::json& j);
};

/// Common interface of the graph model and the CNN baseline. Predictions are
/// in the (standardized) target space the model was trained in.
class LoadModel {
 public:
  virtual ~LoadModel() = default;

  virtual std::string_view kind() const = 0;
  /// [B x output_dim]. `training` enables dropout and batch statistics.
  virtual Tensor forward(const BatchTensors& batch, bool training) = 0;

  ParameterStore& parameters() { return params_; }
  const ParameterStore& parameters() const { return params_; }

  virtual nlohmann::json config_json() const = 0;
  /// Non-trainable state (batch-norm running statistics).
  virtual nlohmann::json buffers_json() const { return nlohmann::json::object(); }
  virtual void load_buffers(const nlohmann::json&) {}
  virtual std::vector<std::vector<double>> buffer_snapshot() const { return {}; }
  virtual void restore_buffers(const std::vector<std::vector<double>>&) {}

  /// Re-seeds the stream used by stochastic layers.
  void seed(std::uint64_t s) { rng_.seed(s); }

 protected:
  ParameterStore params_;
  std::mt19937_64 rng_{0};
};

/// f(X_T, X_V, w) -> y: dynamics encoders, message passing, flatten in the
/// graph's canonical node order, MLP head.
class HtgnnModel final : public LoadModel {
 public:
  HtgnnModel(const ModelConfig& cfg, HeteroGraph graph);

  std::string_view kind() const override { return "htgnn"; }
  Tensor forward(const BatchTensors& batch, bool training) override;
  nlohmann::json config_json() const override { return cfg_.to_json(); }

  /// Final node representations before flattening.
  LayerOutput node_states(const BatchTensors& batch) const;
  /// [B x (N_T + N_V) * gnn_hidden].
  Tensor flatten(const LayerOutput& states, std::size_t batch) const;
  std::size_t flatten_width() const;

  const ModelConfig& config() const { return cfg_; }
  const HeteroGraph& graph() const { return graph_; }
  const DynamicsExtractor& dynamics() const { return dynamics_; }
  const InteractionStack& interaction() const { return interaction_; }

 private:
  void check_batch(const BatchTensors& batch) const;

  ModelConfig cfg_;
  HeteroGraph graph_;
  DynamicsExtractor dynamics_;
  InteractionStack interaction_;
  std::vector<Tensor> head_weights_;
  std::vector<Tensor> head_biases_;
};

/// Mean over samples of the per-sample sum of absolute errors.
Tensor l1_loss(const Tensor& prediction, const Tensor& target);

/// Trainable scalars of an HtgnnModel with this config on this graph.
std::size_t parameter_count(const ModelConfig& cfg, const HeteroGraph& graph);

}  // namespace htgnn
