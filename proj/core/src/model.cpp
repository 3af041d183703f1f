// SPDX-License-Identifier: Apache-2.0
#include "htgnn/model.hpp"

#include "htgnn/json_fields.hpp"
#include "htgnn/ops.hpp"

namespace htgnn {

void ModelConfig::validate() const {
  if (node_embedding_dim == 0 || gnn_hidden == 0 || head_hidden == 0 || window == 0 || output_dim == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (gnn_layers < 1) throw ConfigError("model needs at least one GNN layer");
  if (head_layers < 1) throw ConfigError("model head needs at least one layer");
  encoder().validate();
}

EncoderConfig ModelConfig::encoder() const {
  EncoderConfig e;
  e.window = window;
  e.speed_dim = e.temperature_dim = e.vibration_dim = node_embedding_dim;
  return e;
}

nlohmann::json ModelConfig::to_json() const {
  return {{"node_embedding_dim", node_embedding_dim}, {"gnn_layers", gnn_layers},
          {"gnn_hidden", gnn_hidden},                 {"head_hidden", head_hidden},
          {"head_layers", head_layers},               {"window", window},
          {"output_dim", output_dim}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  constexpr std::string_view section = "model";
  json_fields::require_known(j, {"node_embedding_dim", "gnn_layers", "gnn_hidden", "head_hidden",
                                 "head_layers", "window", "output_dim"},
                             section);
  ModelConfig c;
  json_fields::read(j, "node_embedding_dim", c.node_embedding_dim, section);
  json_fields::read(j, "gnn_layers", c.gnn_layers, section);
  json_fields::read(j, "gnn_hidden", c.gnn_hidden, section);
  json_fields::read(j, "head_hidden", c.head_hidden, section);
  json_fields::read(j, "head_layers", c.head_layers, section);
  json_fields::read(j, "window", c.window, section);
  json_fields::read(j, "output_dim", c.output_dim, section);
  c.validate();
  return c;
}

namespace {

const ModelConfig& validated(const ModelConfig& cfg) {
  cfg.validate();
  return cfg;
}

}  // namespace

HtgnnModel::HtgnnModel(const ModelConfig& cfg, HeteroGraph graph)
    : cfg_(validated(cfg)),
      graph_(std::move(graph)),
      dynamics_(params_, cfg_.encoder()),
      interaction_(params_, cfg_.node_embedding_dim, 2 * cfg_.node_embedding_dim, cfg_.gnn_hidden,
                   cfg_.gnn_layers) {
  std::size_t in = flatten_width();
  for (std::size_t l = 0; l < cfg_.head_layers; ++l) {
    const bool last = l + 1 == cfg_.head_layers;
    const std::size_t out = last ? cfg_.output_dim : cfg_.head_hidden;
    const auto base = "head.layer" + std::to_string(l);
    head_weights_.push_back(params_.add(base + ".weight", {in, out}, in));
    head_biases_.push_back(params_.add(base + ".bias", {out}, in));
    in = out;
  }
}

std::size_t HtgnnModel::flatten_width() const {
  return (graph_.num_nodes(MetaType::Temperature) + graph_.num_nodes(MetaType::Vibration)) *
         cfg_.gnn_hidden;
}

void HtgnnModel::check_batch(const BatchTensors& batch) const {
  const std::size_t b = batch.batch, nt = graph_.num_nodes(MetaType::Temperature),
                    nv = graph_.num_nodes(MetaType::Vibration), l = cfg_.window;
  auto expect = [&](const Tensor& t, const Shape& shape, const char* what) {
    if (!t.defined() || t.shape() != shape) {
      throw DimensionError(std::string(what) + " input has shape " +
                           (t.defined() ? shape_string(t.shape()) : std::string("<none>")) + ", graph and window need " +
                           shape_string(shape));
    }
  };
  if (b == 0) throw DimensionError("empty batch");
  expect(batch.temperature, {b * nt, l}, "temperature");
  expect(batch.vibration, {b * nv, l}, "vibration");
  expect(batch.speed, {b, l}, "speed");
}

LayerOutput HtgnnModel::node_states(const BatchTensors& batch) const {
  check_batch(batch);
  const auto embeddings =
      dynamics_.forward(batch.temperature, batch.vibration, batch.speed,
                        graph_.num_nodes(MetaType::Temperature), graph_.num_nodes(MetaType::Vibration));
  return interaction_.forward(embeddings, GraphBatch::build(graph_, batch.batch));
}

Tensor HtgnnModel::flatten(const LayerOutput& states, std::size_t batch) const {
  const std::size_t nt = graph_.num_nodes(MetaType::Temperature), nv = graph_.num_nodes(MetaType::Vibration);
  const auto t_order = graph_.flatten_order(MetaType::Temperature);
  const auto v_order = graph_.flatten_order(MetaType::Vibration);
  // Rows of concat_rows: all temperature rows, then all vibration rows.
  std::vector<std::size_t> index;
  index.reserve(batch * (nt + nv));
  for (std::size_t b = 0; b < batch; ++b) {
    for (auto k : t_order) index.push_back(b * nt + k);
    for (auto k : v_order) index.push_back(batch * nt + b * nv + k);
  }
  auto rows = gather_rows(concat_rows(states.temperature, states.vibration), index);
  return reshape(rows, {batch, flatten_width()});
}

Tensor HtgnnModel::forward(const BatchTensors& batch, bool /*training*/) {
  auto x = flatten(node_states(batch), batch.batch);
  for (std::size_t l = 0; l < head_weights_.size(); ++l) {
    x = linear(x, head_weights_[l], head_biases_[l]);
    if (l + 1 < head_weights_.size()) x = silu(x);
  }
  return x;
}

Tensor l1_loss(const Tensor& prediction, const Tensor& target) {
  if (!prediction.defined() || !target.defined() || prediction.shape() != target.shape()) {
    throw DimensionError("l1_loss: prediction and target shapes differ");
  }
  if (prediction.rank() != 2 || prediction.dim(0) == 0) throw DimensionError("l1_loss: need M >= 1 samples");
  return scale(sum(abs(sub(prediction, target))), 1.0 / static_cast<double>(prediction.dim(0)));
}

std::size_t parameter_count(const ModelConfig& cfg, const HeteroGraph& graph) {
  return HtgnnModel(cfg, graph).parameters().scalar_count();
}

}  // namespace htgnn
