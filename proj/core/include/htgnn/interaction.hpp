// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "htgnn/dynamics.hpp"
#include "htgnn/graph.hpp"
#include "htgnn/parameters.hpp"
#include "htgnn/tensor.hpp"

namespace htgnn {

/// A HeteroGraph replicated block-diagonally over a batch. Node n of sample b
/// has row b * nodes(type) + n.
struct GraphBatch {
  struct RelationEdges {
    std::vector<std::size_t> src;
    std::vector<std::size_t> dst;
    std::vector<double> norm;  // 1 / sqrt(d_i d_j); same-type relations only
    Tensor norm_weights;       // `norm` as a constant tensor, undefined when empty
  };

  std::size_t batch = 0;
  std::array<std::size_t, 2> nodes{};  // per sample: temperature, vibration
  std::array<RelationEdges, 4> relations;

  static GraphBatch build(const HeteroGraph& g, std::size_t batch);
  std::size_t rows(MetaType m) const;
  const RelationEdges& edges(Relation r) const { return relations[static_cast<std::size_t>(r)]; }
};

/// m_{j->i} = norm_e * (h_src W)_j for every edge e = (j, i). [E x H]
Tensor same_type_messages(const Tensor& h_src, const Tensor& weight, std::span<const std::size_t> src,
                          std::span<const double> norm);

/// Per-edge attention of target i over source j:
/// softmax over i's in-edges of a^T LeakyReLU([h_i || h_j] W_att). [E]
/// The concatenation is never formed: [h_i || h_j] W_att = h_i W_top + h_j W_bottom
/// with W_top the first width(h_dst) rows of W_att.
Tensor attention_coefficients(const Tensor& h_dst, const Tensor& h_src, const Tensor& att_weight,
                              const Tensor& att_vector, std::span<const std::size_t> src,
                              std::span<const std::size_t> dst);

/// m_{j->i} = alpha_e * (h_src W)_j. [E x H]
Tensor cross_type_messages(const Tensor& alpha, const Tensor& h_src, const Tensor& weight,
                           std::span<const std::size_t> src);

struct RelationMessages {
  Relation relation;
  Tensor messages;                    // E x H, may be undefined when E == 0
  std::span<const std::size_t> dst;  // target row per message
};

/// Updated representations per meta-type (rows = batch * nodes).
struct LayerOutput {
  Tensor temperature;
  Tensor vibration;
};

/// h_i' = SiLU(sum over relations and in-neighbours of m_{j->i}).
LayerOutput aggregate_update(std::span<const RelationMessages> messages, std::size_t temperature_rows,
                             std::size_t vibration_rows, std::size_t hidden);

/// Parameters of one message-passing layer.
struct RelationParams {
  Tensor message_weight;  // [w_src x H]
  Tensor att_weight;      // [(w_dst + w_src) x H], cross-type only
  Tensor att_vector;      // [H x 1], cross-type only
};

class InteractionLayer {
 public:
  InteractionLayer(ParameterStore& params, const std::string& prefix, std::size_t temperature_width,
                   std::size_t vibration_width, std::size_t hidden);

  /// Aggregates each relation by weighted scatter without per-edge message rows.
  LayerOutput forward(const LayerOutput& in, const GraphBatch& graph) const;
  /// Same result through explicit per-edge messages and aggregate_update.
  LayerOutput forward_messages(const LayerOutput& in, const GraphBatch& graph) const;
  /// Attention coefficients of one cross-type relation for inspection.
  Tensor attention(const LayerOutput& in, const GraphBatch& graph, Relation r) const;
  const RelationParams& params(Relation r) const { return rel_[static_cast<std::size_t>(r)]; }
  std::size_t hidden() const { return hidden_; }

 private:
  std::size_t hidden_;
  std::array<RelationParams, 4> rel_;
};

/// n_layers message-passing layers; the first consumes the encoder widths,
/// later layers the shared hidden width.
class InteractionStack {
 public:
  InteractionStack(ParameterStore& params, std::size_t temperature_width, std::size_t vibration_width,
                   std::size_t hidden, std::size_t n_layers);

  LayerOutput forward(const NodeEmbeddings& embeddings, const GraphBatch& graph) const;
  const std::vector<InteractionLayer>& layers() const { return layers_; }

 private:
  std::vector<InteractionLayer> layers_;
};

}  // namespace htgnn
