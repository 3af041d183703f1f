// SPDX-License-Identifier: Apache-2.0
#include "htgnn/interaction.hpp"

#include "htgnn/ops.hpp"

namespace htgnn {

namespace {

std::size_t type_index(MetaType m) { return m == MetaType::Temperature ? 0 : 1; }

const char* relation_tag(Relation r) {
  switch (r) {
    case Relation::TT: return "TT";
    case Relation::VV: return "VV";
    case Relation::TV: return "TV";
    case Relation::VT: return "VT";
  }
  return "?";
}

const Tensor& pick(const LayerOutput& h, MetaType m) {
  return m == MetaType::Temperature ? h.temperature : h.vibration;
}

}  // namespace

GraphBatch GraphBatch::build(const HeteroGraph& g, std::size_t batch) {
  if (batch == 0) throw DimensionError("graph batch of size 0");
  GraphBatch out;
  out.batch = batch;
  out.nodes = {g.num_nodes(MetaType::Temperature), g.num_nodes(MetaType::Vibration)};
  for (auto r : kRelations) {
    const auto& info = relation_info(r);
    const auto edges = g.edges(r);
    auto& rel = out.relations[static_cast<std::size_t>(r)];
    std::vector<double> norm;
    if (info.same_type()) {
      const auto degrees = degree_normalizers(g, r);
      for (const auto& e : edges) norm.push_back(degrees.normalizer(e.dst, e.src));
    }
    const std::size_t ns = out.nodes[type_index(info.source)], nd = out.nodes[type_index(info.target)];
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t k = 0; k < edges.size(); ++k) {
        rel.src.push_back(b * ns + edges[k].src);
        rel.dst.push_back(b * nd + edges[k].dst);
        if (info.same_type()) rel.norm.push_back(norm[k]);
      }
    }
    if (!rel.norm.empty()) rel.norm_weights = Tensor::from({rel.norm.size()}, rel.norm);
  }
  return out;
}

std::size_t GraphBatch::rows(MetaType m) const { return batch * nodes[type_index(m)]; }

Tensor same_type_messages(const Tensor& h_src, const Tensor& weight, std::span<const std::size_t> src,
                          std::span<const double> norm) {
  if (norm.size() != src.size()) {
    throw LayoutError("degree normalizers missing for " + std::to_string(src.size() - norm.size()) +
                      " edges");
  }
  if (src.empty()) return {};
  return scale_rows(gather_rows(matmul(h_src, weight), src), norm);
}

Tensor attention_coefficients(const Tensor& h_dst, const Tensor& h_src, const Tensor& att_weight,
                              const Tensor& att_vector, std::span<const std::size_t> src,
                              std::span<const std::size_t> dst) {
  if (src.size() != dst.size()) throw DimensionError("attention: src/dst edge lists differ in length");
  if (src.empty()) return {};
  const std::size_t w_dst = h_dst.dim(1), w_src = h_src.dim(1);
  if (att_weight.rank() != 2 || att_weight.dim(0) != w_dst + w_src) {
    throw DimensionError("attention weight " + shape_string(att_weight.shape()) + " does not match widths " +
                         std::to_string(w_dst) + " + " + std::to_string(w_src));
  }
  auto dst_proj = matmul(h_dst, slice_rows(att_weight, 0, w_dst));
  auto src_proj = matmul(h_src, slice_rows(att_weight, w_dst, w_src));
  auto scores = edge_attention_scores(dst_proj, src_proj, att_vector, src, dst);
  return segment_softmax(scores, dst, h_dst.dim(0));
}

Tensor cross_type_messages(const Tensor& alpha, const Tensor& h_src, const Tensor& weight,
                           std::span<const std::size_t> src) {
  if (src.empty() && !alpha.defined()) return {};
  if (!alpha.defined() || alpha.size() != src.size()) {
    throw DimensionError("cross-type messages: " +
                         std::to_string(alpha.defined() ? alpha.size() : 0) +
                         " attention weights for " + std::to_string(src.size()) + " edges");
  }
  return mul_rows(gather_rows(matmul(h_src, weight), src), alpha);
}

LayerOutput aggregate_update(std::span<const RelationMessages> messages, std::size_t temperature_rows,
                             std::size_t vibration_rows, std::size_t hidden) {
  std::array<Tensor, 2> total;
  const std::array<std::size_t, 2> rows{temperature_rows, vibration_rows};
  for (const auto& m : messages) {
    if (!m.messages.defined()) continue;
    if (m.messages.rank() != 2 || m.messages.dim(1) != hidden) {
      throw DimensionError("relation " + std::string(relation_info(m.relation).name) +
                           " produced messages of shape " + shape_string(m.messages.shape()) +
                           ", expected width " + std::to_string(hidden));
    }
    const auto t = type_index(relation_info(m.relation).target);
    auto summed = scatter_add_rows(m.messages, m.dst, rows[t]);
    total[t] = total[t].defined() ? add(total[t], summed) : summed;
  }
  for (std::size_t t = 0; t < 2; ++t) {
    total[t] = total[t].defined() ? silu(total[t]) : Tensor::zeros({rows[t], hidden});
  }
  return {total[0], total[1]};
}

InteractionLayer::InteractionLayer(ParameterStore& params, const std::string& prefix,
                                   std::size_t temperature_width, std::size_t vibration_width,
                                   std::size_t hidden)
    : hidden_(hidden) {
  if (hidden == 0) throw ConfigError("GNN hidden dimension must be positive");
  const std::array<std::size_t, 2> width{temperature_width, vibration_width};
  for (auto r : kRelations) {
    const auto& info = relation_info(r);
    const auto base = prefix + "." + relation_tag(r);
    const auto w_src = width[type_index(info.source)];
    auto& p = rel_[static_cast<std::size_t>(r)];
    p.message_weight = params.add(base + ".W_msg", {w_src, hidden}, w_src, Init::Glorot);
    if (!info.same_type()) {
      const auto w_pair = width[type_index(info.target)] + w_src;
      p.att_weight = params.add(base + ".W_att", {w_pair, hidden}, w_pair, Init::Glorot);
      p.att_vector = params.add(base + ".a", {hidden, 1}, hidden, Init::Glorot);
    }
  }
}

Tensor InteractionLayer::attention(const LayerOutput& in, const GraphBatch& graph, Relation r) const {
  const auto& info = relation_info(r);
  if (info.same_type()) throw LayoutError("attention is defined for cross-type relations only");
  const auto& p = params(r);
  const auto& e = graph.edges(r);
  return attention_coefficients(pick(in, info.target), pick(in, info.source), p.att_weight,
                                p.att_vector, e.src, e.dst);
}

namespace {

void check_rows(const LayerOutput& in, const GraphBatch& graph) {
  if (in.temperature.dim(0) != graph.rows(MetaType::Temperature) ||
      in.vibration.dim(0) != graph.rows(MetaType::Vibration)) {
    throw DimensionError("layer input rows do not match the batched graph");
  }
}

}  // namespace

LayerOutput InteractionLayer::forward(const LayerOutput& in, const GraphBatch& graph) const {
  check_rows(in, graph);
  std::array<Tensor, 2> total;
  for (auto r : kRelations) {
    const auto& info = relation_info(r);
    const auto& e = graph.edges(r);
    if (e.src.empty()) continue;
    const auto weights = info.same_type() ? e.norm_weights : attention(in, graph, r);
    const auto t = type_index(info.target);
    auto summed = weighted_scatter_rows(matmul(pick(in, info.source), params(r).message_weight), weights, e.src,
                                        e.dst, graph.rows(info.target));
    total[t] = total[t].defined() ? add(total[t], summed) : summed;
  }
  const std::array<std::size_t, 2> rows{graph.rows(MetaType::Temperature), graph.rows(MetaType::Vibration)};
  for (std::size_t t = 0; t < 2; ++t) {
    total[t] = total[t].defined() ? silu(total[t]) : Tensor::zeros({rows[t], hidden_});
  }
  return {total[0], total[1]};
}

LayerOutput InteractionLayer::forward_messages(const LayerOutput& in, const GraphBatch& graph) const {
  check_rows(in, graph);
  std::vector<RelationMessages> messages;
  for (auto r : kRelations) {
    const auto& info = relation_info(r);
    const auto& p = params(r);
    const auto& e = graph.edges(r);
    Tensor m;
    if (info.same_type()) {
      m = same_type_messages(pick(in, info.source), p.message_weight, e.src, e.norm);
    } else {
      m = cross_type_messages(attention(in, graph, r), pick(in, info.source), p.message_weight, e.src);
    }
    messages.push_back({r, m, e.dst});
  }
  return aggregate_update(messages, graph.rows(MetaType::Temperature), graph.rows(MetaType::Vibration),
                          hidden_);
}

InteractionStack::InteractionStack(ParameterStore& params, std::size_t temperature_width,
                                   std::size_t vibration_width, std::size_t hidden,
                                   std::size_t n_layers) {
  if (n_layers < 1) throw ConfigError("need at least one GNN layer");
  for (std::size_t l = 0; l < n_layers; ++l) {
    layers_.emplace_back(params, "interaction.layer" + std::to_string(l),
                         l == 0 ? temperature_width : hidden, l == 0 ? vibration_width : hidden, hidden);
  }
}

LayerOutput InteractionStack::forward(const NodeEmbeddings& embeddings, const GraphBatch& graph) const {
  LayerOutput h{embeddings.temperature, embeddings.vibration};
  for (const auto& layer : layers_) h = layer.forward(h, graph);
  return h;
}

}  // namespace htgnn
