// SPDX-License-Identifier: Apache-2.0
#include "htgnn/checkpoint.hpp"

#include <fstream>

#include "htgnn/baseline.hpp"

namespace htgnn {

namespace {

nlohmann::json nodes_json(std::span<const SensorNode> nodes) {
  auto arr = nlohmann::json::array();
  for (const auto& n : nodes) {
    arr.push_back({{"id", n.id}, {"subtype", to_string(n.subtype)}, {"bearing", n.bearing}, {"angle_deg", n.angle_deg}});
  }
  return arr;
}

std::vector<SensorNode> nodes_from_json(const nlohmann::json& arr) {
  std::vector<SensorNode> out;
  for (const auto& n : arr) {
    out.push_back({n.at("id").get<std::string>(), subtype_from_string(n.at("subtype").get<std::string>()),
                   n.at("bearing").get<int>(), n.at("angle_deg").get<double>()});
  }
  return out;
}

}  // namespace

nlohmann::json graph_to_json(const HeteroGraph& g) {
  nlohmann::json edges = nlohmann::json::object();
  for (auto r : kRelations) {
    auto list = nlohmann::json::array();
    for (const auto& e : g.edges(r)) list.push_back({e.src, e.dst});
    edges[std::string(relation_info(r).name)] = list;
  }
  return {{"temperature", nodes_json(g.nodes(MetaType::Temperature))},
          {"vibration", nodes_json(g.nodes(MetaType::Vibration))},
          {"edges", edges}};
}

HeteroGraph graph_from_json(const nlohmann::json& j) {
  try {
    std::array<std::vector<Edge>, 4> edges;
    for (auto r : kRelations) {
      for (const auto& e : j.at("edges").at(std::string(relation_info(r).name))) {
        edges[static_cast<std::size_t>(r)].push_back({e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>()});
      }
    }
    return HeteroGraph(nodes_from_json(j.at("temperature")), nodes_from_json(j.at("vibration")), std::move(edges));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed graph manifest: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const LoadModel& model, const HeteroGraph& graph,
                     const Normalization& norm, const PreprocessConfig& preprocess) {
  nlohmann::json j = {{"format", kCheckpointFormat},
                      {"version", kCheckpointFormatVersion},
                      {"model", std::string(model.kind())},
                      {"config", model.config_json()},
                      {"graph", graph_to_json(graph)},
                      {"normalization", norm.to_json()},
                      {"preprocess", preprocess.to_json()},
                      {"buffers", model.buffers_json()},
                      {"parameters", model.parameters().to_json()}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump() << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (j.value("format", "") != kCheckpointFormat || j.value("version", 0) != kCheckpointFormatVersion) {
    throw DataError(path.string() + " is not a version " + std::to_string(kCheckpointFormatVersion) + " checkpoint");
  }
  Checkpoint ck;
  ck.graph.emplace(graph_from_json(j.at("graph")));
  ck.normalization = Normalization::from_json(j.at("normalization"));
  ck.preprocess = PreprocessConfig::from_json(j.at("preprocess"));
  const auto kind = j.at("model").get<std::string>();
  if (kind == "htgnn") {
    ck.model = std::make_unique<HtgnnModel>(ModelConfig::from_json(j.at("config")), *ck.graph);
  } else if (kind == "cnn") {
    auto cfg = j.at("config");
    const auto nt = cfg.at("temperature_nodes").get<std::size_t>();
    const auto nv = cfg.at("vibration_nodes").get<std::size_t>();
    cfg.erase("temperature_nodes");
    cfg.erase("vibration_nodes");
    ck.model = std::make_unique<CnnBaseline>(BaselineConfig::from_json(cfg), nt, nv);
  } else {
    throw DataError("unknown model kind '" + kind + "' in " + path.string());
  }
  ck.model->parameters().load_json(j.at("parameters"));
  ck.model->load_buffers(j.at("buffers"));
  return ck;
}

}  // namespace htgnn
