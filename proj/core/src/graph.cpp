// SPDX-License-Identifier: Apache-2.0
#include "htgnn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

#include "htgnn/csv.hpp"
#include "htgnn/error.hpp"

namespace htgnn {

namespace {

constexpr std::array<RelationInfo, 4> kRelationInfo{{
    {"T-T", MetaType::Temperature, MetaType::Temperature, false},
    {"V-V", MetaType::Vibration, MetaType::Vibration, false},
    {"T-V", MetaType::Temperature, MetaType::Vibration, true},
    {"V-T", MetaType::Vibration, MetaType::Temperature, true},
}};

std::size_t index_of(MetaType m) { return m == MetaType::Temperature ? 0 : 1; }
std::size_t index_of(Relation r) { return static_cast<std::size_t>(r); }

int subtype_rank(Subtype s) {
  return (s == Subtype::OuterRing || s == Subtype::Axial) ? 0 : 1;
}

bool canonical_less(const SensorNode& a, const SensorNode& b) {
  if (a.bearing != b.bearing) return a.bearing < b.bearing;
  if (subtype_rank(a.subtype) != subtype_rank(b.subtype)) {
    return subtype_rank(a.subtype) < subtype_rank(b.subtype);
  }
  if (a.angle_deg != b.angle_deg) return a.angle_deg < b.angle_deg;
  return a.id < b.id;
}

bool same_angle(double a, double b) { return angular_distance_deg(a, b) < 1e-9; }

void add_undirected(std::vector<Edge>& edges, std::size_t a, std::size_t b) {
  edges.push_back({a, b});
  if (a != b) edges.push_back({b, a});
}

void dedupe(std::vector<Edge>& edges) {
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    return std::tie(x.dst, x.src) < std::tie(y.dst, y.src);
  });
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

void add_self_loops(std::vector<Edge>& edges, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) edges.push_back({i, i});
}

}  // namespace

const RelationInfo& relation_info(Relation r) { return kRelationInfo[index_of(r)]; }

Relation relation_from_string(std::string_view name) {
  for (auto r : kRelations) {
    if (relation_info(r).name == name) return r;
  }
  throw LayoutError("unknown relation '" + std::string(name) + "'");
}

MetaType meta_of(Subtype s) {
  return (s == Subtype::InnerRing || s == Subtype::OuterRing) ? MetaType::Temperature
                                                              : MetaType::Vibration;
}

std::string_view to_string(MetaType m) { return m == MetaType::Temperature ? "T" : "V"; }

std::string_view to_string(Subtype s) {
  switch (s) {
    case Subtype::InnerRing: return "T_IR";
    case Subtype::OuterRing: return "T_OR";
    case Subtype::Axial: return "V_AX";
    case Subtype::Radial: return "V_RA";
  }
  return "?";
}

Subtype subtype_from_string(std::string_view name) {
  for (auto s : {Subtype::InnerRing, Subtype::OuterRing, Subtype::Axial, Subtype::Radial}) {
    if (to_string(s) == name) return s;
  }
  throw LayoutError("unknown sensor subtype '" + std::string(name) + "'");
}

double angular_distance_deg(double a, double b) {
  double d = std::fmod(std::abs(a - b), 360.0);
  return std::min(d, 360.0 - d);
}

// ---------------------------------------------------------------- RigLayout

RigLayout RigLayout::two_bearing_default() {
  RigLayout layout;
  auto add = [&](Subtype s, int bearing, int angle) {
    layout.sensors.push_back(
        {"B" + std::to_string(bearing) + "_" + std::string(to_string(s)) + "_" + std::to_string(angle),
         s, bearing, static_cast<double>(angle)});
  };
  for (int b = 1; b <= 2; ++b) {
    for (int a = 0; a < 360; a += 45) add(Subtype::OuterRing, b, a);
    for (int a : {90, 270}) add(Subtype::InnerRing, b, a);
    for (int a : {0, 90, 180, 270}) add(Subtype::Axial, b, a);
    for (int a : {0, 180}) add(Subtype::Radial, b, a);
  }
  return layout;
}

RigLayout RigLayout::read_csv(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const auto c_id = table.column("sensor_id"), c_meta = table.column("meta"),
             c_sub = table.column("subtype"), c_bearing = table.column("bearing"),
             c_angle = table.column("angle_deg");
  RigLayout layout;
  for (const auto& row : table.rows) {
    SensorNode node{row[c_id], subtype_from_string(row[c_sub]),
                    static_cast<int>(csv::to_long(row[c_bearing])), csv::to_double(row[c_angle])};
    if (to_string(node.meta()) != row[c_meta]) {
      throw LayoutError("sensor '" + node.id + "': subtype " + row[c_sub] +
                        " inconsistent with meta " + row[c_meta]);
    }
    layout.sensors.push_back(std::move(node));
  }
  layout.validate();
  return layout;
}

void RigLayout::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "sensor_id,meta,subtype,bearing,angle_deg\n";
  for (const auto& s : sensors) {
    out << s.id << ',' << to_string(s.meta()) << ',' << to_string(s.subtype) << ',' << s.bearing
        << ',' << csv::format(s.angle_deg) << '\n';
  }
}

void RigLayout::validate() const {
  if (count(MetaType::Temperature) == 0 || count(MetaType::Vibration) == 0) {
    throw LayoutError("layout needs at least one temperature and one vibration sensor");
  }
  std::set<std::string> ids;
  for (const auto& s : sensors) {
    if (s.id.empty() || s.id.find(',') != std::string::npos) {
      throw LayoutError("invalid sensor id '" + s.id + "'");
    }
    if (!ids.insert(s.id).second) throw LayoutError("duplicate sensor id '" + s.id + "'");
    if (s.bearing < 1) throw LayoutError("sensor '" + s.id + "': bearing must be >= 1");
    if (!(s.angle_deg >= 0.0 && s.angle_deg < 360.0)) {
      throw LayoutError("sensor '" + s.id + "': angle must lie in [0, 360)");
    }
  }
}

std::size_t RigLayout::count(MetaType m) const {
  return static_cast<std::size_t>(
      std::count_if(sensors.begin(), sensors.end(), [m](const SensorNode& s) { return s.meta() == m; }));
}

std::vector<SensorNode> canonical_nodes(const RigLayout& layout, MetaType m) {
  std::vector<SensorNode> out;
  for (const auto& s : layout.sensors) {
    if (s.meta() == m) out.push_back(s);
  }
  std::sort(out.begin(), out.end(), canonical_less);
  return out;
}

// ---------------------------------------------------------------- HeteroGraph

HeteroGraph::HeteroGraph(std::vector<SensorNode> temperature, std::vector<SensorNode> vibration,
                         std::array<std::vector<Edge>, 4> edges)
    : nodes_{std::move(temperature), std::move(vibration)}, edges_(std::move(edges)) {
  for (auto m : kMetaTypes) {
    for (const auto& n : nodes_[index_of(m)]) {
      if (n.meta() != m) throw LayoutError("node '" + n.id + "' stored under the wrong meta-type");
    }
  }
  for (auto r : kRelations) {
    const auto& info = relation_info(r);
    auto& list = edges_[index_of(r)];
    for (const auto& e : list) {
      if (e.src >= num_nodes(info.source) || e.dst >= num_nodes(info.target)) {
        throw LayoutError("edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) +
                          ") out of range for relation " + std::string(info.name));
      }
    }
    dedupe(list);
    if (!info.directed) {
      for (const auto& e : list) {
        if (!std::binary_search(list.begin(), list.end(), Edge{e.dst, e.src},
                                [](const Edge& x, const Edge& y) {
                                  return std::tie(x.dst, x.src) < std::tie(y.dst, y.src);
                                })) {
          throw LayoutError("undirected relation " + std::string(info.name) +
                            " lacks the mirror of an edge");
        }
      }
    }
  }
}

std::span<const SensorNode> HeteroGraph::nodes(MetaType m) const { return nodes_[index_of(m)]; }
std::span<const Edge> HeteroGraph::edges(Relation r) const { return edges_[index_of(r)]; }

std::vector<std::size_t> HeteroGraph::neighbors(Relation r, std::size_t target) const {
  if (target >= num_nodes(relation_info(r).target)) {
    throw LayoutError("node " + std::to_string(target) + " is not a target of relation " +
                      std::string(relation_info(r).name));
  }
  std::vector<std::size_t> out;
  for (const auto& e : edges(r)) {
    if (e.dst == target) out.push_back(e.src);
  }
  return out;
}

std::vector<std::size_t> HeteroGraph::flatten_order(MetaType m) const {
  const auto list = nodes(m);
  std::vector<std::size_t> order(list.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return canonical_less(list[a], list[b]); });
  return order;
}

std::optional<std::size_t> HeteroGraph::find(MetaType m, std::string_view id) const {
  const auto list = nodes(m);
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (list[i].id == id) return i;
  }
  return std::nullopt;
}

HeteroGraph HeteroGraph::relabeled(std::span<const std::size_t> temperature_order,
                                   std::span<const std::size_t> vibration_order) const {
  std::array<std::span<const std::size_t>, 2> orders{temperature_order, vibration_order};
  std::array<std::vector<std::size_t>, 2> new_index;
  std::array<std::vector<SensorNode>, 2> new_nodes;
  for (std::size_t t = 0; t < 2; ++t) {
    const auto& old = nodes_[t];
    if (orders[t].size() != old.size()) throw LayoutError("relabel: permutation size mismatch");
    new_index[t].assign(old.size(), old.size());
    for (std::size_t k = 0; k < old.size(); ++k) {
      const auto o = orders[t][k];
      if (o >= old.size() || new_index[t][o] != old.size()) {
        throw LayoutError("relabel: not a permutation");
      }
      new_index[t][o] = k;
      new_nodes[t].push_back(old[o]);
    }
  }
  std::array<std::vector<Edge>, 4> new_edges;
  for (auto r : kRelations) {
    const auto& info = relation_info(r);
    for (const auto& e : edges(r)) {
      new_edges[index_of(r)].push_back(
          {new_index[index_of(info.source)][e.src], new_index[index_of(info.target)][e.dst]});
    }
  }
  return HeteroGraph(std::move(new_nodes[0]), std::move(new_nodes[1]), std::move(new_edges));
}

// ---------------------------------------------------------------- builders

HeteroGraph build_bearing_graph(const RigLayout& layout) {
  layout.validate();
  auto t_nodes = canonical_nodes(layout, MetaType::Temperature);
  auto v_nodes = canonical_nodes(layout, MetaType::Vibration);
  std::array<std::vector<Edge>, 4> edges;
  auto& tt = edges[index_of(Relation::TT)];
  auto& vv = edges[index_of(Relation::VV)];

  std::set<int> bearings;
  for (const auto& s : layout.sensors) bearings.insert(s.bearing);

  // Outer-ring temperature ring per bearing.
  for (int b : bearings) {
    std::vector<std::size_t> ring;
    for (std::size_t i = 0; i < t_nodes.size(); ++i) {
      if (t_nodes[i].bearing == b && t_nodes[i].subtype == Subtype::OuterRing) ring.push_back(i);
    }
    std::sort(ring.begin(), ring.end(),
              [&](auto x, auto y) { return t_nodes[x].angle_deg < t_nodes[y].angle_deg; });
    if (ring.size() == 2) add_undirected(tt, ring[0], ring[1]);
    if (ring.size() > 2) {
      for (std::size_t k = 0; k < ring.size(); ++k) add_undirected(tt, ring[k], ring[(k + 1) % ring.size()]);
    }
  }

  // Inner-ring clique (all bearings) and inner-to-nearest-outer links.
  std::vector<std::size_t> inner;
  for (std::size_t i = 0; i < t_nodes.size(); ++i) {
    if (t_nodes[i].subtype == Subtype::InnerRing) inner.push_back(i);
  }
  for (std::size_t a = 0; a < inner.size(); ++a) {
    for (std::size_t b = a + 1; b < inner.size(); ++b) add_undirected(tt, inner[a], inner[b]);
  }
  for (auto i : inner) {
    double best = 1e300;
    for (std::size_t j = 0; j < t_nodes.size(); ++j) {
      if (t_nodes[j].subtype == Subtype::OuterRing && t_nodes[j].bearing == t_nodes[i].bearing) {
        best = std::min(best, angular_distance_deg(t_nodes[i].angle_deg, t_nodes[j].angle_deg));
      }
    }
    for (std::size_t j = 0; j < t_nodes.size(); ++j) {
      if (t_nodes[j].subtype == Subtype::OuterRing && t_nodes[j].bearing == t_nodes[i].bearing &&
          angular_distance_deg(t_nodes[i].angle_deg, t_nodes[j].angle_deg) <= best + 1e-9) {
        add_undirected(tt, i, j);
      }
    }
  }

  // Vibration: co-angular pairs and ring adjacency over distinct angles.
  for (int b : bearings) {
    std::vector<double> angles;
    for (const auto& v : v_nodes) {
      if (v.bearing != b) continue;
      if (std::none_of(angles.begin(), angles.end(), [&](double a) { return same_angle(a, v.angle_deg); })) {
        angles.push_back(v.angle_deg);
      }
    }
    std::sort(angles.begin(), angles.end());
    auto at_angle = [&](double angle) {
      std::vector<std::size_t> out;
      for (std::size_t i = 0; i < v_nodes.size(); ++i) {
        if (v_nodes[i].bearing == b && same_angle(v_nodes[i].angle_deg, angle)) out.push_back(i);
      }
      return out;
    };
    for (double a : angles) {
      auto group = at_angle(a);
      for (std::size_t x = 0; x < group.size(); ++x)
        for (std::size_t y = x + 1; y < group.size(); ++y) add_undirected(vv, group[x], group[y]);
    }
    const std::size_t pairs = angles.size() < 2 ? 0 : (angles.size() == 2 ? 1 : angles.size());
    for (std::size_t k = 0; k < pairs; ++k) {
      for (auto x : at_angle(angles[k]))
        for (auto y : at_angle(angles[(k + 1) % angles.size()])) add_undirected(vv, x, y);
    }
  }
  // Facing vibration sensors across bearings.
  for (std::size_t i = 0; i < v_nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < v_nodes.size(); ++j) {
      if (v_nodes[i].bearing != v_nodes[j].bearing && v_nodes[i].subtype == v_nodes[j].subtype &&
          same_angle(v_nodes[i].angle_deg, v_nodes[j].angle_deg)) {
        add_undirected(vv, i, j);
      }
    }
  }

  // Co-located cross-type pairs.
  for (std::size_t t = 0; t < t_nodes.size(); ++t) {
    for (std::size_t v = 0; v < v_nodes.size(); ++v) {
      if (t_nodes[t].bearing == v_nodes[v].bearing &&
          angular_distance_deg(t_nodes[t].angle_deg, v_nodes[v].angle_deg) <=
              kCoLocationToleranceDeg + 1e-9) {
        edges[index_of(Relation::TV)].push_back({t, v});
        edges[index_of(Relation::VT)].push_back({v, t});
      }
    }
  }

  add_self_loops(tt, t_nodes.size());
  add_self_loops(vv, v_nodes.size());
  return HeteroGraph(std::move(t_nodes), std::move(v_nodes), std::move(edges));
}

HeteroGraph graph_from_edge_list(const RigLayout& layout, const std::filesystem::path& path) {
  layout.validate();
  auto t_nodes = canonical_nodes(layout, MetaType::Temperature);
  auto v_nodes = canonical_nodes(layout, MetaType::Vibration);
  auto lookup = [&](MetaType m, const std::string& id) {
    const auto& list = m == MetaType::Temperature ? t_nodes : v_nodes;
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (list[i].id == id) return i;
    }
    throw LayoutError("edge list references unknown " + std::string(to_string(m)) + " sensor '" +
                      id + "'");
  };
  const auto table = csv::read(path);
  const auto c_rel = table.column("relation"), c_src = table.column("src_id"),
             c_dst = table.column("dst_id");
  std::array<std::vector<Edge>, 4> edges;
  for (const auto& row : table.rows) {
    const auto r = relation_from_string(row[c_rel]);
    const auto& info = relation_info(r);
    const Edge e{lookup(info.source, row[c_src]), lookup(info.target, row[c_dst])};
    if (info.directed) {
      edges[index_of(r)].push_back(e);
    } else {
      add_undirected(edges[index_of(r)], e.src, e.dst);
    }
  }
  add_self_loops(edges[index_of(Relation::TT)], t_nodes.size());
  add_self_loops(edges[index_of(Relation::VV)], v_nodes.size());
  return HeteroGraph(std::move(t_nodes), std::move(v_nodes), std::move(edges));
}

void write_edge_list(const HeteroGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "relation,src_id,dst_id\n";
  for (auto r : kRelations) {
    const auto& info = relation_info(r);
    for (const auto& e : g.edges(r)) {
      if (!info.directed && e.src >= e.dst) continue;  // mirrors and self-loops are implied
      out << info.name << ',' << g.nodes(info.source)[e.src].id << ','
          << g.nodes(info.target)[e.dst].id << '\n';
    }
  }
}

// ---------------------------------------------------------------- degrees

double DegreeTable::normalizer(std::size_t i, std::size_t j) const {
  if (i >= degree.size() || j >= degree.size()) {
    throw LayoutError("degree table has no entry for node " + std::to_string(std::max(i, j)));
  }
  return 1.0 / (std::sqrt(degree[i]) * std::sqrt(degree[j]));
}

DegreeTable degree_normalizers(const HeteroGraph& g, Relation r) {
  const auto& info = relation_info(r);
  if (!info.same_type()) {
    throw LayoutError("degree normalizers are defined for same-type relations only, got " +
                      std::string(info.name));
  }
  DegreeTable table{r, std::vector<double>(g.num_nodes(info.target), 1.0)};
  for (const auto& e : g.edges(r)) {
    if (e.src != e.dst) table.degree[e.dst] += 1.0;
  }
  return table;
}

}  // namespace htgnn
