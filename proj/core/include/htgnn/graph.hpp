// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace htgnn {

enum class MetaType { Temperature, Vibration };
enum class Subtype { InnerRing, OuterRing, Axial, Radial };
enum class Relation { TT, VV, TV, VT };

inline constexpr std::array<MetaType, 2> kMetaTypes{MetaType::Temperature, MetaType::Vibration};
inline constexpr std::array<Relation, 4> kRelations{Relation::TT, Relation::VV, Relation::TV,
                                                    Relation::VT};

struct RelationInfo {
  std::string_view name;
  MetaType source;
  MetaType target;
  bool directed;
  bool same_type() const { return source == target; }
};

const RelationInfo& relation_info(Relation r);
/// "T-T", "V-V", "T-V" or "V-T"; anything else raises LayoutError.
Relation relation_from_string(std::string_view name);

MetaType meta_of(Subtype s);
std::string_view to_string(MetaType m);
std::string_view to_string(Subtype s);
Subtype subtype_from_string(std::string_view name);

struct SensorNode {
  std::string id;
  Subtype subtype = Subtype::OuterRing;
  int bearing = 1;
  double angle_deg = 0.0;  // clockwise from top, [0, 360)

  MetaType meta() const { return meta_of(subtype); }
  bool operator==(const SensorNode&) const = default;
};

/// Physical sensor placement on the rig.
struct RigLayout {
  std::vector<SensorNode> sensors;

  /// Two face-to-face bearings; per bearing 8 outer-ring temperature sensors
  /// every 45 deg, 2 inner-ring temperature sensors (90, 270), axial
  /// vibration at 0/90/180/270 and radial vibration top (0) and bottom (180).
  static RigLayout two_bearing_default();
  /// CSV columns: sensor_id, meta, subtype, bearing, angle_deg.
  static RigLayout read_csv(const std::filesystem::path& path);
  void write_csv(const std::filesystem::path& path) const;

  /// Throws LayoutError on empty type lists, duplicate ids or bad fields.
  void validate() const;
  std::size_t count(MetaType m) const;
};

struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;
  auto operator<=>(const Edge&) const = default;
};

/// Typed static sensor graph. Node indices are per meta-type; edges of a
/// relation index into the relation's source and target node lists.
class HeteroGraph {
 public:
  /// Validates endpoint ranges, the mirrored storage of undirected relations
  /// and sorts every edge list by (dst, src).
  HeteroGraph(std::vector<SensorNode> temperature, std::vector<SensorNode> vibration,
              std::array<std::vector<Edge>, 4> edges);

  std::span<const SensorNode> nodes(MetaType m) const;
  std::size_t num_nodes(MetaType m) const { return nodes(m).size(); }
  std::span<const Edge> edges(Relation r) const;
  std::size_t num_edges(Relation r) const { return edges(r).size(); }

  /// In-neighbourhood of `target` under `r`, ascending source index.
  std::vector<std::size_t> neighbors(Relation r, std::size_t target) const;

  std::size_t node_type_count() const { return kMetaTypes.size(); }
  std::size_t relation_type_count() const { return kRelations.size(); }
  bool heterogeneous() const { return node_type_count() + relation_type_count() > 2; }

  /// Node indices in canonical physical order: bearing, then outer ring before
  /// inner ring (axial before radial), then ascending angle.
  std::vector<std::size_t> flatten_order(MetaType m) const;

  std::optional<std::size_t> find(MetaType m, std::string_view id) const;

  /// New node k of each type is old node order[k]; edges follow.
  HeteroGraph relabeled(std::span<const std::size_t> temperature_order,
                        std::span<const std::size_t> vibration_order) const;

  bool operator==(const HeteroGraph&) const = default;

 private:
  std::array<std::vector<SensorNode>, 2> nodes_;
  std::array<std::vector<Edge>, 4> edges_;
};

/// Canonical proximity topology for the layout:
///  - outer-ring temperature ring adjacency per bearing
///  - inner-ring temperature clique spanning both bearings
///  - inner-ring to angularly nearest outer-ring node, same bearing
///  - vibration ring adjacency over distinct angles per bearing, plus
///    co-angular pairs and facing (same subtype, same angle) cross-bearing pairs
///  - directed T-V and V-T edges between co-located sensors (same bearing,
///    within 22.5 deg)
///  - self-loops on T-T and V-V
HeteroGraph build_bearing_graph(const RigLayout& layout);

inline constexpr double kCoLocationToleranceDeg = 22.5;

/// Graph from an explicit edge list CSV (relation, src_id, dst_id). Same-type
/// edges are mirrored and self-loops added.
HeteroGraph graph_from_edge_list(const RigLayout& layout, const std::filesystem::path& path);
void write_edge_list(const HeteroGraph& g, const std::filesystem::path& path);

/// Nodes of the layout in canonical order.
std::vector<SensorNode> canonical_nodes(const RigLayout& layout, MetaType m);

/// Normalized degrees d_hat_i = 1 + (number of non-self neighbours).
struct DegreeTable {
  Relation relation;
  std::vector<double> degree;

  double normalizer(std::size_t i, std::size_t j) const;
};

/// Only for T-T and V-V; cross-type relations raise LayoutError.
DegreeTable degree_normalizers(const HeteroGraph& g, Relation r);

double angular_distance_deg(double a, double b);

}  // namespace htgnn
