#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "hgconv/tensor.hpp"

namespace hgconv {

using NodeTypeId = std::size_t;
using RelationId = std::size_t;

/// Suffix appended to the edge name of an inverse relation.
inline constexpr const char* kInverseSuffix = "⁻¹";

struct NodeType {
  NodeTypeId id = 0;
  std::string name;
  std::size_t count = 0;
  std::size_t attr_dim = 0;
};

struct Relation {
  RelationId id = 0;
  NodeTypeId src_type = 0;
  std::string edge_name;
  NodeTypeId dst_type = 0;
  std::optional<RelationId> inverse_of;
  bool is_inverse = false;
};

/// Destination-indexed adjacency: sources of dst node v are
/// sources[offsets[v] .. offsets[v+1]), sorted ascending, duplicate-free.
struct Csr {
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> sources;

  std::size_t num_edges() const { return sources.size(); }
  std::size_t degree(std::size_t v) const { return offsets[v + 1] - offsets[v]; }
};

/// Flattened per-relation edge arrays in canonical (dst, src) order, plus the
/// compacted segment id of each edge among destinations that have neighbors.
struct EdgeIndex {
  std::vector<std::size_t> src;
  std::vector<std::size_t> dst;
  std::vector<std::size_t> segment;
  std::vector<std::size_t> present;  // dst nodes with at least one neighbor, ascending
};

/// Input for building a graph: a relation triple by type id plus its edge list
/// as (src, dst) pairs in any order.
struct RelationEdges {
  NodeTypeId src_type = 0;
  std::string edge_name;
  NodeTypeId dst_type = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
};

/// Immutable typed graph. Construction validates every invariant.
class HeteroGraph {
 public:
  HeteroGraph() = default;

  /// Builds a graph without inverse relations. Throws std::invalid_argument on
  /// duplicate names/triples/edges or mismatched attribute shapes and
  /// std::out_of_range ("index out of range") on bad node ids.
  static HeteroGraph build(std::vector<NodeType> node_types, std::vector<Tensor> attrs,
                           const std::vector<RelationEdges>& relations);

  std::size_t num_node_types() const { return node_types_.size(); }
  std::size_t num_relations() const { return relations_.size(); }
  const std::vector<NodeType>& node_types() const { return node_types_; }
  const std::vector<Relation>& relations() const { return relations_; }
  const NodeType& node_type(NodeTypeId t) const;
  const Relation& relation(RelationId r) const;
  NodeTypeId find_node_type(const std::string& name) const;
  std::optional<RelationId> find_relation(NodeTypeId src, const std::string& edge,
                                          NodeTypeId dst) const;

  /// "src__edge__dst"; used for file names and parameter keys.
  std::string relation_name(RelationId r) const;

  const Tensor& attrs(NodeTypeId t) const;
  const Csr& adjacency(RelationId r) const;
  const EdgeIndex& edge_index(RelationId r) const;
  std::size_t num_edges(RelationId r) const { return adjacency(r).num_edges(); }
  std::size_t total_nodes() const;

  /// N_R(v): sorted sources of dst node v under relation r.
  std::span<const std::size_t> neighbors(RelationId r, std::size_t v) const;
  /// R(v): relations into type t where v has at least one neighbor, ascending id.
  std::vector<RelationId> relations_of(std::size_t v, NodeTypeId t) const;
  /// All relations whose destination type is t, ascending id.
  std::vector<RelationId> relations_into(NodeTypeId t) const;

  bool is_closed() const;

  friend HeteroGraph add_inverse_relations(const HeteroGraph& g);

 private:
  void finalize();

  std::vector<NodeType> node_types_;
  std::vector<Relation> relations_;
  std::vector<Tensor> attrs_;
  std::vector<Csr> adjacency_;
  std::vector<EdgeIndex> edge_index_;
};

/// Appends R⁻¹ with transposed adjacency for every relation; returns g unchanged
/// if it is already closed.
HeteroGraph add_inverse_relations(const HeteroGraph& g);

struct LabelSet {
  NodeTypeId node_type = 0;
  std::map<std::size_t, std::size_t> labels;  // node id -> class id
  std::size_t num_classes = 0;

  /// Throws if a node id is invalid, a class is out of range, or a class in
  /// [0, C) never occurs.
  void validate(const HeteroGraph& g) const;
};

struct SplitSpec {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;

  /// Throws unless the parts are nonempty, pairwise disjoint and labeled.
  void validate(const LabelSet& labels) const;
};

/// 2:1:7 split sizes for n labeled nodes: (round(0.2n), round(0.1n), rest).
std::tuple<std::size_t, std::size_t, std::size_t> split_sizes(std::size_t n);

}  // namespace hgconv
