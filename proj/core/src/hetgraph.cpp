#include "hgconv/hetgraph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <tuple>

namespace hgconv {

namespace {

Csr build_csr(std::size_t num_dst, std::vector<std::pair<std::size_t, std::size_t>> edges,
              const std::string& rel_name) {
  // Sort by (dst, src); adjacent equal pairs are duplicates.
  std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) {
    return std::tie(a.second, a.first) < std::tie(b.second, b.first);
  });
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (edges[i] == edges[i - 1]) {
      throw std::invalid_argument("relation " + rel_name + ": duplicate edge (" +
                                  std::to_string(edges[i].first) + ", " +
                                  std::to_string(edges[i].second) + ")");
    }
  }
  Csr csr;
  csr.offsets.assign(num_dst + 1, 0);
  csr.sources.reserve(edges.size());
  for (const auto& [src, dst] : edges) {
    ++csr.offsets[dst + 1];
    csr.sources.push_back(src);
  }
  for (std::size_t v = 0; v < num_dst; ++v) csr.offsets[v + 1] += csr.offsets[v];
  return csr;
}

EdgeIndex build_edge_index(const Csr& csr) {
  EdgeIndex idx;
  const std::size_t n = csr.offsets.size() - 1;
  idx.src = csr.sources;
  idx.dst.reserve(csr.num_edges());
  idx.segment.reserve(csr.num_edges());
  for (std::size_t v = 0; v < n; ++v) {
    if (csr.degree(v) == 0) continue;
    const std::size_t seg = idx.present.size();
    idx.present.push_back(v);
    for (std::size_t e = csr.offsets[v]; e < csr.offsets[v + 1]; ++e) {
      idx.dst.push_back(v);
      idx.segment.push_back(seg);
    }
  }
  return idx;
}

}  // namespace

HeteroGraph HeteroGraph::build(std::vector<NodeType> node_types, std::vector<Tensor> attrs,
                               const std::vector<RelationEdges>& relations) {
  HeteroGraph g;
  if (node_types.empty()) throw std::invalid_argument("graph: no node types");
  if (attrs.size() != node_types.size()) {
    throw std::invalid_argument("graph: one attribute matrix per node type required");
  }
  std::set<std::string> names;
  for (std::size_t t = 0; t < node_types.size(); ++t) {
    NodeType& nt = node_types[t];
    nt.id = t;
    if (nt.count < 1) throw std::invalid_argument("node type " + nt.name + ": count must be >= 1");
    if (nt.attr_dim < 1) {
      throw std::invalid_argument("node type " + nt.name + ": attr_dim must be >= 1");
    }
    if (!names.insert(nt.name).second) {
      throw std::invalid_argument("duplicate node type name '" + nt.name + "'");
    }
    if (attrs[t].rows() != nt.count || attrs[t].cols() != nt.attr_dim) {
      throw std::invalid_argument("node type " + nt.name + ": attribute matrix is " +
                                  std::to_string(attrs[t].rows()) + "x" +
                                  std::to_string(attrs[t].cols()) + ", expected " +
                                  std::to_string(nt.count) + "x" + std::to_string(nt.attr_dim));
    }
    if (!attrs[t].all_finite()) {
      throw std::invalid_argument("node type " + nt.name + ": non-finite attribute");
    }
  }
  g.node_types_ = std::move(node_types);
  g.attrs_ = std::move(attrs);

  std::set<std::tuple<NodeTypeId, std::string, NodeTypeId>> triples;
  for (const RelationEdges& re : relations) {
    if (re.src_type >= g.node_types_.size() || re.dst_type >= g.node_types_.size()) {
      throw std::out_of_range("relation " + re.edge_name + ": node type index out of range");
    }
    if (!triples.emplace(re.src_type, re.edge_name, re.dst_type).second) {
      throw std::invalid_argument("duplicate relation " + re.edge_name);
    }
    Relation rel;
    rel.id = g.relations_.size();
    rel.src_type = re.src_type;
    rel.edge_name = re.edge_name;
    rel.dst_type = re.dst_type;
    g.relations_.push_back(rel);
    const std::string rname = g.relation_name(rel.id);
    const std::size_t ns = g.node_types_[re.src_type].count;
    const std::size_t nd = g.node_types_[re.dst_type].count;
    for (const auto& [u, v] : re.edges) {
      if (u >= ns || v >= nd) {
        throw std::out_of_range("relation " + rname + ": index out of range in edge (" +
                                std::to_string(u) + ", " + std::to_string(v) + ")");
      }
    }
    g.adjacency_.push_back(build_csr(nd, re.edges, rname));
  }
  g.finalize();
  return g;
}

void HeteroGraph::finalize() {
  edge_index_.clear();
  for (const Csr& csr : adjacency_) edge_index_.push_back(build_edge_index(csr));
}

const NodeType& HeteroGraph::node_type(NodeTypeId t) const {
  if (t >= node_types_.size()) throw std::out_of_range("node type id out of range");
  return node_types_[t];
}

const Relation& HeteroGraph::relation(RelationId r) const {
  if (r >= relations_.size()) throw std::out_of_range("relation id out of range");
  return relations_[r];
}

NodeTypeId HeteroGraph::find_node_type(const std::string& name) const {
  for (const NodeType& t : node_types_)
    if (t.name == name) return t.id;
  throw std::invalid_argument("unknown node type '" + name + "'");
}

std::optional<RelationId> HeteroGraph::find_relation(NodeTypeId src, const std::string& edge,
                                                     NodeTypeId dst) const {
  for (const Relation& r : relations_)
    if (r.src_type == src && r.edge_name == edge && r.dst_type == dst) return r.id;
  return std::nullopt;
}

std::string HeteroGraph::relation_name(RelationId r) const {
  const Relation& rel = relation(r);
  return node_types_[rel.src_type].name + "__" + rel.edge_name + "__" +
         node_types_[rel.dst_type].name;
}

const Tensor& HeteroGraph::attrs(NodeTypeId t) const {
  if (t >= attrs_.size()) throw std::out_of_range("node type id out of range");
  return attrs_[t];
}

const Csr& HeteroGraph::adjacency(RelationId r) const {
  if (r >= adjacency_.size()) throw std::out_of_range("relation id out of range");
  return adjacency_[r];
}

const EdgeIndex& HeteroGraph::edge_index(RelationId r) const {
  if (r >= edge_index_.size()) throw std::out_of_range("relation id out of range");
  return edge_index_[r];
}

std::size_t HeteroGraph::total_nodes() const {
  std::size_t n = 0;
  for (const NodeType& t : node_types_) n += t.count;
  return n;
}

std::span<const std::size_t> HeteroGraph::neighbors(RelationId r, std::size_t v) const {
  const Csr& csr = adjacency(r);
  if (v + 1 >= csr.offsets.size()) throw std::out_of_range("neighbors: node id out of range");
  return {csr.sources.data() + csr.offsets[v], csr.degree(v)};
}

std::vector<RelationId> HeteroGraph::relations_of(std::size_t v, NodeTypeId t) const {
  if (v >= node_type(t).count) throw std::out_of_range("relations_of: node id out of range");
  std::vector<RelationId> out;
  for (const Relation& r : relations_)
    if (r.dst_type == t && adjacency_[r.id].degree(v) > 0) out.push_back(r.id);
  return out;
}

std::vector<RelationId> HeteroGraph::relations_into(NodeTypeId t) const {
  std::vector<RelationId> out;
  for (const Relation& r : relations_)
    if (r.dst_type == t) out.push_back(r.id);
  return out;
}

bool HeteroGraph::is_closed() const {
  return !relations_.empty() && std::all_of(relations_.begin(), relations_.end(),
                                            [](const Relation& r) { return r.inverse_of.has_value(); });
}

HeteroGraph add_inverse_relations(const HeteroGraph& g) {
  if (g.is_closed()) return g;
  for (const Relation& r : g.relations_) {
    if (r.is_inverse || r.inverse_of) {
      throw std::invalid_argument("add_inverse_relations: graph is partially closed");
    }
  }
  HeteroGraph out = g;
  const std::size_t base = g.relations_.size();
  for (std::size_t i = 0; i < base; ++i) {
    const Relation& r = g.relations_[i];
    Relation inv;
    inv.id = base + i;
    inv.src_type = r.dst_type;
    inv.edge_name = r.edge_name + kInverseSuffix;
    inv.dst_type = r.src_type;
    inv.inverse_of = r.id;
    inv.is_inverse = true;
    out.relations_[i].inverse_of = inv.id;

    const Csr& fwd = g.adjacency_[i];
    std::vector<std::pair<std::size_t, std::size_t>> transposed;
    transposed.reserve(fwd.num_edges());
    for (std::size_t v = 0; v + 1 < fwd.offsets.size(); ++v)
      for (std::size_t e = fwd.offsets[v]; e < fwd.offsets[v + 1]; ++e)
        transposed.emplace_back(v, fwd.sources[e]);
    out.relations_.push_back(inv);
    out.adjacency_.push_back(
        build_csr(g.node_types_[r.src_type].count, std::move(transposed), inv.edge_name));
  }
  out.finalize();
  return out;
}

void LabelSet::validate(const HeteroGraph& g) const {
  const NodeType& t = g.node_type(node_type);
  if (num_classes < 1) throw std::invalid_argument("labels: num_classes must be >= 1");
  std::vector<bool> seen(num_classes, false);
  for (const auto& [node, cls] : labels) {
    if (node >= t.count) {
      throw std::out_of_range("labels: node id " + std::to_string(node) + " index out of range");
    }
    if (cls >= num_classes) {
      throw std::out_of_range("labels: class " + std::to_string(cls) + " outside [0, " +
                              std::to_string(num_classes) + ")");
    }
    seen[cls] = true;
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (!seen[c]) throw std::invalid_argument("labels: class " + std::to_string(c) + " never occurs");
  }
}

void SplitSpec::validate(const LabelSet& labels) const {
  std::set<std::size_t> used;
  auto check = [&](const std::vector<std::size_t>& part, const char* name) {
    if (part.empty()) throw std::invalid_argument(std::string("split: ") + name + " is empty");
    for (std::size_t id : part) {
      if (!labels.labels.count(id)) {
        throw std::invalid_argument(std::string("split: ") + name + " node " + std::to_string(id) +
                                    " is unlabeled");
      }
      if (!used.insert(id).second) {
        throw std::invalid_argument("split: node " + std::to_string(id) + " appears twice");
      }
    }
  };
  check(train, "train");
  check(val, "val");
  check(test, "test");
}

std::tuple<std::size_t, std::size_t, std::size_t> split_sizes(std::size_t n) {
  const auto train = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n)));
  const auto val = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n)));
  if (train + val > n) return {train, 0, 0};
  return {train, val, n - train - val};
}

}  // namespace hgconv
