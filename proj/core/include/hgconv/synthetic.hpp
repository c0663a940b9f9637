#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hgconv/graph_io.hpp"

namespace hgconv {

enum class Signal { attribute_only, structure_only, mixed };

struct SyntheticNodeType {
  std::string name;
  std::size_t count = 0;
  std::size_t attr_dim = 0;
};

struct SyntheticRelation {
  std::string src;
  std::string edge;
  std::string dst;
  double mean_degree = 1.0;            // mean number of sources per destination node
  std::optional<double> homophily;     // overrides SyntheticSpec::homophily
};

/// Every node carries a latent class. Edges prefer same-class sources with
/// probability `homophily`; attributes are class centroid · strength + N(0, 1) noise.
///   structure_only: label-type attributes are pure noise; labels follow neighborhoods.
///   attribute_only: labels are argmax_c ⟨centroid_c, x⟩ of the label-type attributes;
///                   edges are uniform.
///   mixed:          weak label-type attribute signal plus homophilous edges.
struct SyntheticSpec {
  std::vector<SyntheticNodeType> node_types;
  std::vector<SyntheticRelation> relations;
  std::string label_type;
  std::size_t num_classes = 2;
  Signal signal = Signal::structure_only;
  double homophily = 0.85;
  double signal_strength = 1.0;         // centroid scale for informative attributes
  double label_attr_strength = 0.35;    // label-type centroid scale under `mixed`
};

/// Deterministic in (spec, seed). Throws std::invalid_argument for infeasible
/// specs, e.g. a mean degree larger than the number of available sources.
Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// Small random typed graph for property tests and gradient checks: uniform
/// N(0, 1) attributes and Bernoulli(edge_prob) edges. `max_relations` bounds the
/// final relation count, inverses included when `closed`.
struct RandomGraphShape {
  std::size_t max_types = 3;
  std::size_t max_nodes = 8;  // per type
  std::size_t max_relations = 4;
  std::size_t max_attr_dim = 4;
  double edge_prob = 0.35;
  bool closed = true;
};

HeteroGraph random_hetero_graph(std::uint64_t seed, const RandomGraphShape& shape = {});

}  // namespace hgconv
