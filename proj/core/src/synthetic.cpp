#include "hgconv/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "hgconv/rng.hpp"

namespace hgconv {

namespace {

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

std::vector<std::size_t> balanced_classes(std::size_t n, std::size_t c, Rng& rng) {
  std::vector<std::size_t> cls(n);
  for (std::size_t i = 0; i < n; ++i) cls[i] = i % c;
  shuffle(cls, rng);
  return cls;
}

std::size_t sample_degree(double mean, std::size_t max_deg, Rng& rng) {
  const double base = std::floor(mean);
  long deg = static_cast<long>(base) + (rng.uniform() < mean - base ? 1 : 0);
  const std::uint64_t jitter = rng.below(3);  // -1, 0, +1 with equal probability
  deg += static_cast<long>(jitter) - 1;
  deg = std::clamp<long>(deg, 1, static_cast<long>(max_deg));
  return static_cast<std::size_t>(deg);
}

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.node_types.empty()) throw std::invalid_argument("synthetic: no node types");
  if (spec.num_classes < 2) throw std::invalid_argument("synthetic: num_classes must be >= 2");
  if (spec.homophily < 0.0 || spec.homophily > 1.0) {
    throw std::invalid_argument("synthetic: homophily must be in [0, 1]");
  }
  Rng rng(derive_seed(seed, "synthetic"));
  const std::size_t C = spec.num_classes;

  std::vector<NodeType> types;
  for (const auto& st : spec.node_types) {
    NodeType t;
    t.id = types.size();
    t.name = st.name;
    t.count = st.count;
    t.attr_dim = st.attr_dim;
    if (t.count < C) {
      throw std::invalid_argument("synthetic: node type " + t.name + " has fewer nodes than classes");
    }
    types.push_back(t);
  }
  auto type_id = [&](const std::string& name) -> NodeTypeId {
    for (const NodeType& t : types)
      if (t.name == name) return t.id;
    throw std::invalid_argument("synthetic: unknown node type '" + name + "'");
  };
  const NodeTypeId label_t = type_id(spec.label_type);

  for (const auto& sr : spec.relations) {
    const std::size_t ns = types[type_id(sr.src)].count;
    if (!(sr.mean_degree >= 1.0)) {
      throw std::invalid_argument("synthetic: relation " + sr.edge + " needs mean_degree >= 1");
    }
    if (sr.mean_degree > static_cast<double>(ns)) {
      throw std::invalid_argument("synthetic: relation " + sr.edge + " mean degree " +
                                  std::to_string(sr.mean_degree) + " exceeds " +
                                  std::to_string(ns) + " available sources");
    }
  }

  std::vector<std::vector<std::size_t>> latent;
  for (const NodeType& t : types) latent.push_back(balanced_classes(t.count, C, rng));

  // Attributes.
  std::vector<Tensor> attrs;
  std::vector<Tensor> centroids;
  for (const NodeType& t : types) {
    Tensor cent(C, t.attr_dim);
    for (double& x : cent.data()) x = rng.normal();
    double strength = spec.signal_strength;
    if (t.id == label_t) {
      if (spec.signal == Signal::structure_only) strength = 0.0;
      if (spec.signal == Signal::mixed) strength = spec.label_attr_strength;
    } else if (spec.signal == Signal::attribute_only) {
      strength = 0.0;
    }
    Tensor x(t.count, t.attr_dim);
    for (std::size_t i = 0; i < t.count; ++i)
      for (std::size_t j = 0; j < t.attr_dim; ++j)
        x(i, j) = strength * cent(latent[t.id][i], j) + rng.normal();
    attrs.push_back(std::move(x));
    centroids.push_back(std::move(cent));
  }

  // Labels: latent class, or the linear rule under attribute_only.
  LabelSet labels;
  labels.node_type = label_t;
  labels.num_classes = C;
  const Tensor& lx = attrs[label_t];
  for (std::size_t i = 0; i < types[label_t].count; ++i) {
    std::size_t cls = latent[label_t][i];
    if (spec.signal == Signal::attribute_only) {
      double best = -INFINITY;
      for (std::size_t c = 0; c < C; ++c) {
        double s = 0.0;
        for (std::size_t j = 0; j < lx.cols(); ++j) s += centroids[label_t](c, j) * lx(i, j);
        if (s > best) {
          best = s;
          cls = c;
        }
      }
    }
    labels.labels.emplace(i, cls);
  }

  // Edges.
  std::vector<RelationEdges> rels;
  for (const auto& sr : spec.relations) {
    RelationEdges re;
    re.src_type = type_id(sr.src);
    re.dst_type = type_id(sr.dst);
    re.edge_name = sr.edge;
    const std::size_t ns = types[re.src_type].count;
    const std::size_t nd = types[re.dst_type].count;
    const double h = spec.signal == Signal::attribute_only ? 0.0 : sr.homophily.value_or(spec.homophily);
    std::vector<std::vector<std::size_t>> by_class(C);
    for (std::size_t u = 0; u < ns; ++u) by_class[latent[re.src_type][u]].push_back(u);
    for (std::size_t v = 0; v < nd; ++v) {
      const std::size_t deg = sample_degree(sr.mean_degree, ns, rng);
      const auto& same = by_class[latent[re.dst_type][v]];
      std::set<std::size_t> chosen;
      std::size_t attempts = 0;
      while (chosen.size() < deg && attempts < 64 * deg) {
        ++attempts;
        const std::size_t u = rng.uniform() < h ? same[rng.below(same.size())] : rng.below(ns);
        chosen.insert(u);
      }
      for (std::size_t u = 0; chosen.size() < deg && u < ns; ++u) chosen.insert(u);
      for (std::size_t u : chosen) re.edges.emplace_back(u, v);
    }
    rels.push_back(std::move(re));
  }

  Dataset d;
  d.graph = add_inverse_relations(HeteroGraph::build(types, std::move(attrs), rels));
  d.meta.label_type = spec.label_type;
  d.meta.num_classes = C;
  d.labels = std::move(labels);
  d.labels.validate(d.graph);

  std::vector<std::size_t> ids(types[label_t].count);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  shuffle(ids, rng);
  const auto [n_train, n_val, n_test] = split_sizes(ids.size());
  d.split.train.assign(ids.begin(), ids.begin() + static_cast<long>(n_train));
  d.split.val.assign(ids.begin() + static_cast<long>(n_train),
                     ids.begin() + static_cast<long>(n_train + n_val));
  d.split.test.assign(ids.begin() + static_cast<long>(n_train + n_val), ids.end());
  (void)n_test;
  for (auto* part : {&d.split.train, &d.split.val, &d.split.test}) std::sort(part->begin(), part->end());
  d.split.validate(d.labels);
  return d;
}

}  // namespace hgconv

namespace hgconv {

HeteroGraph random_hetero_graph(std::uint64_t seed, const RandomGraphShape& shape) {
  if (shape.max_types < 1 || shape.max_nodes < 1 || shape.max_attr_dim < 1) {
    throw std::invalid_argument("random_hetero_graph: bounds must be >= 1");
  }
  const std::size_t base_max = shape.closed ? shape.max_relations / 2 : shape.max_relations;
  if (base_max < 1) throw std::invalid_argument("random_hetero_graph: max_relations too small");
  Rng rng(derive_seed(seed, "random_graph"));
  const std::size_t num_types = 1 + rng.below(shape.max_types);
  std::vector<NodeType> types;
  std::vector<Tensor> attrs;
  for (std::size_t t = 0; t < num_types; ++t) {
    NodeType nt;
    nt.id = t;
    nt.name = std::string(1, static_cast<char>('A' + t));
    nt.count = 1 + rng.below(shape.max_nodes);
    nt.attr_dim = 1 + rng.below(shape.max_attr_dim);
    Tensor x(nt.count, nt.attr_dim);
    for (double& v : x.data()) v = rng.normal();
    types.push_back(nt);
    attrs.push_back(std::move(x));
  }
  const std::size_t num_rel = 1 + rng.below(base_max);
  std::vector<RelationEdges> rels;
  for (std::size_t r = 0; r < num_rel; ++r) {
    RelationEdges re;
    re.src_type = rng.below(num_types);
    re.dst_type = rng.below(num_types);
    re.edge_name = "e" + std::to_string(r);
    for (std::size_t v = 0; v < types[re.dst_type].count; ++v)
      for (std::size_t u = 0; u < types[re.src_type].count; ++u)
        if (rng.uniform() < shape.edge_prob) re.edges.emplace_back(u, v);
    rels.push_back(std::move(re));
  }
  HeteroGraph g = HeteroGraph::build(std::move(types), std::move(attrs), rels);
  return shape.closed ? add_inverse_relations(g) : g;
}

}  // namespace hgconv
