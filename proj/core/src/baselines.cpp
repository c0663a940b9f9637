#include "hgconv/baselines.hpp"

#include <cmath>
#include <stdexcept>

#include "hgconv/rng.hpp"

namespace hgconv {

NodeReps rgcn_mode_forward(const NodeReps& h_prev, const HeteroGraph& g, const BoundParams& p,
                           std::size_t layer, const LayerConfig& cfg, const RgcnModeConfig& rgcn,
                           const ForwardContext& ctx) {
  if (!rgcn.enabled) throw std::invalid_argument("rgcn_mode_forward: RGCN mode is not enabled");
  if (h_prev.size() != g.num_node_types()) {
    throw std::invalid_argument("rgcn_mode_forward: one representation per node type required");
  }
  NodeReps h_in;
  for (std::size_t t = 0; t < h_prev.size(); ++t) {
    h_in.push_back(dropout(h_prev[t], cfg.feat_dropout, derive_seed(ctx.seed, "feat", layer, t),
                           ctx.train));
  }
  std::vector<std::vector<Var>> parts(g.num_node_types());
  for (const Relation& rel : g.relations()) {
    const EdgeIndex& idx = g.edge_index(rel.id);
    if (idx.src.empty()) continue;
    const Csr& csr = g.adjacency(rel.id);
    std::vector<std::size_t> out_deg(g.node_type(rel.src_type).count, 0);
    for (std::size_t u : idx.src) ++out_deg[u];
    Tensor w(idx.src.size(), 1);
    for (std::size_t e = 0; e < idx.src.size(); ++e) {
      const double din = static_cast<double>(csr.degree(idx.dst[e]));
      w(e, 0) = rgcn.norm == RgcnNorm::mean ? 1.0 / din
                                            : 1.0 / std::sqrt(din * static_cast<double>(out_deg[idx.src[e]]));
    }
    Tape& tape = *h_in[rel.src_type].tape();
    Var weights = dropout(tape.constant(std::move(w)), cfg.attn_dropout,
                          derive_seed(ctx.seed, "attn.micro", layer, rel.id), ctx.train);
    Var messages = head_scale(row_select(h_in[rel.src_type], idx.src), weights);
    // Only destinations with neighbors contribute; σ(0) need not be 0.
    Var c = activate(segment_sum(messages, idx.segment, idx.present.size()), cfg.activation);
    Var projected = linear(c, p[param_key::macro_m(layer, g.relation_name(rel.id))]);
    parts[rel.dst_type].push_back(segment_sum(projected, idx.present, g.node_type(rel.dst_type).count));
  }
  NodeReps out;
  for (const NodeType& t : g.node_types()) {
    Tape& tape = *h_in[t.id].tape();
    Var h_tilde;
    for (const Var& part : parts[t.id]) h_tilde = h_tilde.valid() ? add(h_tilde, part) : part;
    if (!h_tilde.valid()) h_tilde = tape.constant(Tensor(t.count, cfg.out_dim()));
    Var aligned = linear(h_in[t.id], p[param_key::res_wo(layer, t.name)]);
    out.push_back(lerp(aligned, h_tilde, tape.constant(Tensor::scalar(0.5))));
  }
  return out;
}

MlpModel::MlpModel(const HeteroGraph& g, NodeTypeId label_type, std::size_t hidden,
                   std::size_t num_classes, double dropout)
    : g_(g), label_type_(label_type), hidden_(hidden), classes_(num_classes), dropout_(dropout) {
  if (hidden < 1 || num_classes < 2) throw std::invalid_argument("mlp: need hidden >= 1 and C >= 2");
  if (label_type >= g.num_node_types() || g.node_type(label_type).attr_dim == 0) {
    throw std::invalid_argument("mlp: labeled node type has no attributes");
  }
}

ParamStore MlpModel::init(std::uint64_t seed) const {
  auto glorot = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    Rng rng(derive_seed(seed, name));
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Tensor t(rows, cols);
    for (double& x : t.data()) x = rng.uniform(-bound, bound);
    return t;
  };
  ParamStore p;
  const std::size_t d = g_.node_type(label_type_).attr_dim;
  p.set("mlp.W1", glorot("mlp.W1", hidden_, d));
  p.set("mlp.b1", Tensor(1, hidden_));
  p.set("mlp.W2", glorot("mlp.W2", classes_, hidden_));
  p.set("mlp.b2", Tensor(1, classes_));
  return p;
}

ModelOutput MlpModel::forward(Tape& tape, const BoundParams& p, const ForwardContext& ctx) const {
  ModelOutput out;
  out.embeddings = input_reps(tape, g_);
  Var x = dropout(out.embeddings[label_type_], dropout_, derive_seed(ctx.seed, "feat", 1, 0), ctx.train);
  Var hidden = relu(add_bias(linear(x, p["mlp.W1"]), p["mlp.b1"]));
  out.embeddings[label_type_] = hidden;
  Var h = dropout(hidden, dropout_, derive_seed(ctx.seed, "feat", 2, 0), ctx.train);
  out.logits = add_bias(linear(h, p["mlp.W2"]), p["mlp.b2"]);
  return out;
}

MlpResult mlp_baseline(const Dataset& data, const LayerConfig& width, const TrainConfig& cfg) {
  TrainConfig tc = cfg;
  tc.strategy = Strategy::semi_supervised;
  MlpModel model(data.graph, data.labels.node_type, width.out_dim(), data.labels.num_classes,
                 tc.dropout);
  MlpResult r;
  r.train = train(model, data, tc);
  r.report = evaluate(model, data, r.train.params, tc.seed);
  return r;
}

}  // namespace hgconv
