#include "hgconv/conv.hpp"

#include <cmath>
#include <stdexcept>

#include "hgconv/baselines.hpp"
#include "hgconv/rng.hpp"

namespace hgconv {

ModelConfig ModelConfig::stacked(std::size_t num_layers, const LayerConfig& layer,
                                 std::size_t num_classes) {
  ModelConfig cfg;
  cfg.layers.assign(num_layers, layer);
  cfg.num_classes = num_classes;
  return cfg;
}

void ModelConfig::validate() const {
  if (layers.empty()) throw std::invalid_argument("model: at least one layer required");
  for (const LayerConfig& l : layers) {
    if (l.heads < 1 || l.head_dim < 1) throw std::invalid_argument("model: heads and head_dim must be >= 1");
    for (double p : {l.attn_dropout, l.feat_dropout}) {
      if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("model: dropout must be in [0, 1)");
    }
  }
}

namespace param_key {
namespace {
std::string prefix(std::size_t layer) { return "layer" + std::to_string(layer) + "."; }
}  // namespace
std::string micro_w(std::size_t l, const std::string& t) { return prefix(l) + "micro.W." + t; }
std::string micro_a(std::size_t l, const std::string& t) { return prefix(l) + "micro.a." + t; }
std::string macro_u(std::size_t l, const std::string& t) { return prefix(l) + "macro.U." + t; }
std::string macro_m(std::size_t l, const std::string& r) { return prefix(l) + "macro.M." + r; }
std::string macro_mu(std::size_t l) { return prefix(l) + "macro.mu"; }
std::string res_gate(std::size_t l, const std::string& t) { return prefix(l) + "res.gate." + t; }
std::string res_wo(std::size_t l, const std::string& t) { return prefix(l) + "res.Wo." + t; }
}  // namespace param_key

namespace {

Tensor glorot(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor t(rows, cols);
  for (double& x : t.data()) x = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

ParamStore init_params(const HeteroGraph& g, const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ParamStore p;
  auto put = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    p.set(name, glorot(rows, cols, derive_seed(seed, name)));
  };
  std::vector<std::size_t> in_dim;
  for (const NodeType& t : g.node_types()) in_dim.push_back(t.attr_dim);

  for (std::size_t li = 0; li < cfg.layers.size(); ++li) {
    const LayerConfig& lc = cfg.layers[li];
    const std::size_t l = li + 1;
    const std::size_t out = lc.out_dim();
    if (cfg.rgcn.enabled) {
      for (const Relation& r : g.relations()) {
        put(param_key::macro_m(l, g.relation_name(r.id)), out, in_dim[r.src_type]);
      }
      for (const NodeType& t : g.node_types()) put(param_key::res_wo(l, t.name), out, in_dim[t.id]);
    } else {
      for (const NodeType& t : g.node_types()) {
        put(param_key::micro_w(l, t.name), out, in_dim[t.id]);
        if (!lc.no_micro) put(param_key::micro_a(l, t.name), lc.heads, 2 * lc.head_dim);
        if (!lc.no_macro) put(param_key::macro_u(l, t.name), out, in_dim[t.id]);
        if (!lc.no_wrc) {
          p.set(param_key::res_gate(l, t.name), Tensor::scalar(0.0));
          put(param_key::res_wo(l, t.name), out, in_dim[t.id]);
        }
      }
      for (const Relation& r : g.relations()) put(param_key::macro_m(l, g.relation_name(r.id)), out, out);
      if (!lc.no_macro) put(param_key::macro_mu(l), lc.heads, 2 * lc.head_dim);
    }
    for (auto& d : in_dim) d = out;
  }
  if (cfg.num_classes > 0) put(param_key::classifier(), cfg.num_classes, cfg.layers.back().out_dim());
  return p;
}

NodeReps micro_project(const NodeReps& h, const HeteroGraph& g, const BoundParams& p,
                       std::size_t layer) {
  NodeReps z;
  z.reserve(h.size());
  for (const NodeType& t : g.node_types()) {
    z.push_back(linear(h[t.id], p[param_key::micro_w(layer, t.name)]));
  }
  return z;
}

MicroOutput micro_conv(const NodeReps& z, const HeteroGraph& g, RelationId r, const BoundParams& p,
                       std::size_t layer, const LayerConfig& cfg, const ForwardContext& ctx) {
  const Relation& rel = g.relation(r);
  const EdgeIndex& idx = g.edge_index(r);
  MicroOutput out;
  out.relation = r;
  if (idx.src.empty()) return out;

  Var zs = z.at(rel.src_type);
  Var zd = z.at(rel.dst_type);
  if (zs.cols() != cfg.out_dim() || zd.cols() != cfg.out_dim()) {
    throw std::invalid_argument("micro_conv: projected width does not match heads*head_dim");
  }
  Tape& tape = *zs.tape();
  const std::size_t num_present = idx.present.size();

  if (cfg.no_micro) {
    const Csr& csr = g.adjacency(r);
    Tensor w(idx.src.size(), cfg.heads);
    for (std::size_t e = 0; e < idx.src.size(); ++e) {
      const double inv = 1.0 / static_cast<double>(csr.degree(idx.dst[e]));
      for (std::size_t k = 0; k < cfg.heads; ++k) w(e, k) = inv;
    }
    out.alpha = tape.constant(std::move(w));
  } else {
    // Attention vector is keyed by the source node type.
    Var a = p[param_key::micro_a(layer, g.node_type(rel.src_type).name)];
    Var focal_score = head_dot(zd, a, 0);
    Var source_score = head_dot(zs, a, cfg.head_dim);
    Var e = leaky_relu(add(row_select(focal_score, idx.dst), row_select(source_score, idx.src)), 0.2);
    out.alpha = segment_softmax(e, idx.segment, num_present);
  }
  Var weights = dropout(out.alpha, cfg.attn_dropout, derive_seed(ctx.seed, "attn.micro", layer, r),
                        ctx.train);
  Var messages = head_scale(row_select(zs, idx.src), weights);
  out.c = activate(segment_sum(messages, idx.segment, num_present), cfg.activation);
  return out;
}

MacroOutput macro_conv(const NodeReps& h_prev, const std::vector<MicroOutput>& c,
                       const HeteroGraph& g, const BoundParams& p, std::size_t layer,
                       const LayerConfig& cfg, const ForwardContext& ctx) {
  for (const MicroOutput& m : c) {
    if (m.relation >= g.num_relations()) throw std::invalid_argument("macro_conv: unknown relation");
  }
  MacroOutput out;
  for (const NodeType& t : g.node_types()) {
    Tape& tape = *h_prev.at(t.id).tape();
    MacroAttention att;
    std::vector<Var> parts;
    for (const MicroOutput& m : c) {
      if (m.empty() || g.relation(m.relation).dst_type != t.id) continue;
      parts.push_back(linear(m.c, p[param_key::macro_m(layer, g.relation_name(m.relation))]));
      for (std::size_t v : g.edge_index(m.relation).present) {
        att.nodes.push_back(v);
        att.relations.push_back(m.relation);
      }
    }
    if (parts.empty()) {
      out.h_tilde.push_back(tape.constant(Tensor(t.count, cfg.out_dim())));
      out.attention.push_back(std::move(att));
      continue;
    }
    Var stacked = parts.size() == 1 ? parts.front() : concat_rows(parts);

    // Compact focal ids so every softmax segment is nonempty.
    std::vector<std::size_t> rank(t.count, SIZE_MAX);
    std::vector<std::size_t> fan(t.count, 0);
    for (std::size_t v : att.nodes) ++fan[v];
    std::size_t num_focal = 0;
    for (std::size_t v = 0; v < t.count; ++v)
      if (fan[v] > 0) rank[v] = num_focal++;
    Index segment(att.nodes.size());
    for (std::size_t i = 0; i < att.nodes.size(); ++i) segment[i] = rank[att.nodes[i]];

    if (cfg.no_macro) {
      Tensor w(att.nodes.size(), cfg.heads);
      for (std::size_t i = 0; i < att.nodes.size(); ++i) {
        const double inv = 1.0 / static_cast<double>(fan[att.nodes[i]]);
        for (std::size_t k = 0; k < cfg.heads; ++k) w(i, k) = inv;
      }
      att.beta = tape.constant(std::move(w));
    } else {
      Var mu = p[param_key::macro_mu(layer)];
      Var focal = linear(h_prev[t.id], p[param_key::macro_u(layer, t.name)]);
      Var focal_score = head_dot(focal, mu, 0);
      Var relation_score = head_dot(stacked, mu, cfg.head_dim);
      Var s = leaky_relu(add(row_select(focal_score, att.nodes), relation_score), 0.2);
      att.beta = segment_softmax(s, segment, num_focal);
    }
    Var weights = dropout(att.beta, cfg.attn_dropout,
                          derive_seed(ctx.seed, "attn.macro", layer, t.id), ctx.train);
    out.h_tilde.push_back(segment_sum(head_scale(stacked, weights), att.nodes, t.count));
    out.attention.push_back(std::move(att));
  }
  return out;
}

NodeReps weighted_residual(const NodeReps& h_prev, const NodeReps& h_tilde, const HeteroGraph& g,
                           const BoundParams& p, std::size_t layer) {
  NodeReps out;
  for (const NodeType& t : g.node_types()) {
    Var aligned = linear(h_prev.at(t.id), p[param_key::res_wo(layer, t.name)]);
    Var lambda = sigmoid(p[param_key::res_gate(layer, t.name)]);
    out.push_back(lerp(aligned, h_tilde.at(t.id), lambda));
  }
  return out;
}

NodeReps layer_forward(const NodeReps& h_prev, const HeteroGraph& g, const BoundParams& p,
                       std::size_t layer, const LayerConfig& cfg, const ForwardContext& ctx,
                       LayerAttention* attention) {
  if (h_prev.size() != g.num_node_types()) {
    throw std::invalid_argument("layer_forward: one representation per node type required");
  }
  NodeReps h_in;
  for (std::size_t t = 0; t < h_prev.size(); ++t) {
    h_in.push_back(dropout(h_prev[t], cfg.feat_dropout, derive_seed(ctx.seed, "feat", layer, t),
                           ctx.train));
  }
  const NodeReps z = micro_project(h_in, g, p, layer);
  std::vector<MicroOutput> micro;
  for (RelationId r = 0; r < g.num_relations(); ++r) {
    micro.push_back(micro_conv(z, g, r, p, layer, cfg, ctx));
  }
  MacroOutput macro = macro_conv(h_in, micro, g, p, layer, cfg, ctx);
  if (attention) {
    attention->micro = micro;
    attention->macro = macro.attention;
  }
  if (cfg.no_wrc) return macro.h_tilde;
  return weighted_residual(h_in, macro.h_tilde, g, p, layer);
}

NodeReps input_reps(Tape& tape, const HeteroGraph& g) {
  NodeReps h;
  for (const NodeType& t : g.node_types()) h.push_back(tape.constant(g.attrs(t.id)));
  return h;
}

ModelOutput model_forward(Tape& tape, const HeteroGraph& g, const ModelConfig& cfg,
                          const BoundParams& p, NodeTypeId label_type, const ForwardContext& ctx) {
  cfg.validate();
  ModelOutput out;
  NodeReps h = input_reps(tape, g);
  for (std::size_t li = 0; li < cfg.layers.size(); ++li) {
    const bool last = li + 1 == cfg.layers.size();
    if (cfg.rgcn.enabled) {
      h = rgcn_mode_forward(h, g, p, li + 1, cfg.layers[li], cfg.rgcn, ctx);
    } else {
      h = layer_forward(h, g, p, li + 1, cfg.layers[li], ctx, last ? &out.last_attention : nullptr);
    }
  }
  out.embeddings = h;
  if (cfg.num_classes > 0) {
    out.logits = linear(h.at(label_type), p[param_key::classifier()]);
  }
  return out;
}

}  // namespace hgconv
