#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hgconv/hetgraph.hpp"
#include "hgconv/ops.hpp"
#include "hgconv/params.hpp"

namespace hgconv {

struct LayerConfig {
  std::size_t heads = 8;
  std::size_t head_dim = 8;
  Activation activation = Activation::relu;
  double attn_dropout = 0.0;
  double feat_dropout = 0.0;
  bool no_micro = false;  // uniform 1/|N_R(v)| neighbor weights
  bool no_macro = false;  // uniform 1/|R(v)| relation weights
  bool no_wrc = false;    // layer output is the fused neighbor information only

  std::size_t out_dim() const { return heads * head_dim; }
};

enum class RgcnNorm { mean, symmetric };

/// RGCN reduction: identity node transform, degree-constant neighbor weights,
/// unit relation weights, residual gate fixed at 0.5.
struct RgcnModeConfig {
  bool enabled = false;
  RgcnNorm norm = RgcnNorm::mean;
};

struct ModelConfig {
  std::vector<LayerConfig> layers;
  std::size_t num_classes = 0;  // 0: no classifier
  RgcnModeConfig rgcn;

  static ModelConfig stacked(std::size_t num_layers, const LayerConfig& layer,
                             std::size_t num_classes);
  void validate() const;
};

/// Parameter keys, 1-based layer index.
namespace param_key {
std::string micro_w(std::size_t layer, const std::string& type);
std::string micro_a(std::size_t layer, const std::string& type);
std::string macro_u(std::size_t layer, const std::string& type);
std::string macro_m(std::size_t layer, const std::string& relation);
std::string macro_mu(std::size_t layer);
std::string res_gate(std::size_t layer, const std::string& type);
std::string res_wo(std::size_t layer, const std::string& type);
inline const char* classifier() { return "classifier.W"; }
}  // namespace param_key

/// Glorot-uniform matrices and attention vectors, residual gates at 0. Only the
/// parameters a configuration actually uses are created.
ParamStore init_params(const HeteroGraph& g, const ModelConfig& cfg, std::uint64_t seed);

/// Per-call randomness and mode. Dropout streams derive from `seed`.
struct ForwardContext {
  bool train = false;
  std::uint64_t seed = 0;
};

using NodeReps = std::vector<Var>;  // one matrix per node type

/// Micro-level output for one relation. Rows of `c` follow `present` (dst nodes
/// with neighbors); other destinations are absent, not zero.
struct MicroOutput {
  RelationId relation = 0;
  Var c;
  Var alpha;  // E×K normalized weights in canonical edge order (before dropout)
  bool empty() const { return !c.valid(); }
};

/// Macro-level attention for one destination type: one row per (v, R) incidence,
/// ordered by relation id then node id.
struct MacroAttention {
  std::vector<std::size_t> nodes;
  std::vector<RelationId> relations;
  Var beta;  // incidences×K (before dropout); invalid when the type has none
};

struct MacroOutput {
  NodeReps h_tilde;
  std::vector<MacroAttention> attention;  // per node type
};

struct LayerAttention {
  std::vector<MicroOutput> micro;         // per relation id
  std::vector<MacroAttention> macro;      // per node type
};

/// z_A = W_A h_A for every node type (feature dropout is the caller's job).
NodeReps micro_project(const NodeReps& h, const HeteroGraph& g, const BoundParams& p,
                       std::size_t layer);

MicroOutput micro_conv(const NodeReps& z, const HeteroGraph& g, RelationId r, const BoundParams& p,
                       std::size_t layer, const LayerConfig& cfg, const ForwardContext& ctx);

MacroOutput macro_conv(const NodeReps& h_prev, const std::vector<MicroOutput>& c,
                       const HeteroGraph& g, const BoundParams& p, std::size_t layer,
                       const LayerConfig& cfg, const ForwardContext& ctx);

NodeReps weighted_residual(const NodeReps& h_prev, const NodeReps& h_tilde, const HeteroGraph& g,
                           const BoundParams& p, std::size_t layer);

NodeReps layer_forward(const NodeReps& h_prev, const HeteroGraph& g, const BoundParams& p,
                       std::size_t layer, const LayerConfig& cfg, const ForwardContext& ctx,
                       LayerAttention* attention = nullptr);

struct ModelOutput {
  NodeReps embeddings;
  Var logits;  // all nodes of the labeled type × C; invalid without classifier
  LayerAttention last_attention;
};

NodeReps input_reps(Tape& tape, const HeteroGraph& g);

ModelOutput model_forward(Tape& tape, const HeteroGraph& g, const ModelConfig& cfg,
                          const BoundParams& p, NodeTypeId label_type, const ForwardContext& ctx);

}  // namespace hgconv
