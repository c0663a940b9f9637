#pragma once

#include <cstdint>
#include <vector>

#include "hgconv/conv.hpp"
#include "hgconv/eval.hpp"
#include "hgconv/train.hpp"

namespace hgconv {

/// One layer of the RGCN reduction:
///   c_R(v) = σ(Σ_u w_vu h_u), w_vu = 1/|N_R(v)| (or 1/√(|N_R(v)|·|N_R⁻¹(u)|))
///   h̃(v)  = Σ_R M_R c_R(v)
///   h(v)  = 0.5 · Wo h(v) + 0.5 · h̃(v)
NodeReps rgcn_mode_forward(const NodeReps& h_prev, const HeteroGraph& g, const BoundParams& p,
                           std::size_t layer, const LayerConfig& cfg, const RgcnModeConfig& rgcn,
                           const ForwardContext& ctx);

/// Two-layer perceptron on the labeled type's attributes (hidden width K·d_head,
/// ReLU). Ignores the graph.
class MlpModel final : public Trainable {
 public:
  MlpModel(const HeteroGraph& g, NodeTypeId label_type, std::size_t hidden, std::size_t num_classes,
           double dropout);

  ParamStore init(std::uint64_t seed) const override;
  ModelOutput forward(Tape& tape, const BoundParams& p, const ForwardContext& ctx) const override;

 private:
  const HeteroGraph& g_;
  NodeTypeId label_type_;
  std::size_t hidden_;
  std::size_t classes_;
  double dropout_;
};

struct MlpResult {
  TrainResult train;
  EvalReport report;
};

/// Trains the MLP with the same harness as HGConv (supervised strategy forced)
/// and evaluates it on the test split.
MlpResult mlp_baseline(const Dataset& data, const LayerConfig& width, const TrainConfig& cfg);

/// Dense loop implementation of one HGConv layer in eval mode (no dropout),
/// written independently of the tape kernels. Used as a test oracle.
struct OracleLayer {
  std::vector<Tensor> h;      // per node type
  std::vector<Tensor> alpha;  // per relation, E×K in (dst, src) order
  std::vector<Tensor> beta;   // per node type, incidences×K ordered by (relation, node)
};

OracleLayer dense_oracle_layer(const HeteroGraph& g, const std::vector<Tensor>& h_prev,
                               const ParamStore& params, std::size_t layer, const LayerConfig& cfg);

struct OracleModel {
  std::vector<Tensor> embeddings;
  Tensor logits;
  OracleLayer last;
};

OracleModel dense_oracle_model(const HeteroGraph& g, const ModelConfig& cfg, const ParamStore& params,
                               NodeTypeId label_type);

}  // namespace hgconv
