#include <gtest/gtest.h>

#include <cmath>

#include "hgconv/baselines.hpp"
#include "hgconv/conv.hpp"
#include "hgconv/synthetic.hpp"
#include "support.hpp"

using namespace hgconv;
using hgconv::testing::bit_equal;
using hgconv::testing::max_abs_diff;
using hgconv::testing::random_tensor;

namespace {

// Focal type Q receives from type S through each listed relation.
HeteroGraph star(std::size_t num_sources, const Tensor& source_attrs,
                 const std::vector<std::vector<std::pair<std::size_t, std::size_t>>>& rels,
                 std::size_t focal_dim = 2) {
  std::vector<NodeType> types = {{0, "Q", 1, focal_dim}, {1, "S", num_sources, source_attrs.cols()}};
  std::vector<Tensor> attrs = {Tensor(1, focal_dim, std::vector<double>(focal_dim, 0.3)), source_attrs};
  std::vector<RelationEdges> edges;
  for (std::size_t i = 0; i < rels.size(); ++i) edges.push_back({1, "r" + std::to_string(i), 0, rels[i]});
  return HeteroGraph::build(types, attrs, edges);
}

LayerConfig small_layer(std::size_t heads, std::size_t head_dim) {
  LayerConfig c;
  c.heads = heads;
  c.head_dim = head_dim;
  return c;
}

Tensor apply_rows(const Tensor& w, const Tensor& x) {  // x·wᵀ
  Tensor out(x.rows(), w.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t o = 0; o < w.rows(); ++o)
      for (std::size_t j = 0; j < x.cols(); ++j) out(i, o) += w(o, j) * x(i, j);
  return out;
}

std::vector<Tensor> values(const NodeReps& reps) {
  std::vector<Tensor> out;
  for (const Var& v : reps) out.push_back(v.value());
  return out;
}

}  // namespace

TEST(MicroConv, SingleNeighborHasUnitWeight) {
  Rng rng(1);
  const HeteroGraph g = star(1, random_tensor(rng, 1, 3), {{{0, 0}}});
  const LayerConfig cfg = small_layer(2, 2);
  const ParamStore ps = init_params(g, ModelConfig::stacked(1, cfg, 0), 5);
  Tape tape;
  BoundParams p(tape, ps);
  const NodeReps z = micro_project(input_reps(tape, g), g, p, 1);
  const MicroOutput m = micro_conv(z, g, 0, p, 1, cfg, {});
  EXPECT_EQ(m.alpha.value(), Tensor(1, 2, 1.0));
  const Tensor zu = apply_rows(ps.at(param_key::micro_w(1, "S")), g.attrs(1));
  for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(m.c.value()(0, j), std::max(0.0, zu(0, j)));
}

TEST(MicroConv, IdenticalNeighborsSplitEvenly) {
  const Tensor attrs(2, 3, std::vector<double>{0.2, -1.0, 0.7, 0.2, -1.0, 0.7});
  const HeteroGraph g = star(2, attrs, {{{0, 0}, {1, 0}}});
  const LayerConfig cfg = small_layer(3, 2);
  const ParamStore ps = init_params(g, ModelConfig::stacked(1, cfg, 0), 9);
  Tape tape;
  BoundParams p(tape, ps);
  const NodeReps z = micro_project(input_reps(tape, g), g, p, 1);
  const MicroOutput m = micro_conv(z, g, 0, p, 1, cfg, {});
  EXPECT_EQ(m.alpha.value(), Tensor(2, 3, 0.5));
}

TEST(MicroConv, DestinationsWithoutNeighborsAreAbsent) {
  std::vector<NodeType> types = {{0, "Q", 3, 2}, {1, "S", 2, 2}};
  const HeteroGraph g = HeteroGraph::build(types, {Tensor(3, 2, 1.0), Tensor(2, 2, 0.5)},
                                           {{1, "r", 0, {{0, 2}, {1, 2}}}});
  const LayerConfig cfg = small_layer(1, 2);
  const ParamStore ps = init_params(g, ModelConfig::stacked(1, cfg, 0), 1);
  Tape tape;
  BoundParams p(tape, ps);
  const MicroOutput m = micro_conv(micro_project(input_reps(tape, g), g, p, 1), g, 0, p, 1, cfg, {});
  EXPECT_EQ(m.c.rows(), 1u);
  EXPECT_EQ(g.edge_index(0).present, std::vector<std::size_t>{2});
}

TEST(MacroConv, SingleRelationHasUnitWeight) {
  Rng rng(2);
  const HeteroGraph g = star(2, random_tensor(rng, 2, 2), {{{0, 0}, {1, 0}}});
  const LayerConfig cfg = small_layer(2, 3);
  const ParamStore ps = init_params(g, ModelConfig::stacked(1, cfg, 0), 3);
  Tape tape;
  BoundParams p(tape, ps);
  const NodeReps h = input_reps(tape, g);
  const NodeReps z = micro_project(h, g, p, 1);
  std::vector<MicroOutput> micro;
  for (RelationId r = 0; r < g.num_relations(); ++r) micro.push_back(micro_conv(z, g, r, p, 1, cfg, {}));
  const MacroOutput out = macro_conv(h, micro, g, p, 1, cfg, {});
  EXPECT_EQ(out.attention[0].beta.value(), Tensor(1, 2, 1.0));
  const Tensor want = apply_rows(ps.at(param_key::macro_m(1, g.relation_name(0))), micro[0].c.value());
  EXPECT_LT(max_abs_diff(out.h_tilde[0].value(), want), 1e-15);
}

TEST(MacroConv, IdenticalRelationsSplitEvenly) {
  Rng rng(4);
  const HeteroGraph g = star(2, random_tensor(rng, 2, 2), {{{0, 0}, {1, 0}}, {{0, 0}, {1, 0}}});
  const LayerConfig cfg = small_layer(2, 2);
  ParamStore ps = init_params(g, ModelConfig::stacked(1, cfg, 0), 3);
  ps.at(param_key::macro_m(1, g.relation_name(1))) = ps.at(param_key::macro_m(1, g.relation_name(0)));
  Tape tape;
  BoundParams p(tape, ps);
  LayerAttention att;
  layer_forward(input_reps(tape, g), g, p, 1, cfg, {}, &att);
  EXPECT_EQ(att.macro[0].beta.value(), Tensor(2, 2, 0.5));
}

TEST(MacroConv, UnknownRelationIsRejected) {
  Rng rng(4);
  const HeteroGraph g = star(1, random_tensor(rng, 1, 2), {{{0, 0}}});
  const LayerConfig cfg = small_layer(1, 2);
  const ParamStore ps = init_params(g, ModelConfig::stacked(1, cfg, 0), 3);
  Tape tape;
  BoundParams p(tape, ps);
  const NodeReps h = input_reps(tape, g);
  std::vector<MicroOutput> micro = {micro_conv(micro_project(h, g, p, 1), g, 0, p, 1, cfg, {})};
  micro[0].relation = 7;
  EXPECT_THROW(macro_conv(h, micro, g, p, 1, cfg, {}), std::invalid_argument);
}

TEST(WeightedResidual, EqualPointsGiveThePoint) {
  Rng rng(6);
  const HeteroGraph g = star(2, random_tensor(rng, 2, 2), {{{0, 0}}});
  const LayerConfig cfg = small_layer(1, 2);
  const ParamStore ps = init_params(g, ModelConfig::stacked(1, cfg, 0), 3);
  Tape tape;
  BoundParams p(tape, ps);
  const NodeReps h = input_reps(tape, g);
  NodeReps aligned;
  for (const NodeType& t : g.node_types()) aligned.push_back(linear(h[t.id], p[param_key::res_wo(1, t.name)]));
  const NodeReps out = weighted_residual(h, aligned, g, p, 1);
  for (std::size_t t = 0; t < 2; ++t) EXPECT_EQ(out[t].value(), aligned[t].value());
}

TEST(WeightedResidual, SaturatedGateKeepsAlignedInput) {
  Rng rng(7);
  const HeteroGraph g = star(3, random_tensor(rng, 3, 4), {{{0, 0}, {2, 0}}});
  const LayerConfig cfg = small_layer(2, 2);
  ParamStore ps = init_params(g, ModelConfig::stacked(1, cfg, 0), 3);
  for (const char* t : {"Q", "S"}) ps.at(param_key::res_gate(1, t)) = Tensor::scalar(20.0);
  Tape tape;
  BoundParams p(tape, ps);
  const NodeReps h = input_reps(tape, g);
  const NodeReps out = layer_forward(h, g, p, 1, cfg, {});
  for (const NodeType& t : g.node_types()) {
    const Tensor want = apply_rows(ps.at(param_key::res_wo(1, t.name)), g.attrs(t.id));
    double scale = 0.0;
    for (double v : want.data()) scale = std::max(scale, std::abs(v));
    EXPECT_LE(max_abs_diff(out[t.id].value(), want), 1e-8 * scale);
  }
}

TEST(WeightedResidual, MatchesElementwiseOracle) {
  Rng rng(8);
  const HeteroGraph g = random_hetero_graph(8, {2, 6, 4, 3, 0.5, true});
  const LayerConfig cfg = small_layer(2, 3);
  ParamStore ps = init_params(g, ModelConfig::stacked(1, cfg, 0), 1);
  for (const NodeType& t : g.node_types()) ps.at(param_key::res_gate(1, t.name)) = Tensor::scalar(rng.normal());
  Tape tape;
  BoundParams p(tape, ps);
  const NodeReps h = input_reps(tape, g);
  NodeReps y;
  for (const NodeType& t : g.node_types()) y.push_back(tape.constant(random_tensor(rng, t.count, cfg.out_dim())));
  const NodeReps out = weighted_residual(h, y, g, p, 1);
  for (const NodeType& t : g.node_types()) {
    const double lam = 1.0 / (1.0 + std::exp(-ps.at(param_key::res_gate(1, t.name)).item()));
    const Tensor x = apply_rows(ps.at(param_key::res_wo(1, t.name)), g.attrs(t.id));
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < x.cols(); ++j)
        EXPECT_NEAR(out[t.id].value()(i, j), lam * x(i, j) + (1 - lam) * y[t.id].value()(i, j), 1e-14);
  }
}

TEST(WeightedResidual, GateStaysInsideUnitInterval) {
  for (double raw = -30.0; raw <= 30.0; raw += 0.25) {
    Tape tape;
    const double lam = sigmoid(tape.constant(Tensor::scalar(raw))).value().item();
    EXPECT_GT(lam, 0.0);
    EXPECT_LT(lam, 1.0);
  }
}

TEST(LayerForward, NoMicroMatchesAttentionWhenAttentionIsUniform) {
  const Tensor attrs(2, 2, std::vector<double>{1.0, -0.5, 1.0, -0.5});
  const HeteroGraph g = star(2, attrs, {{{0, 0}, {1, 0}}});
  const LayerConfig full = small_layer(2, 2);
  LayerConfig ablated = full;
  ablated.no_micro = true;
  const ParamStore ps = init_params(g, ModelConfig::stacked(1, full, 0), 3);
  Tape tape;
  BoundParams p(tape, ps);
  const NodeReps h = input_reps(tape, g);
  const NodeReps a = layer_forward(h, g, p, 1, full, {});
  const NodeReps b = layer_forward(h, g, p, 1, ablated, {});
  EXPECT_EQ(a[0].value(), b[0].value());
}

TEST(LayerForward, NoWrcReturnsMacroOutput) {
  const HeteroGraph g = random_hetero_graph(12, {3, 6, 4, 3, 0.5, true});
  LayerConfig cfg = small_layer(2, 2);
  cfg.no_wrc = true;
  const ParamStore ps = init_params(g, ModelConfig::stacked(1, cfg, 0), 3);
  for (const auto& name : ps.names()) EXPECT_EQ(name.find(".res."), std::string::npos) << name;
  Tape tape;
  BoundParams p(tape, ps);
  const NodeReps h = input_reps(tape, g);
  const NodeReps out = layer_forward(h, g, p, 1, cfg, {});
  const NodeReps z = micro_project(h, g, p, 1);
  std::vector<MicroOutput> micro;
  for (RelationId r = 0; r < g.num_relations(); ++r) micro.push_back(micro_conv(z, g, r, p, 1, cfg, {}));
  const MacroOutput macro = macro_conv(h, micro, g, p, 1, cfg, {});
  for (std::size_t t = 0; t < g.num_node_types(); ++t) EXPECT_EQ(out[t].value(), macro.h_tilde[t].value());
}

// Property: random layers agree with the loop oracle, across head counts,
// activations and ablations.
TEST(LayerForward, AgreesWithDenseOracleProperty) {
  const Activation acts[] = {Activation::relu, Activation::elu, Activation::sigmoid};
  for (std::uint64_t seed = 0; seed < 24; ++seed) {
    Rng rng(derive_seed(seed, "case"));
    const HeteroGraph g = random_hetero_graph(seed, {3, 8, 4, 4, 0.4, true});
    LayerConfig cfg = small_layer(1 + rng.below(3), 1 + rng.below(3));
    cfg.activation = acts[seed % 3];
    cfg.no_micro = seed % 4 == 1;
    cfg.no_macro = seed % 4 == 2;
    cfg.no_wrc = seed % 4 == 3;
    ParamStore ps = init_params(g, ModelConfig::stacked(1, cfg, 0), seed);
    for (const NodeType& t : g.node_types())
      if (ps.contains(param_key::res_gate(1, t.name))) ps.at(param_key::res_gate(1, t.name)) = Tensor::scalar(rng.normal());
    Tape tape;
    BoundParams p(tape, ps);
    const NodeReps got = layer_forward(input_reps(tape, g), g, p, 1, cfg, {});
    std::vector<Tensor> h0;
    for (const NodeType& t : g.node_types()) h0.push_back(g.attrs(t.id));
    const OracleLayer want = dense_oracle_layer(g, h0, ps, 1, cfg);
    for (std::size_t t = 0; t < g.num_node_types(); ++t) {
      EXPECT_LE(max_abs_diff(got[t].value(), want.h[t]), 1e-10) << "seed " << seed << " type " << t;
    }
  }
}

TEST(ModelForward, TwoLayersAgreeWithDenseOracle) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const HeteroGraph g = random_hetero_graph(seed + 100, {3, 8, 4, 4, 0.4, true});
    const ModelConfig cfg = ModelConfig::stacked(2, small_layer(2, 3), 3);
    const ParamStore ps = init_params(g, cfg, seed);
    Tape tape;
    BoundParams p(tape, ps);
    const ModelOutput got = model_forward(tape, g, cfg, p, 0, {});
    const OracleModel want = dense_oracle_model(g, cfg, ps, 0);
    for (std::size_t t = 0; t < g.num_node_types(); ++t)
      EXPECT_LE(max_abs_diff(got.embeddings[t].value(), want.embeddings[t]), 1e-10);
    EXPECT_LE(max_abs_diff(got.logits.value(), want.logits), 1e-10);
  }
}

TEST(ModelForward, SingleLayerEqualsLayerForward) {
  const HeteroGraph g = random_hetero_graph(5, {2, 6, 4, 2, 0.5, true});
  const ModelConfig cfg = ModelConfig::stacked(1, small_layer(2, 2), 0);
  const ParamStore ps = init_params(g, cfg, 1);
  Tape tape;
  BoundParams p(tape, ps);
  const ModelOutput m = model_forward(tape, g, cfg, p, 0, {});
  const NodeReps l = layer_forward(input_reps(tape, g), g, p, 1, cfg.layers[0], {});
  EXPECT_EQ(values(m.embeddings), values(l));
  EXPECT_FALSE(m.logits.valid());
}

TEST(ModelForward, DefaultWidthIsSixtyFour) {
  const HeteroGraph g = random_hetero_graph(3, {2, 5, 4, 3, 0.5, true});
  const ModelConfig cfg = ModelConfig::stacked(2, LayerConfig{}, 2);
  EXPECT_EQ(cfg.layers.size(), 2u);
  const ParamStore ps = init_params(g, cfg, 0);
  Tape tape;
  BoundParams p(tape, ps);
  const ModelOutput m = model_forward(tape, g, cfg, p, 0, {});
  for (const Var& e : m.embeddings) EXPECT_EQ(e.cols(), 64u);
  EXPECT_EQ(m.logits.cols(), 2u);
}

TEST(ModelForward, IsolatedNodesFollowResidualPath) {
  std::vector<NodeType> types = {{0, "Q", 3, 2}, {1, "S", 2, 2}};
  Rng rng(3);
  const HeteroGraph g = add_inverse_relations(HeteroGraph::build(
      types, {random_tensor(rng, 3, 2), random_tensor(rng, 2, 2)}, {{1, "r", 0, {{0, 0}, {1, 1}}}}));
  const LayerConfig cfg = small_layer(2, 2);
  const ParamStore ps = init_params(g, ModelConfig::stacked(1, cfg, 0), 2);
  Tape tape;
  BoundParams p(tape, ps);
  const NodeReps out = layer_forward(input_reps(tape, g), g, p, 1, cfg, {});
  const Tensor aligned = apply_rows(ps.at(param_key::res_wo(1, "Q")), g.attrs(0));
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(out[0].value()(2, j), 0.5 * aligned(2, j), 1e-15);
  EXPECT_TRUE(out[0].value().all_finite());
}

TEST(ModelForward, EdgeOrderDoesNotMatter) {
  Rng rng(10);
  std::vector<NodeType> types = {{0, "Q", 4, 3}, {1, "S", 5, 2}};
  std::vector<Tensor> attrs = {random_tensor(rng, 4, 3), random_tensor(rng, 5, 2)};
  std::vector<std::pair<std::size_t, std::size_t>> edges = {{0, 0}, {1, 0}, {4, 0}, {2, 1}, {3, 3}, {0, 3}, {1, 2}};
  auto run = [&](std::vector<std::pair<std::size_t, std::size_t>> e) {
    const HeteroGraph g = add_inverse_relations(HeteroGraph::build(types, attrs, {{1, "r", 0, e}, {0, "q", 0, {{0, 1}, {1, 0}}}}));
    const ModelConfig cfg = ModelConfig::stacked(2, small_layer(2, 2), 2);
    const ParamStore ps = init_params(g, cfg, 4);
    Tape tape;
    BoundParams p(tape, ps);
    return model_forward(tape, g, cfg, p, 0, {}).logits.value();
  };
  const Tensor base = run(edges);
  std::reverse(edges.begin(), edges.end());
  EXPECT_TRUE(bit_equal(base, run(edges)));
  std::swap(edges[1], edges[5]);
  EXPECT_TRUE(bit_equal(base, run(edges)));
}

TEST(ModelForward, TrainModeDropoutIsSeeded) {
  const HeteroGraph g = random_hetero_graph(21, {2, 6, 4, 3, 0.5, true});
  ModelConfig cfg = ModelConfig::stacked(2, small_layer(2, 2), 2);
  for (auto& l : cfg.layers) l.feat_dropout = l.attn_dropout = 0.4;
  const ParamStore ps = init_params(g, cfg, 4);
  auto run = [&](std::uint64_t seed, bool train) {
    Tape tape;
    BoundParams p(tape, ps);
    return model_forward(tape, g, cfg, p, 0, {train, seed}).logits.value();
  };
  EXPECT_EQ(run(1, true), run(1, true));
  EXPECT_NE(run(1, true), run(2, true));
  EXPECT_EQ(run(1, false), run(2, false));
}

TEST(InitParams, CreatesOnlyUsedParameters) {
  const HeteroGraph g = random_hetero_graph(2, {2, 4, 4, 3, 0.5, true});
  LayerConfig cfg = small_layer(2, 2);
  cfg.no_micro = true;
  cfg.no_macro = true;
  const ParamStore ps = init_params(g, ModelConfig::stacked(1, cfg, 0), 0);
  for (const auto& name : ps.names()) {
    EXPECT_EQ(name.find("micro.a"), std::string::npos) << name;
    EXPECT_EQ(name.find("macro.U"), std::string::npos) << name;
    EXPECT_EQ(name.find("macro.mu"), std::string::npos) << name;
  }
  const ParamStore full = init_params(g, ModelConfig::stacked(1, small_layer(2, 2), 0), 0);
  EXPECT_TRUE(full.contains(param_key::macro_mu(1)));
  EXPECT_EQ(full.at(param_key::macro_mu(1)).shape(), (std::vector<std::size_t>{2, 4}));
  EXPECT_EQ(full.at(param_key::res_gate(1, "A")).item(), 0.0);
  EXPECT_EQ(full, init_params(g, ModelConfig::stacked(1, small_layer(2, 2), 0), 0));
}
