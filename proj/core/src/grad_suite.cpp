#include "hgconv/grad_suite.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string_view>
#include <map>

#include "hgconv/conv.hpp"
#include "hgconv/grad_check.hpp"
#include "hgconv/ops.hpp"
#include "hgconv/rng.hpp"
#include "hgconv/synthetic.hpp"
#include "hgconv/train.hpp"

namespace hgconv {

namespace {

Tensor randn(std::size_t r, std::size_t c, Rng& rng) {
  Tensor t(r, c);
  for (double& v : t.data()) v = rng.normal();
  return t;
}

std::size_t dim(Rng& rng, std::size_t max = 4) { return 1 + rng.below(max); }

// Projects any output onto a fixed random direction so every entry matters.
Var probe(Tape& tape, Var y, std::uint64_t seed) {
  Rng rng(seed);
  Var w = tape.constant(randn(y.rows(), y.cols(), rng));
  return sum(row_dot(y, w));
}

using Case = std::function<double(Rng&, std::uint64_t, double)>;

// Checks d/dθ of probe(op(θ, ...)) where θ is the input at position `which`
// among `inputs`.
double check_inputs(std::vector<Tensor> inputs, std::uint64_t seed, double eps,
                    const std::function<Var(const std::vector<Var>&)>& op) {
  double worst = 0.0;
  for (std::size_t which = 0; which < inputs.size(); ++which) {
    auto f = [&](Tape& tape, Var theta) {
      std::vector<Var> vars;
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        vars.push_back(i == which ? theta : tape.constant(inputs[i]));
      }
      return probe(tape, op(vars), seed);
    };
    worst = std::max(worst, grad_check(f, inputs[which], eps));
  }
  return worst;
}

std::vector<std::pair<std::string, Case>> op_cases() {
  std::vector<std::pair<std::string, Case>> cases;
  auto add_case = [&](std::string name, Case c) { cases.emplace_back(std::move(name), std::move(c)); };

  add_case("matmul", [](Rng& rng, std::uint64_t s, double eps) {
    const std::size_t n = dim(rng), k = dim(rng), m = dim(rng);
    return check_inputs({randn(n, k, rng), randn(k, m, rng)}, s, eps,
                        [](const std::vector<Var>& v) { return matmul(v[0], v[1]); });
  });
  add_case("linear", [](Rng& rng, std::uint64_t s, double eps) {
    const std::size_t n = dim(rng), in = dim(rng), out = dim(rng);
    return check_inputs({randn(n, in, rng), randn(out, in, rng)}, s, eps,
                        [](const std::vector<Var>& v) { return linear(v[0], v[1]); });
  });
  add_case("add", [](Rng& rng, std::uint64_t s, double eps) {
    const std::size_t n = dim(rng), m = dim(rng);
    return check_inputs({randn(n, m, rng), randn(n, m, rng)}, s, eps,
                        [](const std::vector<Var>& v) { return add(v[0], v[1]); });
  });
  add_case("add_bias", [](Rng& rng, std::uint64_t s, double eps) {
    const std::size_t n = dim(rng), m = dim(rng);
    return check_inputs({randn(n, m, rng), randn(1, m, rng)}, s, eps,
                        [](const std::vector<Var>& v) { return add_bias(v[0], v[1]); });
  });
  add_case("scale", [](Rng& rng, std::uint64_t s, double eps) {
    const double c = rng.normal();
    return check_inputs({randn(dim(rng), dim(rng), rng)}, s, eps,
                        [c](const std::vector<Var>& v) { return scale(v[0], c); });
  });
  add_case("sum", [](Rng& rng, std::uint64_t s, double eps) {
    return check_inputs({randn(dim(rng), dim(rng), rng)}, s, eps,
                        [](const std::vector<Var>& v) { return sum(v[0]); });
  });
  add_case("concat_cols", [](Rng& rng, std::uint64_t s, double eps) {
    const std::size_t n = dim(rng);
    return check_inputs({randn(n, dim(rng), rng), randn(n, dim(rng), rng), randn(n, dim(rng), rng)}, s,
                        eps, [](const std::vector<Var>& v) { return concat_cols(v); });
  });
  add_case("concat_rows", [](Rng& rng, std::uint64_t s, double eps) {
    const std::size_t m = dim(rng);
    return check_inputs({randn(dim(rng), m, rng), randn(dim(rng), m, rng)}, s, eps,
                        [](const std::vector<Var>& v) { return concat_rows(v); });
  });
  add_case("row_select", [](Rng& rng, std::uint64_t s, double eps) {
    const std::size_t n = dim(rng);
    Index rows(dim(rng, 6));
    for (auto& r : rows) r = rng.below(n);
    return check_inputs({randn(n, dim(rng), rng)}, s, eps,
                        [rows](const std::vector<Var>& v) { return row_select(v[0], rows); });
  });
  auto unary = [&](const char* name, std::function<Var(Var)> f) {
    add_case(name, [f](Rng& rng, std::uint64_t s, double eps) {
      return check_inputs({randn(dim(rng), dim(rng), rng)}, s, eps,
                          [f](const std::vector<Var>& v) { return f(v[0]); });
    });
  };
  unary("leaky_relu", [](Var x) { return leaky_relu(x, 0.2); });
  unary("relu", [](Var x) { return relu(x); });
  unary("elu", [](Var x) { return elu(x); });
  unary("sigmoid", [](Var x) { return sigmoid(x); });
  unary("log_sigmoid", [](Var x) { return log_sigmoid(x); });
  add_case("dropout", [](Rng& rng, std::uint64_t s, double eps) {
    const std::uint64_t mask_seed = rng.next();
    return check_inputs({randn(dim(rng), dim(rng), rng)}, s, eps, [mask_seed](const std::vector<Var>& v) {
      return dropout(v[0], 0.3, mask_seed, true);
    });
  });
  auto segments = [](Rng& rng, std::size_t& num) {
    num = dim(rng, 3);
    Index seg(num + rng.below(5));
    for (std::size_t i = 0; i < seg.size(); ++i) seg[i] = i < num ? i : rng.below(num);
    for (std::size_t i = seg.size(); i > 1; --i) std::swap(seg[i - 1], seg[rng.below(i)]);
    return seg;
  };
  add_case("segment_sum", [segments](Rng& rng, std::uint64_t s, double eps) {
    std::size_t num = 0;
    const Index seg = segments(rng, num);
    return check_inputs({randn(seg.size(), dim(rng), rng)}, s, eps, [seg, num](const std::vector<Var>& v) {
      return segment_sum(v[0], seg, num);
    });
  });
  add_case("segment_softmax", [segments](Rng& rng, std::uint64_t s, double eps) {
    std::size_t num = 0;
    const Index seg = segments(rng, num);
    return check_inputs({randn(seg.size(), dim(rng), rng)}, s, eps, [seg, num](const std::vector<Var>& v) {
      return segment_softmax(v[0], seg, num);
    });
  });
  add_case("head_dot", [](Rng& rng, std::uint64_t s, double eps) {
    const std::size_t K = dim(rng, 3), dh = dim(rng, 3);
    const std::size_t offset = rng.below(2) * dh;
    return check_inputs({randn(dim(rng), K * dh, rng), randn(K, 2 * dh, rng)}, s, eps,
                        [offset](const std::vector<Var>& v) { return head_dot(v[0], v[1], offset); });
  });
  add_case("head_scale", [](Rng& rng, std::uint64_t s, double eps) {
    const std::size_t n = dim(rng), K = dim(rng, 3), dh = dim(rng, 3);
    return check_inputs({randn(n, K * dh, rng), randn(n, K, rng)}, s, eps,
                        [](const std::vector<Var>& v) { return head_scale(v[0], v[1]); });
  });
  add_case("lerp", [](Rng& rng, std::uint64_t s, double eps) {
    const std::size_t n = dim(rng), m = dim(rng);
    return check_inputs({randn(n, m, rng), randn(n, m, rng), randn(1, 1, rng)}, s, eps,
                        [](const std::vector<Var>& v) { return lerp(v[0], v[1], v[2]); });
  });
  add_case("row_dot", [](Rng& rng, std::uint64_t s, double eps) {
    const std::size_t n = dim(rng), m = dim(rng);
    return check_inputs({randn(n, m, rng), randn(n, m, rng)}, s, eps,
                        [](const std::vector<Var>& v) { return row_dot(v[0], v[1]); });
  });
  add_case("softmax_cross_entropy", [](Rng& rng, std::uint64_t s, double eps) {
    const std::size_t n = dim(rng), c = 1 + dim(rng);
    Index labels(n);
    for (auto& l : labels) l = rng.below(c);
    return check_inputs({randn(n, c, rng)}, s, eps, [labels](const std::vector<Var>& v) {
      return softmax_cross_entropy(v[0], labels);
    });
  });
  return cases;
}

struct ModelInstance {
  HeteroGraph graph;
  ModelConfig cfg;
  ParamStore params;
  NodeTypeId label_type = 0;
  Index labels;
};

// Smallest distance of any ReLU / LeakyReLU input to the kink at 0.
double kink_margin(const Tape& tape) {
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t id = 0; id < tape.size(); ++id) {
    const std::string_view op = tape.op_name(id);
    if (op != "relu" && op != "leaky_relu") continue;
    for (double x : tape.value_of(tape.input_ids(id).front()).data()) margin = std::min(margin, std::abs(x));
  }
  return margin;
}

ModelInstance draw_instance(std::uint64_t seed, bool rgcn) {
  ModelInstance m;
  Rng rng(derive_seed(seed, "model"));
  m.graph = random_hetero_graph(derive_seed(seed, "graph"), RandomGraphShape{3, 5, 4, 3, 0.45, true});
  LayerConfig layer;
  layer.heads = 2;
  layer.head_dim = 2;
  const std::size_t classes = 2 + rng.below(2);
  m.cfg = ModelConfig::stacked(2, layer, classes);
  m.cfg.rgcn.enabled = rgcn;
  m.params = init_params(m.graph, m.cfg, derive_seed(seed, "init"));
  // Non-zero gates so both residual branches carry gradient.
  for (auto& [name, t] : m.params) {
    if (name.find(".res.gate.") != std::string::npos) t(0, 0) = rng.normal();
  }
  m.label_type = rng.below(m.graph.num_node_types());
  m.labels.resize(m.graph.node_type(m.label_type).count);
  for (auto& l : m.labels) l = rng.below(classes);
  return m;
}

// Central differences are undefined across a kink, so instances with a
// ReLU-family input within 1e-3 of 0 are redrawn.
ModelInstance model_instance(std::uint64_t seed, bool rgcn) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    ModelInstance m = draw_instance(derive_seed(seed, "attempt", attempt), rgcn);
    Tape tape;
    BoundParams p(tape, m.params);
    model_forward(tape, m.graph, m.cfg, p, m.label_type, ForwardContext{false, 0});
    if (kink_margin(tape) >= 1e-3) return m;
  }
}

double check_model(std::uint64_t seed, double eps, bool rgcn) {
  const ModelInstance m = model_instance(seed, rgcn);
  auto loss = [&](Tape& tape, const BoundParams& p) {
    ModelOutput out = model_forward(tape, m.graph, m.cfg, p, m.label_type, ForwardContext{false, 0});
    return softmax_cross_entropy(out.logits, m.labels);
  };
  return grad_check_params(loss, m.params, eps);
}

double check_skipgram(std::uint64_t seed, double eps) {
  ModelInstance m = model_instance(seed, false);
  m.cfg.num_classes = 0;
  m.params.erase(param_key::classifier());
  PairSet pairs;
  try {
    pairs = sample_pairs(m.graph, 1, seed, 1);
  } catch (const std::invalid_argument&) {
    return 0.0;  // instance without feasible negatives
  }
  auto loss = [&](Tape& tape, const BoundParams& p) {
    ModelOutput out = model_forward(tape, m.graph, m.cfg, p, m.label_type, ForwardContext{false, 0});
    return unsupervised_loss(out.embeddings, pairs);
  };
  return grad_check_params(loss, m.params, eps);
}

}  // namespace

std::vector<GradCheckEntry> run_grad_suite(std::uint64_t seed, std::size_t instances, double eps) {
  std::vector<GradCheckEntry> out;
  for (const auto& [name, run] : op_cases()) {
    GradCheckEntry e{name, 0.0, instances};
    for (std::size_t i = 0; i < instances; ++i) {
      Rng rng(derive_seed(seed, name, i));
      e.max_rel_err = std::max(e.max_rel_err, run(rng, derive_seed(seed, "probe", i), eps));
    }
    out.push_back(e);
  }
  GradCheckEntry full{"hgconv_2layer", 0.0, instances};
  GradCheckEntry rgcn{"rgcn_2layer", 0.0, instances};
  GradCheckEntry sg{"skipgram", 0.0, instances};
  for (std::size_t i = 0; i < instances; ++i) {
    full.max_rel_err = std::max(full.max_rel_err, check_model(derive_seed(seed, "hgconv", i), eps, false));
    rgcn.max_rel_err = std::max(rgcn.max_rel_err, check_model(derive_seed(seed, "rgcn", i), eps, true));
    sg.max_rel_err = std::max(sg.max_rel_err, check_skipgram(derive_seed(seed, "skipgram", i), eps));
  }
  out.push_back(full);
  out.push_back(rgcn);
  out.push_back(sg);
  return out;
}

}  // namespace hgconv
