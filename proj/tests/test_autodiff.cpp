#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "hgconv/grad_check.hpp"
#include "hgconv/grad_suite.hpp"
#include "hgconv/ops.hpp"
#include "hgconv/optim.hpp"
#include "hgconv/param_io.hpp"
#include "hgconv/params.hpp"
#include "support.hpp"

using namespace hgconv;
using hgconv::testing::bit_equal;
using hgconv::testing::random_tensor;

namespace {

Tensor softmax_values(const std::vector<double>& scores, const Index& seg, std::size_t n) {
  Tape tape;
  Var s = tape.constant(Tensor(scores.size(), 1, scores));
  return segment_softmax(s, seg, n).value();
}

}  // namespace

TEST(Tape, SigmoidAtZeroHasQuarterGradient) {
  Tape tape;
  Var x = tape.variable(Tensor::scalar(0.0));
  Var y = sigmoid(x);
  tape.backward(y);
  EXPECT_DOUBLE_EQ(y.value().item(), 0.5);
  EXPECT_DOUBLE_EQ(x.grad().item(), 0.25);
}

TEST(Tape, UnusedParameterGetsZeroGradient) {
  ParamStore ps;
  ps.set("used", Tensor(2, 2, 1.5));
  ps.set("unused", Tensor(3, 1, 2.0));
  Tape tape;
  BoundParams p(tape, ps);
  tape.backward(sum(p["used"]));
  const ParamStore g = p.gradients();
  EXPECT_EQ(g.at("used"), Tensor(2, 2, 1.0));
  EXPECT_EQ(g.at("unused"), Tensor(3, 1, 0.0));
}

TEST(Tape, NonScalarLossIsRejected) {
  Tape tape;
  Var x = tape.variable(Tensor(2, 1, 1.0));
  EXPECT_THROW(tape.backward(x), std::invalid_argument);
}

TEST(Tape, NonFiniteValueIsRejected) {
  Tape tape;
  Var x = tape.variable(Tensor::scalar(1e308));
  EXPECT_THROW(scale(x, 10.0), std::domain_error);
}

TEST(Tape, LinearLossGradientIsOuterProduct) {
  Rng rng(3);
  const Tensor W0 = random_tensor(rng, 3, 4);
  const Tensor x0 = random_tensor(rng, 4, 2);
  Tape tape;
  Var W = tape.variable(W0);
  Var x = tape.constant(x0);
  tape.backward(sum(matmul(W, x)));
  // d/dW_ij Σ_k (W x)_ik = Σ_k x_jk
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(W.grad()(i, j), x0(j, 0) + x0(j, 1));
  }
  const double err = grad_check([&](Tape& t, Var w) { return sum(matmul(w, t.constant(x0))); }, W0);
  EXPECT_LT(err, 1e-8);
}

TEST(Tape, RepeatedForwardBackwardIsBitIdentical) {
  Rng rng(11);
  const Tensor a0 = random_tensor(rng, 5, 3);
  const Tensor s0 = random_tensor(rng, 5, 1);
  auto run = [&](Tensor& grad) {
    Tape tape;
    Var a = tape.variable(a0);
    Var s = tape.variable(s0);
    Var w = segment_softmax(s, {0, 1, 0, 1, 1}, 2);
    Var loss = sum(elu(head_scale(a, w)));
    tape.backward(loss);
    grad = a.grad();
    return loss.value();
  };
  Tensor g1, g2;
  EXPECT_TRUE(bit_equal(run(g1), run(g2)));
  EXPECT_TRUE(bit_equal(g1, g2));
}

TEST(GradCheck, QuadraticIsExact) {
  const Tensor theta(1, 2, std::vector<double>{1.0, 2.0});
  const double err = grad_check([](Tape&, Var t) { return sum(row_dot(t, t)); }, theta);
  EXPECT_LT(err, 1e-8);

  Tape t2;
  Var v = t2.variable(theta);
  t2.backward(sum(row_dot(v, v)));
  EXPECT_DOUBLE_EQ(v.grad()(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(v.grad()(0, 1), 4.0);
}

TEST(GradCheck, RelativeErrorHasFloor) {
  EXPECT_DOUBLE_EQ(relative_error(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(1e-9, 0.0), 1e-9 / 1e-8);
  EXPECT_DOUBLE_EQ(relative_error(1.0, 3.0), 0.5);
}

TEST(GradCheck, EvalModeDropoutMatchesNoDropout) {
  Rng rng(5);
  const Tensor theta = random_tensor(rng, 3, 3);
  auto base = [](Tape&, Var t) { return sum(sigmoid(t)); };
  auto with_dropout = [](Tape&, Var t) { return sum(sigmoid(dropout(t, 0.5, 42, false))); };
  EXPECT_EQ(grad_check(base, theta), grad_check(with_dropout, theta));
}

TEST(GradCheck, ParamStoreVariantReportsEveryParameter) {
  ParamStore ps;
  ps.set("a", Tensor(2, 2, std::vector<double>{0.1, -0.3, 0.7, 0.2}));
  ps.set("b", Tensor(2, 1, std::vector<double>{0.4, -0.5}));
  std::map<std::string, double> per;
  const double err = grad_check_params(
      [](Tape&, const BoundParams& p) { return sum(elu(matmul(p["a"], p["b"]))); }, ps, 1e-5, &per);
  EXPECT_LT(err, 1e-7);
  EXPECT_EQ(per.size(), 2u);
}

TEST(GradSuite, CoversEveryOpAndTheModel) {
  const auto entries = run_grad_suite(0, 2);
  std::set<std::string> names;
  for (const auto& e : entries) {
    names.insert(e.op);
    EXPECT_GT(e.instances, 0u) << e.op;
  }
  for (const char* op : {"matmul", "linear", "add", "add_bias", "scale", "sum", "concat_cols",
                         "concat_rows", "row_select", "leaky_relu", "relu", "elu", "sigmoid",
                         "log_sigmoid", "dropout", "segment_sum", "segment_softmax", "head_dot",
                         "head_scale", "lerp", "row_dot", "softmax_cross_entropy", "hgconv_2layer"}) {
    EXPECT_TRUE(names.count(op)) << op;
  }
}

TEST(SegmentSoftmax, SingleElementIsOne) {
  for (double x : {-700.0, -3.5, 0.0, 12.0, 700.0}) {
    EXPECT_EQ(softmax_values({x}, {0}, 1)(0, 0), 1.0);
  }
}

TEST(SegmentSoftmax, EqualScoresAreUniform) {
  const Tensor a = softmax_values({0.0, 0.0}, {0, 0}, 1);
  EXPECT_EQ(a(0, 0), 0.5);
  EXPECT_EQ(a(1, 0), 0.5);
}

TEST(SegmentSoftmax, MatchesScalarOracle) {
  const Tensor a = softmax_values({1.0, 2.0, 3.0}, {0, 0, 0}, 1);
  const double z = std::exp(-2.0) + std::exp(-1.0) + 1.0;
  EXPECT_NEAR(a(0, 0), std::exp(-2.0) / z, 1e-15);
  EXPECT_NEAR(a(1, 0), std::exp(-1.0) / z, 1e-15);
  EXPECT_NEAR(a(2, 0), 1.0 / z, 1e-15);
}

TEST(SegmentSoftmax, EmptySegmentIsAnError) {
  EXPECT_THROW(softmax_values({1.0, 2.0}, {0, 0}, 2), std::invalid_argument);
}

// Property: random unsorted segments, several columns. Each column of each
// segment is positive, sums to 1, and ignores a per-segment shift.
TEST(SegmentSoftmax, NormalizationAndShiftInvarianceProperty) {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t segs = 1 + rng.below(6);
    const std::size_t cols = 1 + rng.below(3);
    Index ids;
    for (std::size_t s = 0; s < segs; ++s) ids.push_back(s);  // every segment nonempty
    const std::size_t extra = rng.below(15);
    for (std::size_t i = 0; i < extra; ++i) ids.push_back(rng.below(segs));
    for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);
    const Tensor s0 = random_tensor(rng, ids.size(), cols, 1.0 + 20.0 * rng.uniform());
    std::vector<double> shift(segs);
    for (double& c : shift) c = rng.uniform(-50.0, 50.0);
    Tensor s1 = s0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (std::size_t c = 0; c < cols; ++c) s1(i, c) += shift[ids[i]];
    }
    Tape tape;
    const Tensor a0 = segment_softmax(tape.constant(s0), ids, segs).value();
    const Tensor a1 = segment_softmax(tape.constant(s1), ids, segs).value();
    for (std::size_t c = 0; c < cols; ++c) {
      std::vector<double> total(segs, 0.0);
      for (std::size_t i = 0; i < ids.size(); ++i) {
        EXPECT_GT(a0(i, c), 0.0);
        EXPECT_NEAR(a0(i, c), a1(i, c), 1e-12);
        total[ids[i]] += a0(i, c);
      }
      for (double t : total) EXPECT_NEAR(t, 1.0, 1e-12);
    }
  }
}

TEST(Dropout, PreservesExpectation) {
  double total = 0.0;
  const int trials = 100000;
  for (int i = 0; i < trials; ++i) {
    Tape tape;
    total += dropout(tape.constant(Tensor::scalar(1.0)), 0.5, derive_seed(9, "trial", i), true).value().item();
  }
  EXPECT_NEAR(total / trials, 1.0, 0.01);
}

TEST(Dropout, EvalModeAndZeroRateAreIdentity) {
  Rng rng(1);
  const Tensor x = random_tensor(rng, 4, 4);
  Tape tape;
  EXPECT_EQ(dropout(tape.constant(x), 0.7, 3, false).value(), x);
  EXPECT_EQ(dropout(tape.constant(x), 0.0, 3, true).value(), x);
  EXPECT_THROW(dropout(tape.constant(x), 1.0, 3, true), std::invalid_argument);
}

TEST(Dropout, SurvivorsAreScaledAndSeedDetermined) {
  Tape tape;
  const Tensor x(10, 10, 2.0);
  const Tensor a = dropout(tape.constant(x), 0.25, 77, true).value();
  const Tensor b = dropout(tape.constant(x), 0.25, 77, true).value();
  EXPECT_EQ(a, b);
  for (double v : a.data()) EXPECT_TRUE(v == 0.0 || v == 2.0 / 0.75);
}

TEST(Ops, ShapeMismatchThrows) {
  Tape tape;
  Var a = tape.constant(Tensor(2, 3));
  Var b = tape.constant(Tensor(2, 2));
  EXPECT_THROW(matmul(a, b), std::invalid_argument);
  EXPECT_THROW(add(a, b), std::invalid_argument);
  EXPECT_THROW(row_select(a, {2}), std::out_of_range);
}

TEST(Ops, SoftmaxCrossEntropyMatchesLoopOracle) {
  Rng rng(8);
  const Tensor logits = random_tensor(rng, 4, 3, 2.0);
  const Index labels = {2, 0, 1, 1};
  Tape tape;
  const double got = softmax_cross_entropy(tape.constant(logits), labels).value().item();
  double want = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    double z = 0.0;
    for (std::size_t c = 0; c < 3; ++c) z += std::exp(logits(i, c));
    want -= std::log(std::exp(logits(i, labels[i])) / z);
  }
  EXPECT_NEAR(got, want, 1e-12);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  ParamStore p;
  p.set("w", Tensor(2, 2, std::vector<double>{1.0, -2.0, 3.0, 0.5}));
  const ParamStore before = p;
  ParamStore g;
  g.set("w", Tensor(2, 2, 0.0));
  AdamState st;
  adam_step(p, g, st);
  EXPECT_EQ(p, before);
  EXPECT_EQ(st.t, 1u);
}

TEST(Adam, FirstStepMatchesClosedForm) {
  ParamStore p;
  p.set("w", Tensor::scalar(0.0));
  ParamStore g;
  g.set("w", Tensor::scalar(1.0));
  AdamState st(AdamOptions{0.01, 0.9, 0.999, 1e-8});
  adam_step(p, g, st);
  // m̂ = 1, v̂ = 1 after bias correction.
  EXPECT_NEAR(p.at("w").item(), -0.01 / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, MomentsFollowRecurrence) {
  const double b1 = 0.9, b2 = 0.999, lr = 0.05, eps = 1e-8;
  ParamStore p;
  p.set("w", Tensor::scalar(1.0));
  ParamStore g;
  g.set("w", Tensor::scalar(0.3));
  AdamState st(AdamOptions{lr, b1, b2, eps});
  double m = 0.0, v = 0.0, theta = 1.0;
  for (int t = 1; t <= 2; ++t) {
    adam_step(p, g, st);
    m = b1 * m + (1 - b1) * 0.3;
    v = b2 * v + (1 - b2) * 0.09;
    theta -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
    EXPECT_EQ(st.t, static_cast<std::size_t>(t));
    EXPECT_NEAR(st.m.at("w").item(), m, 1e-15);
    EXPECT_NEAR(st.v.at("w").item(), v, 1e-15);
    EXPECT_NEAR(p.at("w").item(), theta, 1e-15);
  }
}

TEST(ParamIo, RoundTripIsBitExact) {
  Rng rng(17);
  ParamStore p;
  p.set("layer1.micro.W.P", random_tensor(rng, 4, 3, 1e-3));
  p.set("classifier.W", Tensor(1, 3, std::vector<double>{1.0 / 3.0, -5e-300, 6.02214076e23}));
  const ParamStore q = params_from_json(params_to_json(p));
  ASSERT_EQ(q.names(), p.names());
  for (const auto& name : p.names()) EXPECT_TRUE(bit_equal(p.at(name), q.at(name))) << name;
  EXPECT_EQ(params_to_json(q), params_to_json(p));
}

TEST(Rng, DerivedSeedsDependOnEveryArgument) {
  const auto s = derive_seed(1, "init");
  EXPECT_EQ(s, derive_seed(1, "init"));
  EXPECT_NE(s, derive_seed(2, "init"));
  EXPECT_NE(s, derive_seed(1, "dropout"));
  EXPECT_NE(derive_seed(1, "feat", 1, 0), derive_seed(1, "feat", 0, 1));
}
