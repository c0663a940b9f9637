#include <benchmark/benchmark.h>

#include "hgconv/config_io.hpp"
#include "hgconv/conv.hpp"
#include "hgconv/eval.hpp"
#include "hgconv/ops.hpp"
#include "hgconv/rng.hpp"
#include "hgconv/synthetic.hpp"
#include "hgconv/train.hpp"

using namespace hgconv;

namespace {

// ACM-like shape at desk scale: P/A/T with two relations plus inverses.
const Dataset& bench_dataset() {
  static const Dataset d = [] {
    SyntheticSpec s;
    s.node_types = {{"P", 300, 16}, {"A", 100, 16}, {"T", 50, 16}};
    s.relations = {{"A", "writes", "P", 3.0, {}}, {"T", "about", "P", 2.0, {}}};
    s.label_type = "P";
    s.num_classes = 3;
    s.signal = Signal::mixed;
    return generate_synthetic(s, 0);
  }();
  return d;
}

ModelConfig bench_model(std::size_t heads) {
  LayerConfig l;
  l.heads = heads;
  l.head_dim = 8;
  return ModelConfig::stacked(2, l, 3);
}

void BM_ModelForward(benchmark::State& state) {
  const Dataset& d = bench_dataset();
  const ModelConfig cfg = bench_model(static_cast<std::size_t>(state.range(0)));
  const ParamStore ps = init_params(d.graph, cfg, 0);
  for (auto _ : state) {
    Tape tape;
    BoundParams p(tape, ps);
    ModelOutput out = model_forward(tape, d.graph, cfg, p, d.labels.node_type, {});
    benchmark::DoNotOptimize(out.logits.value().data().data());
  }
}
BENCHMARK(BM_ModelForward)->Arg(1)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
  const Dataset& d = bench_dataset();
  const ModelConfig cfg = bench_model(static_cast<std::size_t>(state.range(0)));
  const ParamStore ps = init_params(d.graph, cfg, 0);
  for (auto _ : state) {
    Tape tape;
    BoundParams p(tape, ps);
    ModelOutput out = model_forward(tape, d.graph, cfg, p, d.labels.node_type, {true, 1});
    Var loss = semi_supervised_loss(row_select(out.logits, d.split.train), [&] {
      Index y;
      for (std::size_t v : d.split.train) y.push_back(d.labels.labels.at(v));
      return y;
    }());
    tape.backward(loss);
    benchmark::DoNotOptimize(loss.value().item());
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_SegmentSoftmax(benchmark::State& state) {
  const std::size_t segments = static_cast<std::size_t>(state.range(0)), per = 8, heads = 8;
  Index ids;
  for (std::size_t s = 0; s < segments; ++s) ids.insert(ids.end(), per, s);
  Rng rng(1);
  Tensor scores(ids.size(), heads);
  for (double& x : scores.data()) x = rng.normal();
  for (auto _ : state) {
    Tape tape;
    Var out = segment_softmax(tape.variable(scores), ids, segments);
    tape.backward(sum(out));
    benchmark::DoNotOptimize(out.value().data().data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * ids.size() * heads));
}
BENCHMARK(BM_SegmentSoftmax)->Range(64, 8192);

void BM_KMeans(benchmark::State& state) {
  Rng rng(2);
  Tensor x(300, 32);
  for (double& v : x.data()) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(kmeans(row_normalize(x), 3, 0));
}
BENCHMARK(BM_KMeans)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
