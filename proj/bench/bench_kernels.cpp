// Serial reference vs OpenMP kernels for minibatch gradients and evaluation.
#include <benchmark/benchmark.h>

#include "ltrajdiff/kernels.hpp"
#include "ltrajdiff/metrics.hpp"
#include "ltrajdiff/model.hpp"
#include "ltrajdiff/synthdata.hpp"

using namespace ltrajdiff;

namespace {

const GeneratedData& data() {
  static const GeneratedData d = generate_dataset(SceneConfig{}, 200, SplitFractions{0.8, 0.1, 0.1}, 1);
  return d;
}

const LTrajDiffModel& model() {
  static const LTrajDiffModel m = [] {
    ModelConfig c;
    c.diffusion.K = 20;
    LTrajDiffModel mm(c, 2);
    mm.fit_normalization(data().train);
    return mm;
  }();
  return m;
}

std::vector<BatchItem> batch(std::size_t n) {
  std::vector<BatchItem> b;
  for (std::size_t i = 0; i < n; ++i) b.push_back({&data().train.samples[i], 100 + i});
  return b;
}

void BM_BatchGradientSerial(benchmark::State& state) {
  const auto b = batch(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(batch_gradient_serial(model(), b, MaskSpec{}).loss);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BatchGradientParallel(benchmark::State& state) {
  const auto b = batch(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(batch_gradient_parallel(model(), b, MaskSpec{}).loss);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

EvalOptions eval_options() {
  EvalOptions o;
  o.keep_sequences = false;
  o.max_samples = 16;
  return o;
}

void BM_EvaluateSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_serial(model(), data().val, eval_options()).mse_t);
  state.SetItemsProcessed(state.iterations() * 16);
}

void BM_EvaluateParallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(model(), data().val, eval_options()).mse_t);
  state.SetItemsProcessed(state.iterations() * 16);
}

}  // namespace

BENCHMARK(BM_BatchGradientSerial)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchGradientParallel)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
