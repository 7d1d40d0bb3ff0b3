#include <benchmark/benchmark.h>

#include <random>

#include "fluxnet/trainer.hpp"
#include "fluxnet/vnet.hpp"

using namespace fluxnet;

namespace {

RowMat<double> random_input(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  RowMat<double> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  return m;
}

}  // namespace

// Single same-padding convolution, 32 -> 32 channels, kernel 11.
static void BM_Conv1d(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int batch = 8, cin = 32, cout = 32, k = 11;
  const auto x = random_input(batch * n, cin, 1);
  std::vector<double> w(static_cast<std::size_t>(cin) * cout * k, 0.01), b(cout, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(conv1d<double>(x, batch, w, b, k, cout));
  state.SetItemsProcessed(state.iterations() * batch * n);
}
BENCHMARK(BM_Conv1d)->RangeMultiplier(2)->Range(128, 1024)->Unit(benchmark::kMicrosecond);

// Reference network forward pass against the window length.
static void BM_Forward(benchmark::State& state) {
  VNetConfig cfg;
  cfg.window = static_cast<int>(state.range(0));
  const int batch = static_cast<int>(state.range(1));
  const auto p = init_params(cfg, 1);
  const auto x = random_input(batch * cfg.window, cfg.in_channels, 2);
  for (auto _ : state) benchmark::DoNotOptimize(forward<double>(cfg, p.values, x, batch));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_Forward)
    ->ArgsProduct({{128, 256, 512, 1024}, {1, 16}})
    ->Unit(benchmark::kMillisecond);

static void BM_ForwardSingle(benchmark::State& state) {
  VNetConfig cfg;
  const auto p = init_params(cfg, 1);
  std::vector<float> pf(p.values.begin(), p.values.end());
  const RowMat<float> x = random_input(16 * cfg.window, cfg.in_channels, 2).cast<float>();
  for (auto _ : state) benchmark::DoNotOptimize(forward<float>(cfg, pf, x, 16));
  state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_ForwardSingle)->Unit(benchmark::kMillisecond);

// One forward and backward pass on a training batch.
static void BM_ForwardBackward(benchmark::State& state) {
  VNetConfig cfg;
  const int batch = static_cast<int>(state.range(0));
  const auto p = init_params(cfg, 1);
  const auto x = random_input(batch * cfg.window, cfg.in_channels, 2);
  const auto dy = random_input(batch * cfg.window, 1, 3);
  std::vector<double> grad(p.values.size());
  for (auto _ : state) {
    ForwardCache<double> cache;
    forward<double>(cfg, p.values, x, batch, &cache);
    backward(cfg, p.values, cache, dy, grad);
    benchmark::DoNotOptimize(grad.data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_ForwardBackward)->Arg(1)->Arg(10)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_AdamStep(benchmark::State& state) {
  VNetConfig cfg;
  auto p = init_params(cfg, 1).values;
  std::vector<double> g(p.size(), 1e-3);
  AdamState adam;
  TrainConfig tc;
  for (auto _ : state) {
    adam_step(p, g, adam, 1e-6, tc);
    benchmark::DoNotOptimize(p.data());
  }
}
BENCHMARK(BM_AdamStep)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
