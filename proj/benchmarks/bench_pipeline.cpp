#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fluxnet/closures.hpp"
#include "fluxnet/processing.hpp"

using namespace fluxnet;

namespace {

std::vector<double> wave(int n, double phase) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = 1.0 + 0.2 * std::sin(2.0 * std::numbers::pi * i / n + phase);
  return v;
}

}  // namespace

static void BM_FourierResample(benchmark::State& state) {
  const auto v = wave(512, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(fourier_resample(v, 1024));
}
BENCHMARK(BM_FourierResample)->Unit(benchmark::kMicrosecond);

static void BM_GaussianSmooth(benchmark::State& state) {
  const auto v = wave(1024, 0.3);
  const double sigma = static_cast<double>(state.range(0)) / 100.0;
  for (auto _ : state)
    benchmark::DoNotOptimize(gaussian_smooth(v, sigma, 2.0 * std::numbers::pi / 1024));
}
BENCHMARK(BM_GaussianSmooth)->Arg(6)->Arg(20)->Unit(benchmark::kMicrosecond);

// Full neural heat-flux evaluation with the reference network, as called
// once per fluid time step.
static void BM_NeuralHeatFlux(benchmark::State& state) {
  NeuralClosureConfig cfg;
  cfg.model = init_params(VNetConfig{}, 1);
  cfg.stats.mean = {0.5, 1.0, 0.0, 1.0};
  cfg.stats.stddev = {0.3, 0.2, 0.2, 0.2};
  cfg.precision = state.range(1) ? Precision::Single : Precision::Double;
  const int nx = static_cast<int>(state.range(0));
  const auto rho = wave(nx, 0.1), u = wave(nx, 0.7), T = wave(nx, 1.3);
  const double dx = cfg.pipeline.domain_length / nx;
  for (auto _ : state) benchmark::DoNotOptimize(neural_heat_flux(cfg, 0.1, rho, u, T, dx));
}
BENCHMARK(BM_NeuralHeatFlux)
    ->ArgsProduct({{512, 1024}, {0, 1}})
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
