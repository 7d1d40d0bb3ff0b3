#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "fluxnet/closures.hpp"
#include "fluxnet/fluid.hpp"
#include "fluxnet/kinetic.hpp"

using namespace fluxnet;

namespace {

struct Profiles {
  std::vector<double> rho, u, T;
};

Profiles smooth_profiles(int nx) {
  Profiles p{std::vector<double>(nx), std::vector<double>(nx), std::vector<double>(nx)};
  for (int i = 0; i < nx; ++i) {
    const double x = 2.0 * std::numbers::pi * i / nx;
    p.rho[i] = 1.0 + 0.2 * std::sin(x);
    p.u[i] = 0.1 * std::cos(2 * x);
    p.T[i] = 1.0 + 0.1 * std::sin(3 * x);
  }
  return p;
}

}  // namespace

// Poisson, transport and BGK for one time step.
static void BM_KineticStep(benchmark::State& state) {
  const auto grid = PhaseGrid::make(static_cast<int>(state.range(0)),
                                    static_cast<int>(state.range(1)), 7.0);
  const auto p = smooth_profiles(grid.nx);
  KineticSimulation sim(maxwellian(p.rho, p.u, p.T, grid), 0.1, grid);
  const double dt = 0.5 * grid.dx() / grid.vmax;
  for (auto _ : state) sim.step(dt);
  state.SetItemsProcessed(state.iterations() * grid.nx * grid.nv);
}
BENCHMARK(BM_KineticStep)
    ->Args({512, 101})
    ->Args({1024, 141})
    ->Unit(benchmark::kMillisecond);

static void BM_TransportStep(benchmark::State& state) {
  const auto grid = PhaseGrid::make(static_cast<int>(state.range(0)), 141, 7.0);
  const auto p = smooth_profiles(grid.nx);
  auto f = maxwellian(p.rho, p.u, p.T, grid);
  const auto E = solve_poisson(p.rho, grid.dx()).E;
  std::vector<double> scratch;
  const double dt = 0.5 * grid.dx() / grid.vmax;
  for (auto _ : state) transport_step_inplace(f, E, dt, grid, scratch);
}
BENCHMARK(BM_TransportStep)->Arg(1024)->Unit(benchmark::kMillisecond);

static void BM_BgkRelax(benchmark::State& state) {
  const auto grid = PhaseGrid::make(static_cast<int>(state.range(0)), 141, 7.0);
  const auto p = smooth_profiles(grid.nx);
  auto f = maxwellian(p.rho, p.u, p.T, grid);
  for (auto _ : state) bgk_relax_inplace(f, 1e-3, 0.1, grid);
}
BENCHMARK(BM_BgkRelax)->Arg(1024)->Unit(benchmark::kMillisecond);

static void BM_FluidExplicitStep(benchmark::State& state) {
  const int nx = static_cast<int>(state.range(0));
  const auto p = smooth_profiles(nx);
  const auto U = fluid_from_primitives(p.rho, p.u, p.T, SpaceGrid{nx});
  const auto E = solve_poisson(p.rho, U.grid.dx()).E;
  const std::vector<double> q(nx, 0.0);
  const double dt = fluid_dt(U);
  for (auto _ : state) benchmark::DoNotOptimize(explicit_step(U, q, E, dt));
}
BENCHMARK(BM_FluidExplicitStep)->Arg(512)->Arg(1024)->Unit(benchmark::kMicrosecond);

static void BM_NavierStokesStep(benchmark::State& state) {
  const int nx = static_cast<int>(state.range(0));
  const auto p = smooth_profiles(nx);
  const auto U = fluid_from_primitives(p.rho, p.u, p.T, SpaceGrid{nx});
  const auto E = solve_poisson(p.rho, U.grid.dx()).E;
  const double dt = fluid_dt(U);
  for (auto _ : state) benchmark::DoNotOptimize(ns_semi_implicit_step(U, E, 0.1, dt));
}
BENCHMARK(BM_NavierStokesStep)->Arg(512)->Arg(1024)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
