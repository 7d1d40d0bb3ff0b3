#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fluxnet/kinetic.hpp"

namespace fluxnet {

/// Conservative variables (rho, m = rho u, w) on a periodic grid.
struct FluidState {
  SpaceGrid grid;
  std::vector<double> rho, m, w;
  double time = 0.0;

  FluidState() = default;
  explicit FluidState(SpaceGrid g, double t = 0.0)
      : grid(g), rho(g.nx), m(g.nx), w(g.nx), time(t) {}

  int size() const noexcept { return grid.nx; }
};

struct Primitives {
  std::vector<double> rho, u, p, T, c;
};

/// Builds the conservative state from (rho, u, T) with w = rho u^2/2 + rho T/2.
FluidState fluid_from_primitives(std::span<const double> rho, std::span<const double> u,
                                 std::span<const double> T, const SpaceGrid& grid,
                                 double time = 0.0);

/// u = m/rho, p = 2w - rho u^2, T = p/rho, c = sqrt(3p/rho). Throws
/// NumericalError when rho or p is not strictly positive (or not finite).
Primitives primitive_vars(const FluidState& U);

struct CellState {
  double rho = 0.0, m = 0.0, w = 0.0;
};

struct FluxVector {
  double mass = 0.0, momentum = 0.0, energy = 0.0;
};

/// Local Lax-Friedrichs interface flux; the heat flux enters the energy
/// component as the centered average of the two cell values.
FluxVector llf_flux(const CellState& left, const CellState& right, double q_left, double q_right);

/// dx / (2 max_i S_{i+1/2}).
double fluid_dt(const FluidState& U);

/// Forward Euler finite-volume step with the -E (0, rho, rho u) source.
FluidState explicit_step(const FluidState& U, std::span<const double> q, std::span<const double> E,
                         double dt);

/// Explicit mass/momentum update, implicit temperature diffusion for the
/// Navier-Stokes heat flux q = -3/2 eps p dT/dx.
FluidState ns_semi_implicit_step(const FluidState& U, std::span<const double> E, double eps,
                                 double dt);

/// Solves the cyclic system lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]
/// (indices mod n) by the Sherman-Morrison reduction to two Thomas solves.
std::vector<double> solve_periodic_tridiagonal(std::span<const double> lower,
                                               std::span<const double> diag,
                                               std::span<const double> upper,
                                               std::span<const double> rhs);

/// Arguments handed to a heat-flux closure.
struct ClosureArgs {
  double eps = 0.0;
  std::span<const double> rho, u, T;
  double dx = 0.0;
  double time = 0.0;
};

using ClosureFn = std::function<std::vector<double>(const ClosureArgs&)>;

enum class ClosureKind { Zero, NavierStokes, Kinetic, Neural };

struct Closure {
  ClosureKind kind = ClosureKind::Zero;
  ClosureFn fn;
  std::string name;
};

struct FluidOptions {
  PoissonSign poisson_sign = PoissonSign::Restoring;
};

struct FluidRecord {
  double time = 0.0;
  FluidState state;
  std::vector<double> E;
  std::vector<double> q;
};

/// Integrates to t_end, recording at every multiple of record_dt (and at
/// t_end). The Navier-Stokes closure switches to the semi-implicit step.
/// Throws SimulationAborted with the time reached on loss of admissibility.
std::vector<FluidRecord> run_fluid(const FluidState& init, const Closure& closure, double eps,
                                   double t_end, double record_dt, FluidOptions options = {});

/// Record times used by run_fluid: k * record_dt for k = 0..K, last one t_end.
std::vector<double> record_schedule(double t_end, double record_dt);

}  // namespace fluxnet
