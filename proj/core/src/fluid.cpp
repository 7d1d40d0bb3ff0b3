#include "fluxnet/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fluxnet/error.hpp"

namespace fluxnet {
namespace {

CellState cell(const FluidState& U, int i) { return {U.rho[i], U.m[i], U.w[i]}; }

void require_consistent(const FluidState& U, const char* where) {
  const auto n = static_cast<std::size_t>(U.grid.nx);
  if (n < 4 || U.rho.size() != n || U.m.size() != n || U.w.size() != n)
    throw ConfigError(std::string(where) + ": inconsistent fluid state");
}

std::vector<double> thomas(std::span<const double> a, std::span<const double> b,
                           std::span<const double> c, std::span<const double> r) {
  const std::size_t n = b.size();
  std::vector<double> cp(n), x(n);
  double denom = b[0];
  if (denom == 0.0) throw NumericalError("tridiagonal solve: zero pivot");
  cp[0] = c[0] / denom;
  x[0] = r[0] / denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = b[i] - a[i] * cp[i - 1];
    if (denom == 0.0 || !std::isfinite(denom)) throw NumericalError("tridiagonal solve: zero pivot");
    cp[i] = i + 1 < n ? c[i] / denom : 0.0;
    x[i] = (r[i] - a[i] * x[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) x[i] -= cp[i] * x[i + 1];
  return x;
}

}  // namespace

FluidState fluid_from_primitives(std::span<const double> rho, std::span<const double> u,
                                 std::span<const double> T, const SpaceGrid& grid, double time) {
  grid.validate();
  const auto n = static_cast<std::size_t>(grid.nx);
  if (rho.size() != n || u.size() != n || T.size() != n)
    throw ConfigError("fluid_from_primitives: vectors must have length nx");
  FluidState U(grid, time);
  for (std::size_t i = 0; i < n; ++i) {
    U.rho[i] = rho[i];
    U.m[i] = rho[i] * u[i];
    U.w[i] = 0.5 * rho[i] * u[i] * u[i] + 0.5 * rho[i] * T[i];
  }
  return U;
}

Primitives primitive_vars(const FluidState& U) {
  require_consistent(U, "primitive_vars");
  const int n = U.size();
  Primitives P;
  for (auto* v : {&P.rho, &P.u, &P.p, &P.T, &P.c}) v->resize(n);
  for (int i = 0; i < n; ++i) {
    const double rho = U.rho[i];
    if (!(rho > 0.0) || !std::isfinite(rho))
      throw NumericalError("primitive_vars: non-positive density at cell " + std::to_string(i));
    const double u = U.m[i] / rho;
    const double p = 2.0 * U.w[i] - rho * u * u;
    if (!(p > 0.0) || !std::isfinite(p))
      throw NumericalError("primitive_vars: non-positive pressure at cell " + std::to_string(i));
    P.rho[i] = rho;
    P.u[i] = u;
    P.p[i] = p;
    P.T[i] = p / rho;
    P.c[i] = std::sqrt(3.0 * p / rho);
  }
  return P;
}

FluxVector llf_flux(const CellState& left, const CellState& right, double q_left, double q_right) {
  auto physical = [](const CellState& s, double& u, double& p, double& c) {
    if (!(s.rho > 0.0)) throw NumericalError("llf_flux: non-positive density");
    u = s.m / s.rho;
    p = 2.0 * s.w - s.rho * u * u;
    if (!(p > 0.0)) throw NumericalError("llf_flux: non-positive pressure");
    c = std::sqrt(3.0 * p / s.rho);
    return FluxVector{s.m, s.m * u + p, (s.w + p) * u};
  };
  double ul, pl, cl, ur, pr, cr;
  const FluxVector fl = physical(left, ul, pl, cl);
  const FluxVector fr = physical(right, ur, pr, cr);
  const double S = std::max(std::abs(ul) + cl, std::abs(ur) + cr);
  return {0.5 * (fl.mass + fr.mass) - 0.5 * S * (right.rho - left.rho),
          0.5 * (fl.momentum + fr.momentum) - 0.5 * S * (right.m - left.m),
          0.5 * (fl.energy + fr.energy) - 0.5 * S * (right.w - left.w) +
              0.5 * (q_left + q_right)};
}

double fluid_dt(const FluidState& U) {
  const Primitives P = primitive_vars(U);
  double smax = 0.0;
  for (std::size_t i = 0; i < P.u.size(); ++i) smax = std::max(smax, std::abs(P.u[i]) + P.c[i]);
  return U.grid.dx() / (2.0 * smax);
}

FluidState explicit_step(const FluidState& U, std::span<const double> q, std::span<const double> E,
                         double dt) {
  require_consistent(U, "explicit_step");
  const int n = U.size();
  if (q.size() != static_cast<std::size_t>(n) || E.size() != static_cast<std::size_t>(n))
    throw ConfigError("explicit_step: q and E must have length nx");
  // Interface i carries the flux between cells i and i+1.
  std::vector<FluxVector> F(n);
  for (int i = 0; i < n; ++i) {
    const int ip = (i + 1) % n;
    F[i] = llf_flux(cell(U, i), cell(U, ip), q[i], q[ip]);
  }
  FluidState out(U.grid, U.time + dt);
  const double c = dt / U.grid.dx();
  for (int i = 0; i < n; ++i) {
    const FluxVector& r = F[i];
    const FluxVector& l = F[(i + n - 1) % n];
    out.rho[i] = U.rho[i] - c * (r.mass - l.mass);
    out.m[i] = U.m[i] - c * (r.momentum - l.momentum) - dt * E[i] * U.rho[i];
    out.w[i] = U.w[i] - c * (r.energy - l.energy) - dt * E[i] * U.m[i];
  }
  return out;
}

FluidState ns_semi_implicit_step(const FluidState& U, std::span<const double> E, double eps,
                                 double dt) {
  require_consistent(U, "ns_semi_implicit_step");
  if (eps < 0.0) throw ConfigError("ns_semi_implicit_step: eps must be non-negative");
  const int n = U.size();
  const std::vector<double> zero(n, 0.0);
  const Primitives P = primitive_vars(U);
  FluidState out = explicit_step(U, zero, E, dt);

  const double k = 1.5 * eps * dt / (U.grid.dx() * U.grid.dx());
  std::vector<double> lower(n), diag(n), upper(n), rhs(n);
  for (int i = 0; i < n; ++i) {
    const double p_right = 0.5 * (P.p[i] + P.p[(i + 1) % n]);
    const double p_left = 0.5 * (P.p[i] + P.p[(i + n - 1) % n]);
    const double rho = out.rho[i];
    if (!(rho > 0.0)) throw NumericalError("ns_semi_implicit_step: non-positive density");
    const double u = out.m[i] / rho;
    lower[i] = -k * p_left;
    upper[i] = -k * p_right;
    diag[i] = 0.5 * rho + k * (p_left + p_right);
    rhs[i] = out.w[i] - 0.5 * rho * u * u;
  }
  const std::vector<double> T = solve_periodic_tridiagonal(lower, diag, upper, rhs);
  for (int i = 0; i < n; ++i) {
    const double u = out.m[i] / out.rho[i];
    out.w[i] = 0.5 * out.rho[i] * u * u + 0.5 * out.rho[i] * T[i];
  }
  return out;
}

std::vector<double> solve_periodic_tridiagonal(std::span<const double> lower,
                                               std::span<const double> diag,
                                               std::span<const double> upper,
                                               std::span<const double> rhs) {
  const std::size_t n = diag.size();
  if (n < 3 || lower.size() != n || upper.size() != n || rhs.size() != n)
    throw ConfigError("solve_periodic_tridiagonal: need n >= 3 and equal lengths");
  const double alpha = upper[n - 1];  // A(n-1, 0)
  const double beta = lower[0];       // A(0, n-1)
  const double gamma = -diag[0];
  std::vector<double> bb(diag.begin(), diag.end());
  bb[0] -= gamma;
  bb[n - 1] -= alpha * beta / gamma;
  std::vector<double> x = thomas(lower, bb, upper, rhs);
  std::vector<double> u(n, 0.0);
  u[0] = gamma;
  u[n - 1] = alpha;
  const std::vector<double> z = thomas(lower, bb, upper, u);
  const double fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
  for (std::size_t i = 0; i < n; ++i) x[i] -= fact * z[i];
  for (double v : x)
    if (!std::isfinite(v)) throw NumericalError("solve_periodic_tridiagonal: non-finite solution");
  return x;
}

std::vector<double> record_schedule(double t_end, double record_dt) {
  if (!(t_end > 0.0)) throw ConfigError("run_fluid: t_end must be positive");
  if (!(record_dt > 0.0)) throw ConfigError("run_fluid: record_dt must be positive");
  const auto count = static_cast<long>(std::ceil(t_end / record_dt - 1e-9));
  std::vector<double> times;
  times.reserve(count + 1);
  for (long k = 0; k < count; ++k) times.push_back(k * record_dt);
  times.push_back(t_end);
  return times;
}

std::vector<FluidRecord> run_fluid(const FluidState& init, const Closure& closure, double eps,
                                   double t_end, double record_dt, FluidOptions options) {
  require_consistent(init, "run_fluid");
  if (!closure.fn) throw ConfigError("run_fluid: closure has no function");
  std::vector<double> times = record_schedule(t_end, record_dt);
  for (double& t : times) t += init.time;

  const int n = init.size();
  FluidState U = init;
  std::vector<FluidRecord> records;
  records.reserve(times.size());
  std::size_t next = 0;
  const bool implicit = closure.kind == ClosureKind::NavierStokes;

  while (true) {
    Primitives P;
    try {
      P = primitive_vars(U);
    } catch (const NumericalError& e) {
      throw SimulationAborted(std::string("fluid: ") + e.what(), U.time);
    }
    const ElectricField field = solve_poisson(U.rho, U.grid.dx(), options.poisson_sign);
    std::vector<double> q;
    if (!implicit || U.time == times[next]) {
      try {
        q = closure.fn(ClosureArgs{eps, P.rho, P.u, P.T, U.grid.dx(), U.time});
      } catch (const NumericalError& e) {
        throw SimulationAborted(std::string("closure: ") + e.what(), U.time);
      }
      if (q.size() != static_cast<std::size_t>(n))
        throw ConfigError("run_fluid: closure returned wrong length");
      for (double v : q)
        if (!std::isfinite(v)) throw SimulationAborted("fluid: non-finite heat flux", U.time);
    }
    if (U.time == times[next]) {
      records.push_back({U.time, U, field.E, q});
      if (++next == times.size()) break;
    }
    double dt = fluid_dt(U);
    if (U.time + dt >= times[next]) dt = times[next] - U.time;
    try {
      FluidState stepped = implicit ? ns_semi_implicit_step(U, field.E, eps, dt)
                                    : explicit_step(U, q, field.E, dt);
      stepped.time = (U.time + dt >= times[next]) ? times[next] : U.time + dt;
      U = std::move(stepped);
    } catch (const NumericalError& e) {
      throw SimulationAborted(std::string("fluid: ") + e.what(), U.time);
    }
  }
  return records;
}

}  // namespace fluxnet
