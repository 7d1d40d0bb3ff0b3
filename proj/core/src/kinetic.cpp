#include "fluxnet/kinetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fluxnet/error.hpp"
#include "fluxnet/fft.hpp"

namespace fluxnet {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct RowMoments {
  double rho = 0.0;
  double u = 0.0;
  double T = 0.0;
};

RowMoments row_moments(std::span<const double> f, const PhaseGrid& grid) {
  const double dv = grid.dv();
  double s0 = 0.0, s1 = 0.0;
  for (int j = 0; j < grid.nv; ++j) {
    s0 += f[j];
    s1 += grid.v(j) * f[j];
  }
  RowMoments m;
  m.rho = dv * s0;
  if (!(m.rho > 0.0)) return m;
  m.u = dv * s1 / m.rho;
  double s2 = 0.0;
  for (int j = 0; j < grid.nv; ++j) {
    const double c = grid.v(j) - m.u;
    s2 += c * c * f[j];
  }
  m.T = dv * s2 / m.rho;
  return m;
}

// Fills `out` with the sampled Maxwellian of (rho, u, T), corrected by a
// quadratic polynomial in xi = (v - u) / sqrt(T) so that its discrete moments
// against (1, xi, xi^2) equal those of `f`. Falls back to the plain samples
// when the 3x3 moment system is singular (distribution narrower than dv).
void conservative_row(std::span<const double> f, const RowMoments& m, const PhaseGrid& grid,
                      std::span<double> out) {
  const double dv = grid.dv();
  const double sqrtT = std::sqrt(m.T);
  const double norm = m.rho / std::sqrt(kTwoPi * m.T);
  double g[5] = {0, 0, 0, 0, 0};
  double t[3] = {0, 0, 0};
  for (int j = 0; j < grid.nv; ++j) {
    const double xi = (grid.v(j) - m.u) / sqrtT;
    const double mj = norm * std::exp(-0.5 * xi * xi);
    out[j] = mj;
    double pw = mj;
    for (double& gk : g) {
      gk += pw;
      pw *= xi;
    }
    t[0] += f[j];
    t[1] += f[j] * xi;
    t[2] += f[j] * xi * xi;
  }
  for (double& gk : g) gk *= dv;
  for (double& tk : t) tk *= dv;

  const double a[3][3] = {{g[0], g[1], g[2]}, {g[1], g[2], g[3]}, {g[2], g[3], g[4]}};
  const double r[3] = {t[0] - g[0], t[1] - g[1], t[2] - g[2]};
  const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                     a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                     a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  const double scale = g[0] * g[2] * g[4];
  if (!(std::abs(det) > 1e-12 * std::abs(scale)) || !std::isfinite(det)) return;

  // Cramer's rule on the symmetric 3x3 system.
  auto det_with = [&](int col) {
    double b[3][3];
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) b[i][k] = (k == col) ? r[i] : a[i][k];
    return b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) -
           b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0]) +
           b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
  };
  const double c0 = det_with(0) / det;
  const double c1 = det_with(1) / det;
  const double c2 = det_with(2) / det;
  for (int j = 0; j < grid.nv; ++j) {
    const double xi = (grid.v(j) - m.u) / sqrtT;
    out[j] *= 1.0 + c0 + c1 * xi + c2 * xi * xi;
  }
}

void require_shape(const KineticState& s, const PhaseGrid& g, const char* where) {
  if (s.nx != g.nx || s.nv != g.nv || s.f.size() != static_cast<std::size_t>(g.nx) * g.nv)
    throw ConfigError(std::string(where) + ": state shape does not match grid");
}

}  // namespace

void SpaceGrid::validate() const {
  if (nx < 4) throw ConfigError("SpaceGrid: nx must be >= 4");
  if (!(length > 0.0)) throw ConfigError("SpaceGrid: length must be positive");
}

PhaseGrid PhaseGrid::make(int nx, int nv, double vmax, double length) {
  PhaseGrid g{nx, nv, length, vmax};
  g.validate();
  return g;
}

void PhaseGrid::validate() const {
  if (nx < 4) throw ConfigError("PhaseGrid: nx must be >= 4");
  if (nv < 3 || nv % 2 == 0) throw ConfigError("PhaseGrid: nv must be odd and >= 3");
  if (!(vmax > 0.0)) throw ConfigError("PhaseGrid: vmax must be positive");
  if (!(length > 0.0)) throw ConfigError("PhaseGrid: length must be positive");
}

Moments compute_moments(const KineticState& state, const PhaseGrid& grid) {
  require_shape(state, grid, "compute_moments");
  const double dv = grid.dv();
  Moments m;
  for (auto* v : {&m.rho, &m.u, &m.T, &m.p, &m.w, &m.q}) v->resize(grid.nx);
  for (int i = 0; i < grid.nx; ++i) {
    const auto f = state.row(i);
    const RowMoments rm = row_moments(f, grid);
    if (!(rm.rho > 0.0))
      throw NumericalError("compute_moments: non-positive density at cell " + std::to_string(i));
    double s3 = 0.0;
    for (int j = 0; j < grid.nv; ++j) {
      const double c = grid.v(j) - rm.u;
      s3 += c * c * c * f[j];
    }
    m.rho[i] = rm.rho;
    m.u[i] = rm.u;
    m.T[i] = rm.T;
    m.p[i] = rm.rho * rm.T;
    m.w[i] = 0.5 * rm.rho * rm.u * rm.u + 0.5 * m.p[i];
    m.q[i] = 0.5 * dv * s3;
  }
  return m;
}

KineticState maxwellian(std::span<const double> rho, std::span<const double> u,
                        std::span<const double> T, const PhaseGrid& grid) {
  grid.validate();
  const auto n = static_cast<std::size_t>(grid.nx);
  if (rho.size() != n || u.size() != n || T.size() != n)
    throw ConfigError("maxwellian: moment vectors must have length nx");
  KineticState s(grid.nx, grid.nv);
  for (int i = 0; i < grid.nx; ++i) {
    if (!(rho[i] > 0.0) || !(T[i] > 0.0))
      throw NumericalError("maxwellian: rho and T must be positive");
    const double norm = rho[i] / std::sqrt(kTwoPi * T[i]);
    for (int j = 0; j < grid.nv; ++j) {
      const double c = grid.v(j) - u[i];
      s(i, j) = norm * std::exp(-c * c / (2.0 * T[i]));
    }
  }
  return s;
}

ElectricField solve_poisson(std::span<const double> rho, double dx, PoissonSign sign) {
  const int n = static_cast<int>(rho.size());
  if (n < 4) throw ConfigError("solve_poisson: need at least 4 cells");
  double mean = 0.0;
  for (double r : rho) mean += r;
  mean /= n;
  std::vector<double> source(rho.begin(), rho.end());
  for (double& s : source) s -= mean;

  RealFft fft(n);
  auto spec = fft.forward(source);
  spec[0] = 0.0;
  const double orientation = (sign == PoissonSign::Restoring) ? 1.0 : -1.0;
  for (int k = 1; k < fft.spectrum_size(); ++k) {
    // Eigenvalue of the periodic three-point Laplacian for mode k.
    const double lambda = -(2.0 - 2.0 * std::cos(kTwoPi * k / n)) / (dx * dx);
    spec[k] *= orientation / lambda;
  }
  ElectricField field;
  field.phi = fft.backward(spec);
  for (double& p : field.phi) p /= n;
  double phi_mean = 0.0;
  for (double p : field.phi) phi_mean += p;
  phi_mean /= n;
  for (double& p : field.phi) p -= phi_mean;

  field.E.resize(n);
  for (int i = 0; i < n; ++i) {
    const int ip = (i + 1) % n;
    const int im = (i + n - 1) % n;
    field.E[i] = -(field.phi[ip] - field.phi[im]) / (2.0 * dx);
  }
  return field;
}

void transport_step_inplace(KineticState& state, std::span<const double> E, double dt,
                            const PhaseGrid& grid, std::vector<double>& scratch) {
  require_shape(state, grid, "transport_step");
  if (E.size() != static_cast<std::size_t>(grid.nx))
    throw ConfigError("transport_step: field length must be nx");
  if (dt == 0.0) return;
  const int nx = grid.nx;
  const int nv = grid.nv;
  const double cx = dt / grid.dx();
  const double inv_dv = 1.0 / grid.dv();
  scratch.assign(state.f.begin(), state.f.end());
  const double* old = scratch.data();

  std::vector<double> v(nv);
  for (int j = 0; j < nv; ++j) v[j] = grid.v(j);

  for (int i = 0; i < nx; ++i) {
    const double* fm = old + static_cast<std::size_t>((i + nx - 1) % nx) * nv;
    const double* f0 = old + static_cast<std::size_t>(i) * nv;
    const double* fp = old + static_cast<std::size_t>((i + 1) % nx) * nv;
    double* out = state.f.data() + static_cast<std::size_t>(i) * nv;
    const double e = E[i];
    for (int j = 0; j < nv; ++j) {
      // Upwind interface fluxes; identical to 1/2 v (f+ + f-) - 1/2 |v| (f+ - f-).
      const double right = v[j] >= 0.0 ? v[j] * f0[j] : v[j] * fp[j];
      const double left = v[j] >= 0.0 ? v[j] * fm[j] : v[j] * f0[j];
      out[j] = f0[j] - cx * (right - left);
    }
    // E * B(f): centered differences inside; at the cutoffs a one-sided
    // difference plus an inflow penalty (2/dv) E^- f. In the trapezoidal norm
    // the semi-discrete energy then satisfies
    //   d/dt (1/2 f^T H f) = -|E|/2 (f_0^2 + f_{nv-1}^2) <= 0.
    for (int j = 1; j < nv - 1; ++j) {
      const double eb = -e * (f0[j + 1] - f0[j - 1]) * 0.5 * inv_dv;
      out[j] -= dt * eb;
    }
    const double eb_lo = -e * (f0[1] - f0[0]) * inv_dv + 2.0 * inv_dv * std::max(-e, 0.0) * f0[0];
    const double eb_hi =
        -e * (f0[nv - 1] - f0[nv - 2]) * inv_dv + 2.0 * inv_dv * std::max(e, 0.0) * f0[nv - 1];
    out[0] -= dt * eb_lo;
    out[nv - 1] -= dt * eb_hi;
  }
}

KineticState transport_step(const KineticState& state, std::span<const double> E, double dt,
                            const PhaseGrid& grid) {
  KineticState out = state;
  std::vector<double> scratch;
  transport_step_inplace(out, E, dt, grid, scratch);
  return out;
}

void bgk_relax_inplace(KineticState& state, double dt, double eps, const PhaseGrid& grid) {
  require_shape(state, grid, "bgk_relax");
  if (!(eps > 0.0)) throw ConfigError("bgk_relax: eps must be positive");
  const double omega = dt / (dt + eps);
  std::vector<double> m(grid.nv);
  for (int i = 0; i < grid.nx; ++i) {
    auto f = state.row(i);
    const RowMoments rm = row_moments(f, grid);
    if (!(rm.rho > 0.0) || !(rm.T > 0.0) || !std::isfinite(rm.u))
      throw NumericalError("bgk_relax: unusable moments at cell " + std::to_string(i));
    conservative_row(f, rm, grid, m);
    for (int j = 0; j < grid.nv; ++j) f[j] += omega * (m[j] - f[j]);
  }
}

KineticState bgk_relax(const KineticState& state, double dt, double eps, const PhaseGrid& grid) {
  KineticState out = state;
  bgk_relax_inplace(out, dt, eps, grid);
  return out;
}

KineticState conservative_maxwellian(const KineticState& state, const PhaseGrid& grid) {
  require_shape(state, grid, "conservative_maxwellian");
  KineticState out(grid.nx, grid.nv, state.time);
  for (int i = 0; i < grid.nx; ++i) {
    const RowMoments rm = row_moments(state.row(i), grid);
    if (!(rm.rho > 0.0) || !(rm.T > 0.0))
      throw NumericalError("conservative_maxwellian: unusable moments");
    conservative_row(state.row(i), rm, grid, out.row(i));
  }
  return out;
}

double stable_dt(std::span<const double> E, const PhaseGrid& grid, double safety) {
  if (!(safety > 0.0 && safety <= 1.0)) throw ConfigError("stable_dt: safety must be in (0, 1]");
  double emax = 0.0;
  for (double e : E) emax = std::max(emax, std::abs(e));
  const double transport = grid.dx() / grid.vmax;
  const double force = emax > 0.0 ? grid.dv() / emax : std::numeric_limits<double>::infinity();
  return safety * std::min(transport, force);
}

double total_mass(const KineticState& state, const PhaseGrid& grid) {
  double s = 0.0;
  for (double v : state.f) s += v;
  return s * grid.dx() * grid.dv();
}

KineticSimulation::KineticSimulation(KineticState init, double eps, const PhaseGrid& grid,
                                     KineticOptions options)
    : state_(std::move(init)), eps_(eps), grid_(grid), options_(options) {
  grid_.validate();
  require_shape(state_, grid_, "KineticSimulation");
  if (!(eps_ > 0.0)) throw ConfigError("KineticSimulation: eps must be positive");
}

namespace {

std::vector<double> densities(const KineticState& s, const PhaseGrid& g) {
  std::vector<double> rho(g.nx);
  const double dv = g.dv();
  for (int i = 0; i < g.nx; ++i) {
    double acc = 0.0;
    for (double v : s.row(i)) acc += v;
    rho[i] = dv * acc;
  }
  return rho;
}

}  // namespace

void KineticSimulation::step(double dt) {
  const auto rho = densities(state_, grid_);
  for (double r : rho)
    if (!std::isfinite(r)) throw SimulationAborted("kinetic: non-finite distribution", state_.time);
  const auto field = solve_poisson(rho, grid_.dx(), options_.poisson_sign);
  transport_step_inplace(state_, field.E, dt, grid_, scratch_);
  try {
    bgk_relax_inplace(state_, dt, eps_, grid_);
  } catch (const NumericalError& e) {
    throw SimulationAborted(std::string("kinetic: ") + e.what(), state_.time);
  }
  state_.time += dt;
  ++steps_;
}

void KineticSimulation::advance_to(double t) {
  while (state_.time < t) {
    const auto rho = densities(state_, grid_);
    for (double r : rho)
      if (!std::isfinite(r))
        throw SimulationAborted("kinetic: non-finite distribution", state_.time);
    const auto field = solve_poisson(rho, grid_.dx(), options_.poisson_sign);
    double dt = stable_dt(field.E, grid_, options_.safety);
    const bool last = state_.time + dt >= t;
    if (last) dt = t - state_.time;
    transport_step_inplace(state_, field.E, dt, grid_, scratch_);
    try {
      bgk_relax_inplace(state_, dt, eps_, grid_);
    } catch (const NumericalError& e) {
      throw SimulationAborted(std::string("kinetic: ") + e.what(), state_.time);
    }
    state_.time = last ? t : state_.time + dt;
    ++steps_;
  }
}

KineticSnapshot KineticSimulation::snapshot() const {
  KineticSnapshot snap;
  snap.time = state_.time;
  snap.state = state_;
  try {
    snap.moments = compute_moments(state_, grid_);
  } catch (const NumericalError& e) {
    throw SimulationAborted(std::string("kinetic: ") + e.what(), state_.time);
  }
  snap.field = solve_poisson(snap.moments.rho, grid_.dx(), options_.poisson_sign);
  return snap;
}

std::vector<KineticSnapshot> run_kinetic(const KineticState& init, double eps,
                                         std::span<const double> record_times,
                                         const PhaseGrid& grid, KineticOptions options) {
  for (std::size_t k = 0; k < record_times.size(); ++k) {
    if (record_times[k] < init.time || (k > 0 && record_times[k] < record_times[k - 1]))
      throw ConfigError("run_kinetic: record times must be ascending and >= initial time");
  }
  KineticSimulation sim(init, eps, grid, options);
  std::vector<KineticSnapshot> out;
  out.reserve(record_times.size());
  for (double t : record_times) {
    sim.advance_to(t);
    out.push_back(sim.snapshot());
  }
  return out;
}

}  // namespace fluxnet
