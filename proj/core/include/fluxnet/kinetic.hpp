#pragma once

#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace fluxnet {

/// Sign convention of the electrostatic Poisson equation.
///
/// `Restoring`: d2phi/dx2 = rho - mean(rho), E = -dphi/dx. With the Vlasov
/// force term -E df/dv this gives plasma oscillations around the uniform state.
/// `Flipped`: -d2phi/dx2 = rho - mean(rho); kept for sensitivity checks only.
enum class PoissonSign { Restoring, Flipped };

/// Uniform periodic space grid x_i = i * dx on [0, length).
struct SpaceGrid {
  int nx = 0;
  double length = 2.0 * std::numbers::pi;

  double dx() const noexcept { return length / nx; }
  double x(int i) const noexcept { return i * dx(); }
  void validate() const;
};

/// Phase-space grid: periodic in x, v_j = -vmax + j dv on [-vmax, vmax].
struct PhaseGrid {
  int nx = 0;
  int nv = 0;
  double length = 2.0 * std::numbers::pi;
  double vmax = 7.0;

  static PhaseGrid make(int nx, int nv, double vmax, double length = 2.0 * std::numbers::pi);

  double dx() const noexcept { return length / nx; }
  double dv() const noexcept { return 2.0 * vmax / (nv - 1); }
  double x(int i) const noexcept { return i * dx(); }
  double v(int j) const noexcept { return -vmax + j * dv(); }
  SpaceGrid space() const noexcept { return {nx, length}; }
  void validate() const;
};

/// Distribution values f(x_i, v_j), stored row-major (one row per x_i).
struct KineticState {
  int nx = 0;
  int nv = 0;
  std::vector<double> f;
  double time = 0.0;

  KineticState() = default;
  KineticState(int nx_, int nv_, double t = 0.0)
      : nx(nx_), nv(nv_), f(static_cast<std::size_t>(nx_) * nv_, 0.0), time(t) {}

  double& operator()(int i, int j) noexcept { return f[static_cast<std::size_t>(i) * nv + j]; }
  double operator()(int i, int j) const noexcept { return f[static_cast<std::size_t>(i) * nv + j]; }
  std::span<const double> row(int i) const noexcept {
    return {f.data() + static_cast<std::size_t>(i) * nv, static_cast<std::size_t>(nv)};
  }
  std::span<double> row(int i) noexcept {
    return {f.data() + static_cast<std::size_t>(i) * nv, static_cast<std::size_t>(nv)};
  }
};

/// Velocity moments of a distribution on the space grid.
struct Moments {
  std::vector<double> rho, u, T, p, w, q;
};

struct ElectricField {
  std::vector<double> E;
  std::vector<double> phi;
};

/// Discrete moments with the dv quadrature weight. Throws NumericalError if a
/// density is not strictly positive.
Moments compute_moments(const KineticState& state, const PhaseGrid& grid);

/// f_ij = rho_i / sqrt(2 pi T_i) exp(-(v_j - u_i)^2 / (2 T_i)).
KineticState maxwellian(std::span<const double> rho, std::span<const double> u,
                        std::span<const double> T, const PhaseGrid& grid);

/// Periodic second-order finite differences with zero-mean gauge.
ElectricField solve_poisson(std::span<const double> rho, double dx,
                            PoissonSign sign = PoissonSign::Restoring);

/// One explicit step of v df/dx - E df/dv = 0 (upwind in x, centered in v with
/// dissipative closure rows at the velocity cutoffs).
KineticState transport_step(const KineticState& state, std::span<const double> E, double dt,
                            const PhaseGrid& grid);
void transport_step_inplace(KineticState& state, std::span<const double> E, double dt,
                            const PhaseGrid& grid, std::vector<double>& scratch);

/// Implicit BGK relaxation f + w (M(f) - f), w = dt / (dt + eps).
KineticState bgk_relax(const KineticState& state, double dt, double eps, const PhaseGrid& grid);
void bgk_relax_inplace(KineticState& state, double dt, double eps, const PhaseGrid& grid);

/// Maxwellian of f projected so that its discrete (rho, rho u, w) match f's exactly.
KineticState conservative_maxwellian(const KineticState& state, const PhaseGrid& grid);

/// safety * min(dx / vmax, dv / max|E|).
double stable_dt(std::span<const double> E, const PhaseGrid& grid, double safety = 0.9);

struct KineticOptions {
  double safety = 0.9;
  PoissonSign poisson_sign = PoissonSign::Restoring;
};

struct KineticSnapshot {
  double time = 0.0;
  KineticState state;
  Moments moments;
  ElectricField field;
};

/// Time integrator for the Vlasov-Poisson-BGK system. Each step runs
/// Poisson -> transport -> BGK relaxation with the CFL step clipped so that
/// requested times are hit exactly.
class KineticSimulation {
 public:
  KineticSimulation(KineticState init, double eps, const PhaseGrid& grid,
                    KineticOptions options = {});

  double time() const noexcept { return state_.time; }
  const KineticState& state() const noexcept { return state_; }
  const PhaseGrid& grid() const noexcept { return grid_; }
  double eps() const noexcept { return eps_; }
  const KineticOptions& options() const noexcept { return options_; }
  std::size_t steps_taken() const noexcept { return steps_; }

  /// Advance to exactly `t` (no-op if t <= time()). Throws SimulationAborted on
  /// non-finite values or a failed moment computation.
  void advance_to(double t);

  /// Single step with the given dt (dt is not checked against the CFL bound).
  void step(double dt);

  KineticSnapshot snapshot() const;

 private:
  KineticState state_;
  double eps_;
  PhaseGrid grid_;
  KineticOptions options_;
  std::vector<double> scratch_;
  std::size_t steps_ = 0;
};

/// Snapshots at each of the ascending `record_times`.
std::vector<KineticSnapshot> run_kinetic(const KineticState& init, double eps,
                                         std::span<const double> record_times,
                                         const PhaseGrid& grid, KineticOptions options = {});

/// dx * dv * sum f.
double total_mass(const KineticState& state, const PhaseGrid& grid);

}  // namespace fluxnet
