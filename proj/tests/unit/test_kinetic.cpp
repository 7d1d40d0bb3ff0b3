#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "fluxnet/error.hpp"
#include "fluxnet/kinetic.hpp"

using namespace fluxnet;

namespace {

constexpr double kPi = std::numbers::pi;

// Trapezoid quadrature of the continuous Maxwellian moments on [-vmax, vmax]
// with a much finer grid than the solver's.
struct QuadMoments {
  double rho, u, T, q;
};

QuadMoments quadrature_moments(double rho, double u, double T, double vmax) {
  const int n = 200001;
  const double h = 2.0 * vmax / (n - 1);
  auto f = [&](double v) { return rho / std::sqrt(2 * kPi * T) * std::exp(-(v - u) * (v - u) / (2 * T)); };
  double m0 = 0, m1 = 0;
  for (int k = 0; k < n; ++k) {
    const double v = -vmax + k * h;
    const double w = (k == 0 || k == n - 1) ? 0.5 * h : h;
    m0 += w * f(v);
    m1 += w * v * f(v);
  }
  const double um = m1 / m0;
  double m2 = 0, m3 = 0;
  for (int k = 0; k < n; ++k) {
    const double v = -vmax + k * h;
    const double w = (k == 0 || k == n - 1) ? 0.5 * h : h;
    m2 += w * (v - um) * (v - um) * f(v);
    m3 += w * std::pow(v - um, 3) * f(v);
  }
  return {m0, um, m2 / m0, 0.5 * m3};
}

KineticState uniform_maxwellian(const PhaseGrid& g, double rho, double u, double T) {
  std::vector<double> r(g.nx, rho), uu(g.nx, u), t(g.nx, T);
  return maxwellian(r, uu, t, g);
}

// Direct moment sums, written out independently of compute_moments.
struct CellSums {
  double mass, momentum, energy;
};

CellSums cell_sums(const KineticState& s, const PhaseGrid& g, int i) {
  CellSums c{0, 0, 0};
  for (int j = 0; j < g.nv; ++j) {
    const double v = -g.vmax + j * (2 * g.vmax / (g.nv - 1));
    c.mass += s(i, j);
    c.momentum += v * s(i, j);
    c.energy += 0.5 * v * v * s(i, j);
  }
  const double dv = 2 * g.vmax / (g.nv - 1);
  return {c.mass * dv, c.momentum * dv, c.energy * dv};
}

KineticState perturbed_state(const PhaseGrid& g, double amp = 0.2) {
  std::vector<double> r(g.nx), u(g.nx), t(g.nx);
  for (int i = 0; i < g.nx; ++i) {
    const double x = g.x(i);
    r[i] = 1 + amp * std::cos(x);
    u[i] = 0.1 * std::sin(2 * x);
    t[i] = 1 + 0.3 * std::sin(x);
  }
  return maxwellian(r, u, t, g);
}

}  // namespace

TEST(PhaseGridTest, SpacingRelations) {
  const auto g = PhaseGrid::make(64, 141, 7.0);
  EXPECT_DOUBLE_EQ(g.dx(), 2 * kPi / 64);
  EXPECT_DOUBLE_EQ(g.dv(), 0.1);
  EXPECT_NEAR(g.v(70), 0.0, 1e-15);
  EXPECT_THROW(PhaseGrid::make(64, 140, 7.0), ConfigError);
  EXPECT_THROW(PhaseGrid::make(3, 141, 7.0), ConfigError);
  EXPECT_THROW(PhaseGrid::make(64, 141, 0.0), ConfigError);
}

TEST(ComputeMomentsTest, StandardMaxwellianMatchesQuadrature) {
  const auto g = PhaseGrid::make(8, 141, 7.0);
  const auto m = compute_moments(uniform_maxwellian(g, 1, 0, 1), g);
  const auto ref = quadrature_moments(1, 0, 1, 7.0);
  for (int i = 0; i < g.nx; ++i) {
    EXPECT_NEAR(m.rho[i], 1.0, 1e-6);
    EXPECT_NEAR(m.u[i], 0.0, 1e-6);
    EXPECT_NEAR(m.T[i], 1.0, 1e-6);
    EXPECT_NEAR(m.q[i], 0.0, 1e-6);
    EXPECT_NEAR(m.rho[i], ref.rho, 1e-6);
    EXPECT_NEAR(m.T[i], ref.T, 1e-6);
  }
}

TEST(ComputeMomentsTest, ShiftedMaxwellianMatchesQuadrature) {
  const auto g = PhaseGrid::make(4, 141, 7.0);
  const auto m = compute_moments(uniform_maxwellian(g, 2, 0.5, 0.3), g);
  const auto ref = quadrature_moments(2, 0.5, 0.3, 7.0);
  EXPECT_NEAR(m.rho[0], 2.0, 1e-5);
  EXPECT_NEAR(m.u[0], 0.5, 1e-5);
  EXPECT_NEAR(m.T[0], 0.3, 1e-5);
  EXPECT_NEAR(m.q[0], 0.0, 1e-5);
  EXPECT_NEAR(m.rho[0], ref.rho, 1e-5);
  EXPECT_NEAR(m.q[0], ref.q, 1e-5);
}

TEST(ComputeMomentsTest, DerivedRelationsHold) {
  const auto g = PhaseGrid::make(32, 101, 7.0);
  const auto m = compute_moments(perturbed_state(g), g);
  for (int i = 0; i < g.nx; ++i) {
    EXPECT_NEAR(m.p[i], m.rho[i] * m.T[i], 1e-13);
    EXPECT_NEAR(m.w[i], 0.5 * m.rho[i] * m.u[i] * m.u[i] + 0.5 * m.p[i], 1e-13);
  }
}

TEST(ComputeMomentsTest, ZeroDistributionIsRejected) {
  const auto g = PhaseGrid::make(4, 11, 7.0);
  EXPECT_THROW(compute_moments(KineticState(4, 11), g), NumericalError);
}

TEST(MaxwellianTest, PointValuesSymmetryAndLinearity) {
  const auto g = PhaseGrid::make(4, 141, 7.0);
  const auto f = uniform_maxwellian(g, 1, 0, 1);
  EXPECT_NEAR(f(0, 70), 1 / std::sqrt(2 * kPi), 1e-15);
  EXPECT_NEAR(f(0, 70), 0.398942, 1e-6);
  EXPECT_NEAR(f(0, 60), f(0, 80), 1e-15);  // v = -1 and v = +1
  const auto f3 = uniform_maxwellian(g, 3, 0.2, 0.7);
  const auto f1 = uniform_maxwellian(g, 1, 0.2, 0.7);
  for (int j = 0; j < g.nv; ++j) EXPECT_NEAR(f3(1, j), 3 * f1(1, j), 1e-15);
}

TEST(MaxwellianTest, RejectsNonPositiveInputs) {
  const auto g = PhaseGrid::make(4, 11, 7.0);
  std::vector<double> one(4, 1.0), zero(4, 0.0);
  EXPECT_THROW(maxwellian(zero, one, one, g), Error);
  EXPECT_THROW(maxwellian(one, one, zero, g), Error);
}

TEST(PoissonTest, ConstantDensityGivesZeroField) {
  std::vector<double> rho(32, 1.7);
  const auto f = solve_poisson(rho, 2 * kPi / 32);
  for (int i = 0; i < 32; ++i) {
    EXPECT_NEAR(f.E[i], 0.0, 1e-14);
    EXPECT_NEAR(f.phi[i], 0.0, 1e-14);
  }
}

TEST(PoissonTest, CosinePerturbationMatchesAnalyticSolution) {
  // -phi'' = 0.1 cos x gives phi = 0.1 cos x and E = -phi' = 0.1 sin x.
  const int n = 256;
  const double dx = 2 * kPi / n;
  std::vector<double> rho(n);
  for (int i = 0; i < n; ++i) rho[i] = 1 + 0.1 * std::cos(i * dx);
  const auto flipped = solve_poisson(rho, dx, PoissonSign::Flipped);
  const auto restoring = solve_poisson(rho, dx, PoissonSign::Restoring);
  for (int i = 0; i < n; ++i) {
    EXPECT_NEAR(flipped.phi[i], 0.1 * std::cos(i * dx), 2 * dx * dx);
    EXPECT_NEAR(flipped.E[i], 0.1 * std::sin(i * dx), 2 * dx * dx);
    EXPECT_NEAR(restoring.E[i], -flipped.E[i], 1e-15);
  }
}

TEST(PoissonTest, DiscreteResidualGaugeAndLinearity) {
  const int n = 64;
  const double dx = 2 * kPi / n;
  std::vector<double> rho(n), rho2(n);
  double mean = 0;
  for (int i = 0; i < n; ++i) {
    rho[i] = 1 + 0.3 * std::sin(3 * i * dx) + 0.1 * std::cos(7 * i * dx) * std::sin(i * dx);
    mean += rho[i] / n;
  }
  for (int i = 0; i < n; ++i) rho2[i] = mean + 2 * (rho[i] - mean);
  const auto f = solve_poisson(rho, dx, PoissonSign::Restoring);
  double sum_phi = 0;
  for (int i = 0; i < n; ++i) {
    const double lap = (f.phi[(i + 1) % n] - 2 * f.phi[i] + f.phi[(i + n - 1) % n]) / (dx * dx);
    EXPECT_NEAR(lap, rho[i] - mean, 1e-10);
    EXPECT_NEAR(f.E[i], -(f.phi[(i + 1) % n] - f.phi[(i + n - 1) % n]) / (2 * dx), 1e-12);
    sum_phi += f.phi[i];
  }
  EXPECT_NEAR(sum_phi, 0.0, 1e-10);
  const auto f2 = solve_poisson(rho2, dx, PoissonSign::Restoring);
  for (int i = 0; i < n; ++i) EXPECT_NEAR(f2.E[i], 2 * f.E[i], 1e-13);
}

TEST(TransportTest, ZeroFieldAndUniformStateIsStationary) {
  const auto g = PhaseGrid::make(16, 21, 5.0);
  const auto f = uniform_maxwellian(g, 1.3, 0.2, 0.8);
  std::vector<double> E(g.nx, 0.0);
  const auto out = transport_step(f, E, stable_dt(E, g), g);
  for (std::size_t k = 0; k < f.f.size(); ++k) EXPECT_NEAR(out.f[k], f.f[k], 1e-15);
}

TEST(TransportTest, ZeroStepIsIdentity) {
  const auto g = PhaseGrid::make(16, 21, 5.0);
  const auto f = perturbed_state(g);
  std::vector<double> E(g.nx, 0.3);
  const auto out = transport_step(f, E, 0.0, g);
  EXPECT_EQ(out.f, f.f);
}

TEST(TransportTest, BumpAdvectsRightAndConservesMass) {
  const auto g = PhaseGrid::make(64, 11, 5.0);
  KineticState f(g.nx, g.nv);
  const int j = 8;  // v = 3
  ASSERT_GT(g.v(j), 0.0);
  for (int i = 20; i < 24; ++i) f(i, j) = 1.0;
  std::vector<double> E(g.nx, 0.0);
  const double dt = stable_dt(E, g);
  auto centroid = [&](const KineticState& s) {
    double m = 0, mx = 0;
    for (int i = 0; i < g.nx; ++i) {
      m += s(i, j);
      mx += s(i, j) * g.x(i);
    }
    return mx / m;
  };
  const double m0 = total_mass(f, g);
  const double c0 = centroid(f);
  KineticState s = f;
  for (int n = 0; n < 10; ++n) s = transport_step(s, E, dt, g);
  EXPECT_NEAR(total_mass(s, g), m0, 1e-12 * m0);
  EXPECT_NEAR(centroid(s) - c0, 10 * dt * g.v(j), 1e-10);
}

TEST(TransportTest, FirstOrderConvergenceForSmoothAdvection) {
  auto l1_error = [](int nx) {
    const auto g = PhaseGrid::make(nx, 5, 1.0);
    KineticState f(g.nx, g.nv);
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.nv; ++j) f(i, j) = 1 + 0.5 * std::sin(g.x(i));
    std::vector<double> E(g.nx, 0.0);
    const double t_end = 1.0;
    const int steps = nx / 2;
    const double dt = t_end / steps;
    for (int n = 0; n < steps; ++n) f = transport_step(f, E, dt, g);
    double err = 0;
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.nv; ++j)
        err += std::abs(f(i, j) - (1 + 0.5 * std::sin(g.x(i) - g.v(j) * t_end))) * g.dx();
    return err;
  };
  const double e1 = l1_error(128), e2 = l1_error(256);
  EXPECT_NEAR(e1 / e2, 2.0, 0.4);
}

// The step is forward Euler, so (step(f, dt) - f) / dt is the semi-discrete
// operator L f exactly; the closure must make <f, L f>_H non-positive in the
// trapezoidal velocity norm.
double energy_rate(const KineticState& f, std::span<const double> E, const PhaseGrid& g) {
  const double dt = 1e-3;
  const auto next = transport_step(f, E, dt, g);
  double rate = 0;
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.nv; ++j) {
      const double h = (j == 0 || j == g.nv - 1) ? 0.5 : 1.0;
      rate += h * f(i, j) * (next(i, j) - f(i, j)) / dt;
    }
  return rate;
}

TEST(TransportTest, VelocityClosureEnergyIdentity) {
  // f constant in x isolates the velocity part: rate = -|E|/2 (f_0^2 + f_N^2) per cell.
  const auto g = PhaseGrid::make(4, 21, 3.0);
  KineticState f(g.nx, g.nv);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.nv; ++j) f(i, j) = 1.0 + 0.5 * std::sin(1.3 * j) + 0.1 * j;
  for (double e : {-1.7, 0.0, 0.4, 2.5}) {
    std::vector<double> E(g.nx, e);
    const double f0 = f(0, 0), fn = f(0, g.nv - 1);
    const double expected = g.nx * (-std::abs(e) / (2 * g.dv()) * (f0 * f0 + fn * fn));
    EXPECT_NEAR(energy_rate(f, E, g), expected, 1e-9 * (1 + std::abs(expected)));
  }
}

TEST(TransportTest, SemiDiscreteOperatorIsDissipative) {
  const auto g = PhaseGrid::make(16, 41, 4.0);
  for (int trial = 0; trial < 20; ++trial) {
    KineticState f(g.nx, g.nv);
    std::vector<double> E(g.nx);
    for (int i = 0; i < g.nx; ++i) {
      E[i] = 3.0 * std::sin(1.7 * i + trial);
      for (int j = 0; j < g.nv; ++j) f(i, j) = std::cos(0.37 * i * j + trial) + 0.5;
    }
    EXPECT_LE(energy_rate(f, E, g), 1e-9);
  }
}

TEST(TransportTest, MassChangeIsTheVelocityCutoffOutflow) {
  // Discrete mass changes only through the velocity-cutoff rows:
  // sum_j D_j = (3 f_N - f_{N-1} + f_1 - 3 f_0) / 2 for the difference part
  // plus the inflow penalties.
  const auto g = PhaseGrid::make(8, 21, 3.0);
  KineticState f(g.nx, g.nv);
  std::vector<double> E(g.nx);
  for (int i = 0; i < g.nx; ++i) {
    E[i] = 1.5 * std::cos(g.x(i)) - 0.3;
    for (int j = 0; j < g.nv; ++j) f(i, j) = 1.0 + 0.3 * std::sin(g.x(i) + 0.2 * j);
  }
  const double dt = 0.5 * stable_dt(E, g);
  const auto out = transport_step(f, E, dt, g);
  const int N = g.nv - 1;
  double expected = 0;
  for (int i = 0; i < g.nx; ++i) {
    const double e = E[i];
    const double diff = (3 * f(i, N) - f(i, N - 1) + f(i, 1) - 3 * f(i, 0)) / 2 / g.dv();
    const double penalty = 2 / g.dv() * (std::max(-e, 0.0) * f(i, 0) + std::max(e, 0.0) * f(i, N));
    expected -= dt * (-e * diff + penalty);
  }
  expected *= g.dx() * g.dv();
  EXPECT_NEAR(total_mass(out, g) - total_mass(f, g), expected, 1e-12);
}

TEST(BgkTest, HalfRelaxationFormula) {
  const auto g = PhaseGrid::make(8, 41, 6.0);
  const auto f = perturbed_state(g, 0.4);
  KineticState g2 = f;
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.nv; ++j) g2(i, j) *= 1 + 0.2 * std::sin(j);
  const auto out = bgk_relax(g2, 0.01, 0.01, g);
  const auto M = conservative_maxwellian(g2, g);
  for (std::size_t k = 0; k < g2.f.size(); ++k) EXPECT_NEAR(out.f[k], 0.5 * (g2.f[k] + M.f[k]), 1e-15);
}

TEST(BgkTest, PreservesMassMomentumEnergy) {
  const auto g = PhaseGrid::make(16, 41, 6.0);
  KineticState f = perturbed_state(g, 0.5);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.nv; ++j) f(i, j) *= 1 + 0.4 * std::sin(0.7 * j + i);
  const auto out = bgk_relax(f, 0.05, 0.02, g);
  for (int i = 0; i < g.nx; ++i) {
    const auto a = cell_sums(f, g, i), b = cell_sums(out, g, i);
    EXPECT_NEAR(b.mass, a.mass, 1e-12 * std::abs(a.mass));
    EXPECT_NEAR(b.momentum, a.momentum, 1e-12 * (std::abs(a.momentum) + a.mass));
    EXPECT_NEAR(b.energy, a.energy, 1e-12 * std::abs(a.energy));
  }
}

TEST(BgkTest, MaxwellianOfMomentsIsAFixedPoint) {
  const auto g = PhaseGrid::make(8, 141, 7.0);
  const auto m = compute_moments(perturbed_state(g, 0.3), g);
  const auto f = maxwellian(m.rho, m.u, m.T, g);
  const auto out = bgk_relax(f, 0.1, 0.05, g);
  for (std::size_t k = 0; k < f.f.size(); ++k) EXPECT_NEAR(out.f[k], f.f[k], 1e-10);
}

TEST(StableDtTest, FormulaAndMonotonicity) {
  PhaseGrid g{100, 141, 1.0, 7.0};  // dx = 0.01
  std::vector<double> zero(100, 0.0);
  EXPECT_NEAR(stable_dt(zero, g, 1.0), 1.0 / 700, 1e-16);
  EXPECT_NEAR(stable_dt(zero, g, 0.5), 0.5 / 700, 1e-16);
  std::vector<double> huge(100, 1e6);
  EXPECT_NEAR(stable_dt(huge, g, 1.0), g.dv() / 1e6, 1e-20);
  std::vector<double> mid(100, 5.0);
  EXPECT_LE(stable_dt(huge, g), stable_dt(mid, g));
  PhaseGrid wider{100, 141, 1.0, 9.0};
  EXPECT_LE(stable_dt(zero, wider), stable_dt(zero, g));
}

TEST(RunKineticTest, UniformMaxwellianIsStationary) {
  const auto g = PhaseGrid::make(32, 61, 7.0);
  const auto f0 = uniform_maxwellian(g, 1.0, 0.3, 0.9);
  const std::vector<double> times{0.0, 0.5, 1.0};
  const auto snaps = run_kinetic(f0, 0.1, times, g);
  ASSERT_EQ(snaps.size(), 3u);
  const auto m0 = compute_moments(f0, g);
  for (const auto& s : snaps) {
    for (int i = 0; i < g.nx; ++i) {
      EXPECT_NEAR(s.field.E[i], 0.0, 1e-12);
      EXPECT_NEAR(s.moments.rho[i], m0.rho[i], 1e-10);
      EXPECT_NEAR(s.moments.u[i], m0.u[i], 1e-10);
      EXPECT_NEAR(s.moments.T[i], m0.T[i], 1e-10);
    }
  }
  EXPECT_DOUBLE_EQ(snaps[1].time, 0.5);
}

TEST(RunKineticTest, RecordAtZeroReturnsInitialState) {
  const auto g = PhaseGrid::make(16, 21, 6.0);
  const auto f0 = perturbed_state(g);
  const std::vector<double> times{0.0};
  const auto snaps = run_kinetic(f0, 1.0, times, g);
  ASSERT_EQ(snaps.size(), 1u);
  EXPECT_EQ(snaps[0].state.f, f0.f);
}

TEST(RunKineticTest, RejectsUnsortedRecordTimes) {
  const auto g = PhaseGrid::make(16, 21, 6.0);
  const std::vector<double> times{0.5, 0.1};
  EXPECT_THROW(run_kinetic(perturbed_state(g), 1.0, times, g), ConfigError);
}

TEST(RunKineticTest, ElectricEnergyDecaysForPerturbedMaxwellian) {
  const auto g = PhaseGrid::make(64, 101, 7.0);
  std::vector<double> r(g.nx), u(g.nx, 0.0), t(g.nx, 1.0);
  for (int i = 0; i < g.nx; ++i) r[i] = 1 + 0.05 * std::cos(g.x(i));
  const auto f0 = maxwellian(r, u, t, g);
  std::vector<double> times;
  for (int k = 0; k <= 16; ++k) times.push_back(0.5 * k);
  const auto snaps = run_kinetic(f0, 1.0, times, g);
  auto energy = [&](const KineticSnapshot& s) {
    double e = 0;
    for (double x : s.field.E) e += x * x * g.dx();
    return e;
  };
  const double e0 = energy(snaps.front());
  double late = 0;
  for (std::size_t k = 12; k < snaps.size(); ++k) late = std::max(late, energy(snaps[k]));
  EXPECT_LT(late, 0.1 * e0);
}

TEST(KineticSimulationTest, MassConservedPerStep) {
  const auto g = PhaseGrid::make(64, 101, 7.0);
  // Temperature at most 1, so f at the v = +-7 cutoff is below 1e-10.
  std::vector<double> r(g.nx), u(g.nx), t(g.nx);
  for (int i = 0; i < g.nx; ++i) {
    r[i] = 1 + 0.3 * std::cos(g.x(i));
    u[i] = 0.1 * std::sin(2 * g.x(i));
    t[i] = 0.8 + 0.2 * std::sin(g.x(i));
  }
  KineticSimulation sim(maxwellian(r, u, t, g), 0.05, g);
  double prev = total_mass(sim.state(), g);
  double worst = 0;
  for (int n = 0; n < 200; ++n) {
    const auto rho = compute_moments(sim.state(), g).rho;
    sim.step(stable_dt(solve_poisson(rho, g.dx()).E, g));
    const double cur = total_mass(sim.state(), g);
    worst = std::max(worst, std::abs(cur - prev) / prev);
    prev = cur;
  }
  EXPECT_LT(worst, 1e-11);
}

TEST(KineticSimulationTest, AdvanceHitsRequestedTimeExactly) {
  const auto g = PhaseGrid::make(16, 21, 6.0);
  KineticSimulation sim(perturbed_state(g), 0.5, g);
  sim.advance_to(0.123);
  EXPECT_EQ(sim.time(), 0.123);
  const auto steps = sim.steps_taken();
  sim.advance_to(0.1);
  EXPECT_EQ(sim.steps_taken(), steps);
}
