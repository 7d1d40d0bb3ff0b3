#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>
#include <vector>

#include "fluxnet/closures.hpp"
#include "fluxnet/error.hpp"

using namespace fluxnet;

namespace {

constexpr double kPi = std::numbers::pi;

struct Profiles {
  std::vector<double> rho, u, T;
};

Profiles smooth_profiles(int n, double shift = 0.0) {
  Profiles p;
  for (int i = 0; i < n; ++i) {
    const double x = 2 * kPi * i / n + shift;
    p.rho.push_back(1 + 0.2 * std::sin(x));
    p.u.push_back(0.1 * std::cos(2 * x));
    p.T.push_back(1 + 0.3 * std::cos(x + 0.5) + 0.05 * std::sin(3 * x));
  }
  return p;
}

// Network stand-in returning the standardized temperature channel.
std::vector<std::vector<double>> temperature_stub(std::span<const Signal> windows) {
  std::vector<std::vector<double>> out;
  for (const auto& w : windows) out.push_back(w.channel(3));
  return out;
}

NeuralClosureConfig stub_config() {
  NeuralClosureConfig cfg;
  cfg.pipeline.smoothing_sigma = 0.0;
  cfg.pipeline.norm_threshold = 1e-6;  // large NS scales, so no rescaling
  cfg.stats.mean = {0.1, 1.0, 0.0, 1.0};
  cfg.stats.stddev = {0.5, 0.2, 0.1, 0.25};
  cfg.predictor = temperature_stub;
  return cfg;
}

}  // namespace

TEST(ZeroClosureTest, ZeroOfMatchingLength) {
  const auto p = smooth_profiles(37);
  const auto c = zero_closure();
  for (double eps : {0.01, 1.0}) {
    const auto q = c.fn(ClosureArgs{eps, p.rho, p.u, p.T, 0.1, 0.0});
    ASSERT_EQ(q.size(), 37u);
    for (double v : q) EXPECT_EQ(v, 0.0);
  }
}

TEST(NavierStokesClosureTest, Examples) {
  const int n = 16;
  const double dx = 0.1;
  std::vector<double> rho(n, 1.0), T(n, 1.0);
  for (double v : navier_stokes_heat_flux(0.1, rho, T, dx)) EXPECT_EQ(v, 0.0);
  T[4] = 1.0 - dx;
  T[6] = 1.0 + dx;
  const auto q = navier_stokes_heat_flux(0.1, rho, T, dx);
  EXPECT_NEAR(q[5], -0.15, 1e-14);
  const auto q2 = navier_stokes_heat_flux(0.2, rho, T, dx);
  for (int i = 0; i < n; ++i) EXPECT_NEAR(q2[i], 2 * q[i], 1e-15);
}

TEST(NavierStokesClosureTest, OddUnderReflectionAndShiftEquivariant) {
  const int n = 64;
  const auto p = smooth_profiles(n);
  const double dx = 2 * kPi / n;
  const auto q = navier_stokes_heat_flux(0.3, p.rho, p.T, dx);
  std::vector<double> rr(n), tr(n);
  for (int i = 0; i < n; ++i) {
    rr[i] = p.rho[(n - i) % n];
    tr[i] = p.T[(n - i) % n];
  }
  const auto qr = navier_stokes_heat_flux(0.3, rr, tr, dx);
  for (int i = 0; i < n; ++i) EXPECT_NEAR(qr[i], -q[(n - i) % n], 1e-14);
  std::vector<double> rs(n), ts(n);
  for (int i = 0; i < n; ++i) {
    rs[(i + 5) % n] = p.rho[i];
    ts[(i + 5) % n] = p.T[i];
  }
  const auto qs = navier_stokes_heat_flux(0.3, rs, ts, dx);
  for (int i = 0; i < n; ++i) EXPECT_EQ(qs[(i + 5) % n], q[i]);
}

TEST(KineticClosureTest, MaxwellianStartHasNoHeatFlux) {
  const auto grid = PhaseGrid::make(32, 61, 7.0);
  const auto p = smooth_profiles(32);
  auto coupling = std::make_shared<KineticCoupling>(maxwellian(p.rho, p.u, p.T, grid), 0.1, grid);
  const auto q = coupling->heat_flux_at(0.0);
  // Velocity quadrature of a sampled Maxwellian leaves about 1e-8.
  for (double v : q) EXPECT_NEAR(v, 0.0, 1e-6);
}

TEST(KineticClosureTest, SnapshotTimesAndInterpolation) {
  const auto grid = PhaseGrid::make(32, 61, 7.0);
  const auto p = smooth_profiles(32);
  const auto init = maxwellian(p.rho, p.u, p.T, grid);
  const double eps = 0.2;

  // Independent replay of the first two natural steps.
  KineticSimulation ref(init, eps, grid);
  std::vector<double> times{0.0}, qs0 = ref.snapshot().moments.q;
  std::vector<std::vector<double>> qs{qs0};
  for (int k = 0; k < 2; ++k) {
    const auto rho = compute_moments(ref.state(), grid).rho;
    const auto field = solve_poisson(rho, grid.dx(), ref.options().poisson_sign);
    ref.step(stable_dt(field.E, grid, ref.options().safety));
    times.push_back(ref.time());
    qs.push_back(ref.snapshot().moments.q);
  }

  KineticCoupling exact(init, eps, grid);
  EXPECT_EQ(exact.heat_flux_at(times[1]), qs[1]);
  EXPECT_EQ(exact.heat_flux_at(times[2]), qs[2]);
  EXPECT_THROW(exact.heat_flux_at(times[1] * 0.5), ConfigError);

  KineticCoupling mid(init, eps, grid);
  const double t = times[1] + 0.25 * (times[2] - times[1]);
  const auto q = mid.heat_flux_at(t);
  for (int i = 0; i < 32; ++i) EXPECT_NEAR(q[i], 0.75 * qs[1][i] + 0.25 * qs[2][i], 1e-15);
}

TEST(KineticClosureTest, ResamplesToFluidGrid) {
  const auto grid = PhaseGrid::make(64, 61, 7.0);
  const auto p = smooth_profiles(64);
  const auto init = maxwellian(p.rho, p.u, p.T, grid);
  KineticCoupling ref(init, 0.5, grid);
  const auto q64 = ref.heat_flux_at(0.01);
  const auto closure = kinetic_closure(std::make_shared<KineticCoupling>(init, 0.5, grid));
  const auto coarse = smooth_profiles(32);
  const auto q32 = closure.fn(ClosureArgs{0.5, coarse.rho, coarse.u, coarse.T, 2 * kPi / 32, 0.01});
  EXPECT_EQ(q32, fourier_resample(q64, 32));
  EXPECT_THROW(kinetic_closure(nullptr), ConfigError);
}

TEST(NeuralClosureTest, StubChainRoundTrip) {
  const auto cfg = stub_config();
  const int n = cfg.pipeline.training_resolution;
  const auto p = smooth_profiles(n);
  const auto q = neural_heat_flux(cfg, 0.4, p.rho, p.u, p.T, 2 * kPi / n);
  ASSERT_EQ(q.size(), static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) EXPECT_NEAR(q[i], (p.T[i] - 1.0) / 0.25, 1e-10);
}

TEST(NeuralClosureTest, StubChainWithResampling) {
  const auto cfg = stub_config();
  for (int n : {256, 512, 2048}) {
    const auto p = smooth_profiles(n);
    const auto q = neural_heat_flux(cfg, 0.4, p.rho, p.u, p.T, 2 * kPi / n);
    ASSERT_EQ(q.size(), static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ASSERT_NEAR(q[i], (p.T[i] - 1.0) / 0.25, 1e-10) << "n=" << n;
  }
}

TEST(NeuralClosureTest, NormalizationIsUndone) {
  auto cfg = stub_config();
  cfg.pipeline.norm_threshold = 0.1;
  const int n = cfg.pipeline.training_resolution;
  const auto p = smooth_profiles(n);
  const double eps = 0.01, dx = 2 * kPi / n;
  const double qns = compute_qns_scale(eps, p.rho, p.T, dx);
  ASSERT_GT(qns, 0.0);
  ASSERT_LT(qns, 0.1);
  const auto q = neural_heat_flux(cfg, eps, p.rho, p.u, p.T, dx);
  for (int i = 0; i < n; ++i) EXPECT_NEAR(q[i], (p.T[i] - 1.0) / 0.25 * qns / 0.1, 1e-10);
}

TEST(NeuralClosureTest, SweepMatchesSingleEvaluations) {
  auto cfg = stub_config();
  const int n = 512;
  const auto p = smooth_profiles(n);
  const std::vector<double> sigmas{0.0, 0.04, 0.2};
  const auto sweep = neural_heat_flux_sweep(cfg, 0.3, p.rho, p.u, p.T, 2 * kPi / n, sigmas);
  ASSERT_EQ(sweep.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    cfg.pipeline.smoothing_sigma = sigmas[k];
    EXPECT_EQ(sweep[k], neural_heat_flux(cfg, 0.3, p.rho, p.u, p.T, 2 * kPi / n));
  }
}

TEST(NeuralClosureTest, NonFiniteOutputIsAnError) {
  auto cfg = stub_config();
  cfg.predictor = [](std::span<const Signal> windows) {
    auto out = temperature_stub(windows);
    out[1][300] = std::numeric_limits<double>::quiet_NaN();
    return out;
  };
  const auto p = smooth_profiles(1024);
  EXPECT_THROW(neural_heat_flux(cfg, 0.3, p.rho, p.u, p.T, 2 * kPi / 1024), NumericalError);
}

TEST(NeuralClosureTest, RealNetworkShapesAndValidation) {
  NeuralClosureConfig cfg;
  cfg.model = init_params(VNetConfig{}, 4);
  cfg.stats.mean = {0.3, 1.0, 0.0, 0.6};
  cfg.stats.stddev = {0.3, 0.3, 0.2, 0.3};
  const auto closure = neural_closure(std::make_shared<const NeuralClosureConfig>(cfg));
  const auto p = smooth_profiles(300);
  const auto q = closure.fn(ClosureArgs{0.2, p.rho, p.u, p.T, 2 * kPi / 300, 0.0});
  ASSERT_EQ(q.size(), 300u);
  for (double v : q) EXPECT_TRUE(std::isfinite(v));

  auto bad = cfg;
  bad.pipeline.window_size = 256;
  EXPECT_THROW(neural_closure(std::make_shared<const NeuralClosureConfig>(bad)), ConfigError);
  bad = cfg;
  bad.model.values.pop_back();
  EXPECT_THROW(neural_closure(std::make_shared<const NeuralClosureConfig>(bad)), ConfigError);
}

TEST(NeuralClosureTest, ShiftEquivarianceOfRealNetwork) {
  NeuralClosureConfig cfg;
  cfg.model = init_params(VNetConfig{}, 4);
  cfg.stats.mean = {0.3, 1.0, 0.0, 1.0};
  cfg.stats.stddev = {0.3, 0.2, 0.1, 0.3};
  const int n = 1024, s = 37;
  const auto p = smooth_profiles(n);
  const auto ps = smooth_profiles(n, -2 * kPi * s / n);  // profile shifted right by s cells
  const double dx = 2 * kPi / n;
  const auto q = neural_heat_flux(cfg, 0.2, p.rho, p.u, p.T, dx);
  const auto qs = neural_heat_flux(cfg, 0.2, ps.rho, ps.u, ps.T, dx);
  double num = 0, den = 0;
  for (int i = 0; i < n; ++i) {
    num += std::pow(qs[(i + s) % n] - q[i], 2);
    den += q[i] * q[i];
  }
  const double rel = std::sqrt(num / den);
  std::ostringstream os;
  os << std::scientific << rel;
  RecordProperty("relative_shift_error", os.str());
  EXPECT_LT(rel, 1e-3);
}
