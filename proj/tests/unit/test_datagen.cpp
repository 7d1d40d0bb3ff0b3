#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "fluxnet/closures.hpp"
#include "fluxnet/datagen.hpp"
#include "fluxnet/error.hpp"
#include "fluxnet/evaluation.hpp"

using namespace fluxnet;

namespace {

constexpr double kPi = std::numbers::pi;

// Two-sided Kolmogorov-Smirnov statistic against the uniform CDF on [0, 1].
double ks_uniform(std::vector<double> s) {
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    d = std::max({d, (i + 1) / n - s[i], s[i] - i / n});
  return d;
}

GenConfig tiny_gen() {
  GenConfig cfg;
  cfg.n_eps = 2;
  cfg.inits_per_eps = 1;
  cfg.times_per_run = 3;
  cfg.resolution = 64;
  cfg.nv = 41;
  cfg.t_max = 0.4;
  cfg.seed = 12;
  return cfg;
}

}  // namespace

TEST(FourierSeriesTest, ZeroCoefficientsGiveConstant) {
  const std::vector<double> z(20, 0.0);
  for (double v : fourier_series(0.7, 2.0, z, z, 64, 2 * kPi)) EXPECT_DOUBLE_EQ(v, 1.4);
}

TEST(FourierSeriesTest, MatchesDirectEvaluation) {
  const std::vector<double> a{0.3, -0.2, 0.1}, b{-0.5, 0.25, 0.05};
  const auto f = fourier_series(0.4, 1.5, a, b, 50, 4.0);
  for (int i = 0; i < 50; ++i) {
    const double x = 4.0 * i / 50, k = 2 * kPi / 4.0;
    double s = 0;
    for (int n = 1; n <= 3; ++n) s += a[n - 1] * std::cos(n * k * x) + b[n - 1] * std::sin(n * k * x);
    EXPECT_NEAR(f[i], 1.5 * (0.4 + 0.5 * s), 1e-14);
  }
}

TEST(RandomFourierTest, AmplitudeBoundAndDeterminism) {
  double harmonic = 0;
  for (int n = 1; n <= 20; ++n) harmonic += 2.0 / n;
  EXPECT_NEAR(0.5 * harmonic, 3.5977, 1e-4);
  std::mt19937_64 rng(1), again(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto f = random_fourier(rng, 1.0, 0.6, 20, 256);
    const auto g = random_fourier(again, 1.0, 0.6, 20, 256);
    EXPECT_EQ(f, g);
    for (double v : f) ASSERT_LE(std::abs(v - 0.6), 0.6 * 0.5 * harmonic + 1e-12);
  }
}

TEST(InitialConditionTest, PositiveAndExactMachTarget) {
  GenConfig cfg;
  cfg.resolution = 256;
  std::mt19937_64 rng(3);
  for (int k = 0; k < 200; ++k) {
    const auto ic = random_initial_condition(rng, cfg);
    ASSERT_EQ(ic.rho.size(), 256u);
    EXPECT_GT(*std::min_element(ic.rho.begin(), ic.rho.end()), 0.0);
    EXPECT_GT(*std::min_element(ic.T.begin(), ic.T.end()), 0.0);
    double m = 0;
    for (int i = 0; i < 256; ++i) m = std::max(m, std::abs(ic.u[i]) / std::sqrt(2 * ic.T[i]));
    EXPECT_NEAR(m, ic.mach_target, 1e-12 * ic.mach_target);
    EXPECT_GE(ic.mach_target, 1e-4);
    EXPECT_LE(ic.mach_target, 0.5);
  }
}

TEST(InitialConditionTest, MachTargetsLogUniformKolmogorovSmirnov) {
  GenConfig cfg;
  cfg.resolution = 64;
  std::mt19937_64 rng(99);
  std::vector<double> s;
  const double lo = std::log(1e-4), hi = std::log(0.5);
  for (int k = 0; k < 1000; ++k)
    s.push_back((std::log(random_initial_condition(rng, cfg).mach_target) - lo) / (hi - lo));
  // Asymptotic critical value for p = 0.01.
  EXPECT_LT(ks_uniform(s), 1.628 / std::sqrt(1000.0));
}

TEST(InitialConditionTest, RejectionCapRaises) {
  GenConfig cfg;
  cfg.resolution = 64;
  cfg.max_rejections = 0;
  std::mt19937_64 rng(1);
  EXPECT_THROW(random_initial_condition(rng, cfg), NumericalError);
}

TEST(KnudsenSamplingTest, DeterministicGrid) {
  GenConfig cfg;
  const auto eps = sample_knudsen(cfg);
  ASSERT_EQ(eps.size(), 100u);
  EXPECT_EQ(eps.front(), 0.01);
  EXPECT_EQ(eps.back(), 1.0);
  for (std::size_t k = 1; k < eps.size(); ++k) EXPECT_GT(eps[k], eps[k - 1]);
  const double s = 0.1 + (37.0 / 99.0) * 0.9;
  EXPECT_NEAR(eps[37], s * s, 1e-15);
}

TEST(KnudsenSamplingTest, RandomFractionBelowOneTenth) {
  GenConfig cfg;
  cfg.n_eps = 10000;
  cfg.eps_sampling = EpsSampling::Random;
  const auto eps = sample_knudsen(cfg);
  const double frac =
      std::count_if(eps.begin(), eps.end(), [](double e) { return e < 0.1; }) / 10000.0;
  EXPECT_NEAR(frac, (std::sqrt(0.1) - 0.1) / 0.9, 0.02);
  for (double e : eps) {
    ASSERT_GE(e, 0.01);
    ASSERT_LE(e, 1.0);
  }
  EXPECT_EQ(sample_knudsen(cfg), eps);
}

TEST(RecordTimesTest, SortedInRangeWithExpectedMean) {
  GenConfig cfg;
  std::mt19937_64 rng(4);
  double sum = 0;
  int count = 0;
  for (int k = 0; k < 500; ++k) {
    const auto t = sample_record_times(rng, cfg);
    ASSERT_EQ(t.size(), 20u);
    EXPECT_TRUE(std::is_sorted(t.begin(), t.end()));
    for (double v : t) {
      ASSERT_GE(v, 0.1);
      ASSERT_LE(v, 2.0);
      sum += v;
      ++count;
    }
  }
  EXPECT_EQ(count, 10000);
  EXPECT_NEAR(sum / count, 1.05, 0.05);
}

TEST(DiscontinuityTest, Examples) {
  for (double x = 0; x < 2 * kPi; x += 0.3) EXPECT_EQ(discontinuity_multiplier(2.0, 0.0, x), 1.0);
  EXPECT_NEAR(discontinuity_multiplier(kPi, 0.5, 0.0), 1.0, 1e-15);
  for (double c : {-0.8, 0.3, 1.0}) {
    const double xd = 2.5, h = 1e-9;
    const double jump = discontinuity_multiplier(xd, c, xd - h) - discontinuity_multiplier(xd, c, xd);
    EXPECT_NEAR(std::abs(jump), 2 * std::abs(c), 1e-8);
  }
  const auto prof = discontinuity_profile(kPi, 0.5, 8, 2 * kPi);
  EXPECT_NEAR(prof[0], 1.0, 1e-15);
  EXPECT_NEAR(prof[4], 0.5, 1e-15);
}

TEST(DiscontinuityTest, FieldsGetIndependentJumps) {
  std::mt19937_64 rng(5);
  InitialCondition ic{std::vector<double>(256, 1.0), std::vector<double>(256, 1.0),
                      std::vector<double>(256, 1.0), 0.1};
  add_random_discontinuities(rng, ic, 0.5);
  auto jump_at = [](const std::vector<double>& f) {
    int best = 0;
    double big = 0;
    for (int i = 0; i < 256; ++i) {
      const double d = std::abs(f[(i + 1) % 256] - f[i]);
      if (d > big) {
        big = d;
        best = i;
      }
    }
    return best;
  };
  const int a = jump_at(ic.rho), b = jump_at(ic.u), c = jump_at(ic.T);
  EXPECT_FALSE(a == b && b == c);
  EXPECT_THROW(add_random_discontinuities(rng, ic, 1.5), ConfigError);
}

TEST(GenerateDatasetTest, CountsDeterminismAndValidity) {
  const auto cfg = tiny_gen();
  const auto a = generate_dataset(cfg);
  ASSERT_EQ(a.entries.size(), 6u);
  EXPECT_EQ(a.runs, 2);
  EXPECT_EQ(a.failed_runs, 0);
  const auto b = generate_dataset(cfg);
  ASSERT_EQ(b.entries.size(), 6u);
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_EQ(a.entries[k].rho, b.entries[k].rho);
    EXPECT_EQ(a.entries[k].q, b.entries[k].q);
    EXPECT_EQ(a.entries[k].provenance.time, b.entries[k].provenance.time);
  }
  for (std::size_t k = 0; k < 6; ++k) {
    const auto& e = a.entries[k];
    ASSERT_EQ(e.size(), 64);
    EXPECT_GE(e.eps, 0.01);
    EXPECT_LE(e.eps, 1.0);
    EXPECT_EQ(e.eps, k < 3 ? 0.01 : 1.0);
    double qmax = 0;
    for (int i = 0; i < 64; ++i) {
      EXPECT_GT(e.rho[i], 0.0);
      EXPECT_GT(e.T[i], 0.0);
      EXPECT_TRUE(std::isfinite(e.q[i]));
      qmax = std::max(qmax, std::abs(e.q[i]));
    }
    EXPECT_GT(qmax, 0.0);
    EXPECT_GE(e.provenance.time, 0.1);
    EXPECT_LE(e.provenance.time, 0.4);
    if (k % 3 > 0) {
      EXPECT_GE(e.provenance.time, a.entries[k - 1].provenance.time);
    }
  }
}

TEST(GenerateDatasetTest, ThreadCountDoesNotChangeData) {
  auto cfg = tiny_gen();
  cfg.inits_per_eps = 2;
  cfg.times_per_run = 2;
  const auto serial = generate_dataset(cfg);
  cfg.threads = 3;
  const auto parallel = generate_dataset(cfg);
  ASSERT_EQ(serial.entries.size(), parallel.entries.size());
  for (std::size_t k = 0; k < serial.entries.size(); ++k) {
    EXPECT_EQ(serial.entries[k].q, parallel.entries[k].q);
    EXPECT_EQ(serial.entries[k].provenance.run_id, parallel.entries[k].provenance.run_id);
  }
}

TEST(GenerateDatasetTest, NavierStokesTracksSmallKnudsenHeatFlux) {
  GenConfig cfg;
  cfg.n_eps = 1;
  cfg.eps_min = 0.01;
  cfg.eps_max = 0.01;
  cfg.inits_per_eps = 2;
  cfg.times_per_run = 4;
  cfg.resolution = 256;
  cfg.nv = 81;
  cfg.t_max = 1.0;
  cfg.seed = 7;
  const auto rep = generate_dataset(cfg);
  ASSERT_EQ(rep.entries.size(), 8u);
  std::vector<double> errs;
  const double dx = cfg.length / cfg.resolution;
  for (const auto& e : rep.entries) {
    const auto qns = navier_stokes_heat_flux(e.eps, e.rho, e.T, dx);
    errs.push_back(value_or_nan(rel_l2(e.q, qns)));
  }
  const auto s = summarize(errs);
  RecordProperty("median_ns_error", std::to_string(s.median));
  EXPECT_LT(s.median, 1.0);
}
