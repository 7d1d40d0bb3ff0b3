#pragma once

#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fluxnet/dataset.hpp"
#include "fluxnet/kinetic.hpp"

namespace fluxnet {

enum class EpsSampling { Deterministic, Random };

struct GenConfig {
  int n_eps = 100;
  int inits_per_eps = 5;
  int times_per_run = 20;
  double eps_min = 0.01;
  double eps_max = 1.0;
  double t_min = 0.1;
  double t_max = 2.0;
  int resolution = 1024;
  int nv = 141;
  double vmax = 7.0;
  double length = 2.0 * std::numbers::pi;
  int n_modes = 20;
  double mach_min = 1e-4;
  double mach_max = 0.5;
  std::uint64_t seed = 0;
  EpsSampling eps_sampling = EpsSampling::Deterministic;
  double kinetic_safety = 0.9;
  int max_rejections = 1000;
  int threads = 1;

  void validate() const;
  PhaseGrid phase_grid() const { return PhaseGrid::make(resolution, nv, vmax, length); }
};

/// alpha * (a0_half + 0.5 * sum_n (a_n cos(n k x) + b_n sin(n k x))), k = 2 pi / length.
std::vector<double> fourier_series(double a0_half, double alpha, std::span<const double> a,
                                   std::span<const double> b, int points, double length);

/// Same with a_n, b_n ~ U[-1/n, 1/n].
std::vector<double> random_fourier(std::mt19937_64& rng, double a0_half, double alpha, int n_modes,
                                   int points, double length = 2.0 * std::numbers::pi);

struct InitialCondition {
  std::vector<double> rho, u, T;
  double mach_target = 0.0;
};

/// max_x |u| / sqrt(2 T).
double max_mach(std::span<const double> u, std::span<const double> T);

/// Density and temperature redrawn until strictly positive; velocity scaled so
/// that its maximum Mach number equals a log-uniform target.
InitialCondition random_initial_condition(std::mt19937_64& rng, const GenConfig& cfg);

/// Knudsen numbers with sqrt(eps) uniform, on a grid or drawn at random.
std::vector<double> sample_knudsen(const GenConfig& cfg);
std::vector<double> sample_knudsen(const GenConfig& cfg, std::mt19937_64& rng);

std::vector<double> sample_record_times(std::mt19937_64& rng, const GenConfig& cfg);

/// Piecewise-linear multiplier with a jump of 2|c| at x_d.
double discontinuity_multiplier(double x_d, double c, double x);
std::vector<double> discontinuity_profile(double x_d, double c, int points,
                                          double length = 2.0 * std::numbers::pi);

/// Multiplies each of rho, u, T by its own random discontinuity profile.
void add_random_discontinuities(std::mt19937_64& rng, InitialCondition& ic, double max_amplitude,
                                double length = 2.0 * std::numbers::pi);

/// Per-run generator; streams are derived from (seed, eps index, init index).
std::mt19937_64 run_rng(std::uint64_t seed, std::uint64_t eps_index, std::uint64_t init_index);

struct GenReport {
  Dataset entries;
  int runs = 0;
  int failed_runs = 0;
  std::vector<std::string> failures;
};

/// Called after each finished run with the number of runs done so far.
using GenProgress = std::function<void(int done, int total, bool ok)>;

GenReport generate_dataset(const GenConfig& cfg, const GenProgress& progress = {});

}  // namespace fluxnet
