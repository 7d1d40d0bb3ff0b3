#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fluxnet/closures.hpp"
#include "fluxnet/datagen.hpp"
#include "fluxnet/dataset.hpp"
#include "fluxnet/fluid.hpp"
#include "fluxnet/kinetic.hpp"
#include "fluxnet/trainer.hpp"

namespace fluxnet {

enum class ModelTag {
  Kinetic,
  FluidKinetic,
  FluidNetwork,
  NavierStokes,
  FluidEuler,
  NSEstimate,
  NNEstimate
};

std::string_view model_tag_name(ModelTag tag);

/// One metric value. Undefined metrics (zero denominator, failed run) keep a
/// NaN value and are counted, never dropped.
struct ErrorRecord {
  std::int64_t run_id = 0;
  double eps = 0.0;
  ModelTag model = ModelTag::Kinetic;
  std::string metric;
  double value = 0.0;
  bool failed = false;

  bool defined() const;
};

/// ||q - qhat|| / ||q||; nullopt when ||q|| = 0.
std::optional<double> rel_l2(std::span<const double> q, std::span<const double> qhat);

/// dx * sum E_i^2.
double electric_energy(std::span<const double> E, double dx);

/// rel_l2 of ln(energy) series; nullopt on a non-positive energy.
std::optional<double> log_energy_rel_error(std::span<const double> model_energy,
                                           std::span<const double> kinetic_energy);

/// NaN for an undefined value.
inline double value_or_nan(const std::optional<double>& v) {
  return v ? *v : std::numeric_limits<double>::quiet_NaN();
}

struct Summary {
  std::size_t count = 0;      // defined values
  std::size_t undefined = 0;  // NaN values
  double median = std::numeric_limits<double>::quiet_NaN();
  double q1 = std::numeric_limits<double>::quiet_NaN();
  double q3 = std::numeric_limits<double>::quiet_NaN();
  double mean = std::numeric_limits<double>::quiet_NaN();
  double min = std::numeric_limits<double>::quiet_NaN();
  double max = std::numeric_limits<double>::quiet_NaN();
};

/// Linear-interpolated percentile (p in [0, 1]) of ascending values.
double percentile_sorted(std::span<const double> sorted, double p);
Summary summarize(std::span<const double> values);

/// Summaries of `values` grouped by `key` into uniform bins on [lo, hi].
struct Bin {
  double lo = 0.0, hi = 0.0;
  Summary summary;
};
std::vector<Bin> uniform_bins(std::span<const double> key, std::span<const double> values,
                              int bins, double lo, double hi);

/// Summaries of `values` over `groups` equal-count groups of ascending `key`.
std::vector<Bin> quantile_groups(std::span<const double> key, std::span<const double> values,
                                 int groups);

// Heat-flux prediction on dataset entries.

struct PredictionRecord {
  std::size_t entry = 0;
  double eps = 0.0;
  double time = 0.0;
  double q_norm = 0.0;  // discrete L2 norm of the reference heat flux
  double nn_error = 0.0;
  double ns_error = 0.0;
};

std::vector<PredictionRecord> predict_vs_dataset(const NeuralClosureConfig& model,
                                                 std::span<const DatasetEntry> dataset,
                                                 std::span<const std::size_t> indices,
                                                 int threads = 1);

std::vector<ErrorRecord> to_error_records(std::span<const PredictionRecord> records);

/// Network and NS estimate of one entry, for plotting.
struct PredictionExample {
  std::size_t entry = 0;
  std::vector<double> q, nn, ns;
};
PredictionExample predict_example(const NeuralClosureConfig& model, const DatasetEntry& entry,
                                  std::size_t index);

// Smoothing and resolution.

struct SmoothingRecord {
  std::size_t entry = 0;
  double eps = 0.0;
  double sigma = 0.0;
  double error = 0.0;
};

std::vector<SmoothingRecord> smoothing_sweep(const NeuralClosureConfig& model,
                                             std::span<const DatasetEntry> dataset,
                                             std::span<const std::size_t> indices,
                                             std::span<const double> sigmas, int threads = 1);

struct ResolutionRecord {
  std::size_t entry = 0;
  double eps = 0.0;
  int resolution = 0;
  bool corrected = false;  // inputs resampled to the training resolution
  double error = 0.0;
};

/// Each entry is Fourier-resampled to every target and predicted there, once
/// as is and once with the corrective resampling enabled.
std::vector<ResolutionRecord> resolution_test(const NeuralClosureConfig& model,
                                              std::span<const DatasetEntry> dataset,
                                              std::span<const std::size_t> indices,
                                              std::span<const int> targets, int threads = 1);

// Model-vs-model simulations.

struct CompareConfig {
  int nx = 512;
  int nv = 101;
  double vmax = 7.0;
  double length = 2.0 * std::numbers::pi;
  double t_end = 8.0;
  double record_dt = 0.05;
  bool include_euler = false;
  KineticOptions kinetic;
  FluidOptions fluid;

  void validate() const;
  PhaseGrid phase_grid() const { return PhaseGrid::make(nx, nv, vmax, length); }
};

struct ModelRun {
  ModelTag model = ModelTag::Kinetic;
  std::vector<double> times;
  std::vector<double> energy;
  bool completed = false;
  double time_reached = 0.0;
  std::string failure;
  /// Log-energy error against the kinetic reference over the common times.
  double error = std::numeric_limits<double>::quiet_NaN();
};

struct CompareResult {
  std::int64_t run_id = 0;
  double eps = 0.0;
  std::vector<ModelRun> runs;  // Kinetic first

  const ModelRun* find(ModelTag tag) const;
};

/// Runs Kinetic, Fluid+Kinetic, Navier-Stokes and (when `neural` is set)
/// Fluid+Network from one initial condition given on the compare grid.
CompareResult compare_models(const InitialCondition& init, double eps, const CompareConfig& cfg,
                             std::shared_ptr<const NeuralClosureConfig> neural,
                             std::int64_t run_id = 0);

std::vector<ErrorRecord> to_error_records(const CompareResult& result);

/// How the Knudsen numbers of a scenario batch are spread on [eps_min, eps_max].
enum class EpsSpread { Uniform, Log, Sqrt };

/// Random initial conditions and Knudsen numbers for a batch of simulations.
struct ScenarioConfig {
  int runs = 20;
  EpsSpread spread = EpsSpread::Sqrt;
  double eps_min = 0.01;
  double eps_max = 1.0;
  int n_modes = 20;
  double mach_min = 1e-4;
  double mach_max = 0.5;
  int max_rejections = 1000;
  bool discontinuous = false;
  double discontinuity_amplitude = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct Scenario {
  std::int64_t run_id = 0;
  double eps = 0.0;
  InitialCondition init;
};

/// One eps per run at the midpoints of `runs` equal strata of the chosen
/// spread; initial conditions follow the dataset generator.
std::vector<Scenario> make_scenarios(const ScenarioConfig& cfg, int points,
                                     double length = 2.0 * std::numbers::pi);

std::vector<CompareResult> compare_suite(std::span<const Scenario> scenarios,
                                         const CompareConfig& cfg,
                                         std::shared_ptr<const NeuralClosureConfig> neural,
                                         int threads = 1);

// Stability of the network closure against the smoothing width.

struct StabilityRecord {
  std::int64_t run_id = 0;
  double eps = 0.0;
  double sigma = 0.0;
  bool reached = false;
  double time_reached = 0.0;
};

std::vector<StabilityRecord> stability_sweep(std::span<const Scenario> scenarios,
                                             const NeuralClosureConfig& model,
                                             std::span<const double> sigmas, double t_target,
                                             const CompareConfig& cfg, int threads = 1);

// Prediction error along kinetic simulations.

struct SimTimeRecord {
  std::int64_t run_id = 0;
  double eps = 0.0;
  double time = 0.0;
  double q_norm = 0.0;
  double nn_error = 0.0;
  double ns_error = 0.0;
};

/// Kinetic runs on `grid` sampled every `sample_dt` up to `t_end`.
std::vector<SimTimeRecord> simulation_time_errors(const NeuralClosureConfig& model,
                                                  std::span<const Scenario> scenarios,
                                                  const PhaseGrid& grid, double t_end,
                                                  double sample_dt, KineticOptions options = {},
                                                  int threads = 1);

// Architecture sweep.

struct ArchitectureRecord {
  int levels = 0;
  int depth = 0;
  int kernel = 0;
  std::size_t params = 0;
  double median_error = std::numeric_limits<double>::quiet_NaN();
  int best_epoch = -1;
};

/// Parameter count of each variant and, when `train_cfg` is given, the
/// median test-split error after training it.
std::vector<ArchitectureRecord> architecture_sweep(std::span<const VNetConfig> variants,
                                                   std::span<const DatasetEntry> dataset,
                                                   const PipelineConfig& pipeline,
                                                   const TrainConfig* train_cfg, int threads = 1);

}  // namespace fluxnet
