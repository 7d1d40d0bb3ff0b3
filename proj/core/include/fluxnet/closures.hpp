#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "fluxnet/fluid.hpp"
#include "fluxnet/kinetic.hpp"
#include "fluxnet/processing.hpp"
#include "fluxnet/vnet.hpp"

namespace fluxnet {

/// q = 0.
Closure zero_closure();

/// q_i = -3/2 eps rho_i T_i (T_{i+1} - T_{i-1}) / (2 dx).
std::vector<double> navier_stokes_heat_flux(double eps, std::span<const double> rho,
                                            std::span<const double> T, double dx);
Closure navier_stokes_closure();

/// A kinetic simulation advanced alongside a fluid run. Steps use the
/// kinetic CFL bound; the heat flux at an intermediate time is the linear
/// interpolation of the two bracketing steps.
class KineticCoupling {
 public:
  KineticCoupling(KineticState init, double eps, const PhaseGrid& grid,
                  KineticOptions options = {});

  /// Heat flux on the kinetic grid at time t; t must not decrease between calls.
  std::vector<double> heat_flux_at(double t);

  const KineticSimulation& simulation() const noexcept { return sim_; }

 private:
  KineticSimulation sim_;
  double prev_time_;
  std::vector<double> prev_q_;
  std::vector<double> cur_q_;
};

/// Heat flux taken from a co-running kinetic simulation, Fourier-resampled
/// when the grids differ. Not safe for concurrent use.
Closure kinetic_closure(std::shared_ptr<KineticCoupling> coupling);

/// Maps standardized windows to normalized heat-flux windows.
using WindowPredictor =
    std::function<std::vector<std::vector<double>>(std::span<const Signal> windows)>;

struct NeuralClosureConfig {
  VNetParams model;
  StandardizationStats stats;
  PipelineConfig pipeline;
  Precision precision = Precision::Double;
  /// Resample inputs to the training resolution and the output back.
  bool resample = true;
  /// Overrides the network (test harnesses).
  WindowPredictor predictor;

  void validate() const;
};

/// Resample, build channels, standardize, slice, predict, reconstruct,
/// undo the NS normalization, smooth, resample back.
std::vector<double> neural_heat_flux(const NeuralClosureConfig& cfg, double eps,
                                     std::span<const double> rho, std::span<const double> u,
                                     std::span<const double> T, double dx);

/// The same chain evaluated once per smoothing width in `sigmas`, sharing the
/// network prediction.
std::vector<std::vector<double>> neural_heat_flux_sweep(const NeuralClosureConfig& cfg, double eps,
                                                        std::span<const double> rho,
                                                        std::span<const double> u,
                                                        std::span<const double> T, double dx,
                                                        std::span<const double> sigmas);

Closure neural_closure(std::shared_ptr<const NeuralClosureConfig> cfg);

}  // namespace fluxnet
