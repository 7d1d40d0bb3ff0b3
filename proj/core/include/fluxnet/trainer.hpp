#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fluxnet/dataset.hpp"
#include "fluxnet/processing.hpp"
#include "fluxnet/vnet.hpp"

namespace fluxnet {

struct TrainConfig {
  double lr0 = 0.005;
  int series = 5;
  int epochs_per_series = 120;
  int batch_size = 1024;
  double decay = 0.98;
  double test_fraction = 0.04;
  double val_fraction = 0.10;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
  int total_epochs() const { return series * epochs_per_series; }
};

struct AdamState {
  std::vector<double> m, v;
  std::int64_t t = 0;
};

struct EpochRecord {
  int series = 0;
  int epoch = 0;
  double train_mae = 0.0;
  double val_mae = 0.0;
  double lr = 0.0;
};

using TrainHistory = std::vector<EpochRecord>;

/// Mean absolute error; writes sign(pred - label) / n into grad when given.
double mae_loss(std::span<const double> pred, std::span<const double> label,
                std::span<double> grad = {});

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr, const TrainConfig& cfg);

/// lr0 * decay^epoch, identical for every series.
double lr_schedule(int series, int epoch, const TrainConfig& cfg);

/// Entry indices of each split. Splitting is per entry so that overlapping
/// windows of one simulation never straddle two splits.
struct DatasetSplit {
  std::vector<std::size_t> train, val, test;
};

DatasetSplit split_dataset(std::size_t entries, const TrainConfig& cfg, std::uint64_t seed);

/// Standardized input windows and NS-normalized label windows of the given entries.
std::vector<TrainingWindow> prepare_windows(std::span<const DatasetEntry> dataset,
                                            std::span<const std::size_t> indices,
                                            const StandardizationStats& stats,
                                            const PipelineConfig& pipeline);

/// Everything needed to continue a training run bit-for-bit.
struct TrainCheckpoint {
  std::vector<double> params;
  AdamState adam;
  int next_epoch = 0;  // global epoch index, series * epochs_per_series + epoch
  std::vector<double> best_params;
  double best_val = 0.0;
  int best_epoch = -1;
  TrainHistory history;
};

struct TrainOptions {
  /// Called after every epoch with the up-to-date checkpoint.
  std::function<void(const TrainCheckpoint&)> on_epoch;
  /// Continue from this state instead of a fresh initialization.
  const TrainCheckpoint* resume = nullptr;
  /// Stop after this global epoch count (negative: run the whole schedule).
  int stop_at_epoch = -1;
};

struct TrainResult {
  VNetParams params;  // best validation parameters
  StandardizationStats stats;
  TrainHistory history;
  DatasetSplit split;
  int best_epoch = -1;
  TrainCheckpoint checkpoint;
};

/// Low-level loop on already prepared windows.
TrainCheckpoint train_windows(std::span<const TrainingWindow> train_set,
                              std::span<const TrainingWindow> val_set, const VNetConfig& vcfg,
                              const TrainConfig& cfg, const TrainOptions& options = {});

/// Full recipe: split, fit standardization on the training entries, prepare
/// windows and run the schedule.
TrainResult train(std::span<const DatasetEntry> dataset, const VNetConfig& vcfg,
                  const PipelineConfig& pipeline, const TrainConfig& cfg,
                  const TrainOptions& options = {});

/// Mean MAE of the network over windows (double precision, chunked).
double evaluate_mae(const VNetConfig& vcfg, std::span<const double> params,
                    std::span<const TrainingWindow> windows, int chunk = 64);

}  // namespace fluxnet
