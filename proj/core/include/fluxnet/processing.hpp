#pragma once

#include <array>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "fluxnet/dataset.hpp"

namespace fluxnet {

inline constexpr int kInputChannels = 4;  // eps, rho, u, T

/// Multi-channel 1D signal, row-major: data[i * channels + c].
struct Signal {
  int length = 0;
  int channels = 0;
  std::vector<double> data;

  Signal() = default;
  Signal(int n, int c) : length(n), channels(c), data(static_cast<std::size_t>(n) * c, 0.0) {}

  double& at(int i, int c) noexcept { return data[static_cast<std::size_t>(i) * channels + c]; }
  double at(int i, int c) const noexcept { return data[static_cast<std::size_t>(i) * channels + c]; }
  std::vector<double> channel(int c) const;
};

struct StandardizationStats {
  std::array<double, kInputChannels> mean{};
  std::array<double, kInputChannels> stddev{};
};

struct PipelineConfig {
  int window_size = 512;
  double margin_fraction = 0.10;
  int redundancy = 2;
  double norm_threshold = 0.1;
  double smoothing_sigma = 0.06;
  int training_resolution = 1024;
  int training_windows_per_entry = 8;
  double domain_length = 2.0 * std::numbers::pi;

  void validate() const;
  int margin_points() const;
  int useful_length() const { return window_size - 2 * margin_points(); }
  double training_dx() const { return domain_length / training_resolution; }
};

/// Windows cut from a periodic signal for prediction.
struct WindowSet {
  std::vector<int> starts;
  std::vector<Signal> windows;
  int source_length = 0;
  int window_size = 0;
  int margin_points = 0;
  int useful_length = 0;
  int redundancy = 0;
};

/// [eps, rho, u, T] channels of an entry, eps broadcast to a constant vector.
Signal assemble_inputs(double eps, std::span<const double> rho, std::span<const double> u,
                       std::span<const double> T);
Signal assemble_inputs(const DatasetEntry& entry);

/// Pooled per-channel mean and population standard deviation.
StandardizationStats fit_standardization(std::span<const Signal> signals);
StandardizationStats fit_standardization(std::span<const DatasetEntry> entries);

void standardize_inplace(Signal& s, const StandardizationStats& stats);
Signal standardize(Signal s, const StandardizationStats& stats);

/// max_i |3/2 eps rho_i (T_{i+1} - T_{i-1}) / (2 dx)|.
double compute_qns_scale(double eps, std::span<const double> rho, std::span<const double> T,
                         double dx);
std::vector<double> ns_normalize(std::span<const double> q, double q_ns, double threshold);
std::vector<double> ns_denormalize(std::span<const double> q, double q_ns, double threshold);

/// Overlapping windows such that every point lies in the useful (margin-free)
/// part of at least `redundancy` windows.
WindowSet slice_predict(const Signal& signal, const PipelineConfig& cfg);

struct TrainingWindow {
  Signal input;
  std::vector<double> label;
};

/// Fixed number of windows per entry at uniform stride, inputs and labels
/// cut at identical offsets.
std::vector<TrainingWindow> slice_train(const Signal& inputs, std::span<const double> labels,
                                        const PipelineConfig& cfg);

/// Raised-cosine weighted overlap-add of the useful parts, divided by the
/// summed weights.
std::vector<double> reconstruct(const WindowSet& ws,
                                std::span<const std::vector<double>> predictions);

/// Periodic convolution with a Gaussian truncated at 3 sigma (sigma in the
/// same length unit as dx), weights normalized to one.
std::vector<double> gaussian_smooth(std::span<const double> q, double sigma, double dx);

/// Band-limited periodic resampling through the real FFT.
std::vector<double> fourier_resample(std::span<const double> signal, int target);

}  // namespace fluxnet
