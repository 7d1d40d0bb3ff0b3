#include "fluxnet/processing.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "fluxnet/error.hpp"
#include "fluxnet/fft.hpp"

namespace fluxnet {

std::vector<double> Signal::channel(int c) const {
  std::vector<double> out(length);
  for (int i = 0; i < length; ++i) out[i] = at(i, c);
  return out;
}

void PipelineConfig::validate() const {
  if (window_size < 2 || window_size % 2 != 0)
    throw ConfigError("pipeline: window_size must be even and >= 2");
  if (!(margin_fraction >= 0.0 && margin_fraction < 0.5))
    throw ConfigError("pipeline: margin_fraction must be in [0, 0.5)");
  if (redundancy < 2) throw ConfigError("pipeline: redundancy must be >= 2");
  if (!(norm_threshold > 0.0)) throw ConfigError("pipeline: norm_threshold must be positive");
  if (!(smoothing_sigma >= 0.0)) throw ConfigError("pipeline: smoothing_sigma must be >= 0");
  if (training_resolution < 4) throw ConfigError("pipeline: training_resolution must be >= 4");
  if (!(domain_length > 0.0)) throw ConfigError("pipeline: domain_length must be positive");
  if (training_windows_per_entry < 1)
    throw ConfigError("pipeline: training_windows_per_entry must be >= 1");
  if (useful_length() < redundancy)
    throw ConfigError("pipeline: useful window length smaller than redundancy");
}

int PipelineConfig::margin_points() const {
  return static_cast<int>(std::lround(margin_fraction * window_size));
}

Signal assemble_inputs(double eps, std::span<const double> rho, std::span<const double> u,
                       std::span<const double> T) {
  const auto n = rho.size();
  if (u.size() != n || T.size() != n) throw ConfigError("assemble_inputs: length mismatch");
  Signal s(static_cast<int>(n), kInputChannels);
  for (std::size_t i = 0; i < n; ++i) {
    s.at(i, 0) = eps;
    s.at(i, 1) = rho[i];
    s.at(i, 2) = u[i];
    s.at(i, 3) = T[i];
  }
  return s;
}

Signal assemble_inputs(const DatasetEntry& entry) {
  return assemble_inputs(entry.eps, entry.rho, entry.u, entry.T);
}

StandardizationStats fit_standardization(std::span<const Signal> signals) {
  if (signals.empty()) throw ConfigError("fit_standardization: empty dataset");
  StandardizationStats st;
  double count = 0.0;
  std::array<double, kInputChannels> sum{};
  for (const Signal& s : signals) {
    if (s.channels != kInputChannels) throw ConfigError("fit_standardization: expected 4 channels");
    for (int i = 0; i < s.length; ++i)
      for (int c = 0; c < kInputChannels; ++c) sum[c] += s.at(i, c);
    count += s.length;
  }
  if (count == 0.0) throw ConfigError("fit_standardization: empty signals");
  for (int c = 0; c < kInputChannels; ++c) st.mean[c] = sum[c] / count;
  std::array<double, kInputChannels> sq{};
  for (const Signal& s : signals)
    for (int i = 0; i < s.length; ++i)
      for (int c = 0; c < kInputChannels; ++c) {
        const double d = s.at(i, c) - st.mean[c];
        sq[c] += d * d;
      }
  for (int c = 0; c < kInputChannels; ++c) {
    st.stddev[c] = std::sqrt(sq[c] / count);
    // Round-off in the mean leaves a tiny spread on constant channels.
    if (!(st.stddev[c] > 1e-12 * std::max(1.0, std::abs(st.mean[c]))))
      throw NumericalError("fit_standardization: zero variance in channel " + std::to_string(c));
  }
  return st;
}

StandardizationStats fit_standardization(std::span<const DatasetEntry> entries) {
  std::vector<Signal> signals;
  signals.reserve(entries.size());
  for (const auto& e : entries) signals.push_back(assemble_inputs(e));
  return fit_standardization(signals);
}

void standardize_inplace(Signal& s, const StandardizationStats& stats) {
  if (s.channels != kInputChannels) throw ConfigError("standardize: expected 4 channels");
  for (int i = 0; i < s.length; ++i)
    for (int c = 0; c < kInputChannels; ++c)
      s.at(i, c) = (s.at(i, c) - stats.mean[c]) / stats.stddev[c];
}

Signal standardize(Signal s, const StandardizationStats& stats) {
  standardize_inplace(s, stats);
  return s;
}

double compute_qns_scale(double eps, std::span<const double> rho, std::span<const double> T,
                         double dx) {
  const auto n = rho.size();
  if (T.size() != n) throw ConfigError("compute_qns_scale: length mismatch");
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dT = (T[(i + 1) % n] - T[(i + n - 1) % n]) / (2.0 * dx);
    scale = std::max(scale, std::abs(1.5 * eps * rho[i] * dT));
  }
  return scale;
}

std::vector<double> ns_normalize(std::span<const double> q, double q_ns, double threshold) {
  if (!(threshold > 0.0)) throw ConfigError("ns_normalize: threshold must be positive");
  std::vector<double> out(q.begin(), q.end());
  if (q_ns > 0.0 && q_ns <= threshold)
    for (double& v : out) v *= threshold / q_ns;
  return out;
}

std::vector<double> ns_denormalize(std::span<const double> q, double q_ns, double threshold) {
  if (!(threshold > 0.0)) throw ConfigError("ns_denormalize: threshold must be positive");
  std::vector<double> out(q.begin(), q.end());
  if (q_ns > 0.0 && q_ns <= threshold)
    for (double& v : out) v *= q_ns / threshold;
  return out;
}

namespace {

Signal cut_window(const Signal& s, int start, int n) {
  Signal w(n, s.channels);
  const int m = s.length;
  for (int k = 0; k < n; ++k) {
    const int src = ((start + k) % m + m) % m;
    std::copy_n(s.data.begin() + static_cast<std::ptrdiff_t>(src) * s.channels, s.channels,
                w.data.begin() + static_cast<std::ptrdiff_t>(k) * s.channels);
  }
  return w;
}

}  // namespace

WindowSet slice_predict(const Signal& signal, const PipelineConfig& cfg) {
  cfg.validate();
  if (signal.length < 1) throw ConfigError("slice_predict: empty signal");
  WindowSet ws;
  ws.source_length = signal.length;
  ws.window_size = cfg.window_size;
  ws.margin_points = cfg.margin_points();
  ws.useful_length = cfg.useful_length();
  ws.redundancy = cfg.redundancy;
  const int m = signal.length;
  const int stride = std::max(1, ws.useful_length / cfg.redundancy);

  // Window k has its useful part starting at k * stride.
  int count = (m + stride - 1) / stride;
  auto min_coverage = [&](int windows) {
    std::vector<int> cover(m, 0);
    for (int k = 0; k < windows; ++k)
      for (int n = 0; n < ws.useful_length; ++n) ++cover[(static_cast<long>(k) * stride + n) % m];
    return *std::min_element(cover.begin(), cover.end());
  };
  while (min_coverage(count) < cfg.redundancy) ++count;

  for (int k = 0; k < count; ++k) {
    const int start = static_cast<int>(((static_cast<long>(k) * stride - ws.margin_points) % m + m) % m);
    ws.starts.push_back(start);
    ws.windows.push_back(cut_window(signal, start, cfg.window_size));
  }
  return ws;
}

std::vector<TrainingWindow> slice_train(const Signal& inputs, std::span<const double> labels,
                                        const PipelineConfig& cfg) {
  cfg.validate();
  const int m = inputs.length;
  if (static_cast<int>(labels.size()) != m) throw ConfigError("slice_train: label length mismatch");
  if (m != cfg.training_resolution)
    throw ConfigError("slice_train: entry resolution differs from training_resolution");
  const int per_entry = cfg.training_windows_per_entry;
  if (m % per_entry != 0)
    throw ConfigError("slice_train: windows per entry must divide the training resolution");
  const int stride = m / per_entry;
  Signal label_signal(m, 1);
  std::copy(labels.begin(), labels.end(), label_signal.data.begin());
  std::vector<TrainingWindow> out;
  out.reserve(per_entry);
  for (int k = 0; k < per_entry; ++k) {
    TrainingWindow tw;
    tw.input = cut_window(inputs, k * stride, cfg.window_size);
    tw.label = cut_window(label_signal, k * stride, cfg.window_size).data;
    out.push_back(std::move(tw));
  }
  return out;
}

std::vector<double> reconstruct(const WindowSet& ws,
                                std::span<const std::vector<double>> predictions) {
  if (predictions.size() != ws.starts.size())
    throw ConfigError("reconstruct: prediction count does not match window count");
  const int m = ws.source_length;
  const int useful = ws.useful_length;
  std::vector<double> kernel(useful);
  for (int n = 0; n < useful; ++n)
    kernel[n] = (1.0 - std::cos(2.0 * std::numbers::pi * (n + 0.5) / useful)) / ws.redundancy;

  std::vector<double> acc(m, 0.0), weight(m, 0.0);
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    const auto& p = predictions[k];
    if (static_cast<int>(p.size()) != ws.window_size)
      throw ConfigError("reconstruct: prediction length differs from window size");
    for (int n = 0; n < useful; ++n) {
      const int dst = (ws.starts[k] + ws.margin_points + n) % m;
      acc[dst] += kernel[n] * p[ws.margin_points + n];
      weight[dst] += kernel[n];
    }
  }
  for (int i = 0; i < m; ++i) {
    if (!(weight[i] > 0.0))
      throw NumericalError("reconstruct: point " + std::to_string(i) + " not covered");
    acc[i] /= weight[i];
  }
  return acc;
}

std::vector<double> gaussian_smooth(std::span<const double> q, double sigma, double dx) {
  if (!(sigma >= 0.0)) throw ConfigError("gaussian_smooth: sigma must be >= 0");
  if (!(dx > 0.0)) throw ConfigError("gaussian_smooth: dx must be positive");
  std::vector<double> out(q.begin(), q.end());
  const int half = sigma > 0.0 ? static_cast<int>(std::floor(3.0 * sigma / dx)) : 0;
  if (half == 0 || q.empty()) return out;
  std::vector<double> w(2 * half + 1);
  double total = 0.0;
  for (int k = -half; k <= half; ++k) {
    const double t = k * dx;
    w[k + half] = std::exp(-t * t / (2.0 * sigma * sigma));
    total += w[k + half];
  }
  for (double& v : w) v /= total;
  const long m = static_cast<long>(q.size());
  for (long i = 0; i < m; ++i) {
    double s = 0.0;
    for (int k = -half; k <= half; ++k) s += w[k + half] * q[((i + k) % m + m) % m];
    out[i] = s;
  }
  return out;
}

std::vector<double> fourier_resample(std::span<const double> signal, int target) {
  if (target < 2) throw ConfigError("fourier_resample: target length must be >= 2");
  const int m = static_cast<int>(signal.size());
  if (m < 1) throw ConfigError("fourier_resample: empty signal");
  if (m == target) return {signal.begin(), signal.end()};

  const auto X = RealFft(m).forward(signal);
  RealFft inverse(target);
  std::vector<std::complex<double>> Y(inverse.spectrum_size(), 0.0);
  if (target > m) {
    const int keep = (m - 1) / 2;  // bins strictly below the source Nyquist
    for (int k = 0; k <= keep; ++k) Y[k] = X[k];
    if (m % 2 == 0) Y[m / 2] = 0.5 * X[m / 2].real();
  } else {
    const int keep = (target - 1) / 2;
    for (int k = 0; k <= keep; ++k) Y[k] = X[k];
    if (target % 2 == 0) Y[target / 2] = 2.0 * X[target / 2].real();
  }
  Y[0] = Y[0].real();
  if (target % 2 == 0) Y[target / 2] = Y[target / 2].real();
  auto y = inverse.backward(Y);
  for (double& v : y) v /= m;
  return y;
}

}  // namespace fluxnet
