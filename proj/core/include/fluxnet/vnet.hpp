#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fluxnet/processing.hpp"

namespace fluxnet {

enum class Activation { Softplus, Identity };
enum class Padding { Replicate, Periodic };

struct VNetConfig {
  int window = 512;
  int levels = 5;
  int depth = 4;
  int kernel = 11;
  int in_channels = 4;
  Activation activation = Activation::Softplus;
  Padding padding = Padding::Replicate;

  void validate() const;
};

enum class LayerKind { Conv, Down, Up };

/// One convolution in canonical parameter order. Weights are stored
/// [tap][in channel][out channel], followed by the bias block elsewhere in
/// the flat vector.
struct LayerSpec {
  LayerKind kind = LayerKind::Conv;
  int cin = 0;
  int cout = 0;
  int ksize = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;

  std::size_t weight_count() const {
    return static_cast<std::size_t>(ksize) * cin * cout;
  }
};

/// Layers in canonical order: two init convs; per descent (down, conv, conv);
/// per ascent (up, conv, conv); the kernel-1 output conv.
std::vector<LayerSpec> layer_layout(const VNetConfig& cfg);
std::size_t param_count(const VNetConfig& cfg);

struct VNetParams {
  VNetConfig config;
  std::vector<double> values;
};

/// Uniform(-a, a) with a = sqrt(1 / (ksize * cin)) for ordinary and strided
/// convs, constant 1/cin for transposed convs, zero biases.
VNetParams init_params(const VNetConfig& cfg, std::uint64_t seed);

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Building blocks. Activations are (batch * length) x channels, samples
// stacked along rows.
template <class T>
T softplus(T x);
template <class T>
T softplus_grad(T x);

template <class T>
RowMat<T> conv1d(const RowMat<T>& x, int batch, std::span<const T> kernel, std::span<const T> bias,
                 int ksize, int cout, Padding padding = Padding::Replicate);
template <class T>
RowMat<T> conv1d_down(const RowMat<T>& x, std::span<const T> kernel, std::span<const T> bias,
                      int cout);
template <class T>
RowMat<T> conv1d_transpose_up(const RowMat<T>& x, std::span<const T> kernel,
                              std::span<const T> bias, int cout);

/// Everything backward() needs from a forward evaluation.
template <class T>
struct ForwardCache {
  int batch = 0;
  std::vector<RowMat<T>> layer_input;   // indexed like layer_layout
  std::vector<RowMat<T>> layer_output;  // raw conv outputs before activation
};

/// X is (batch * window) x in_channels; returns (batch * window) x 1.
template <class T>
RowMat<T> forward(const VNetConfig& cfg, std::span<const T> params, const RowMat<T>& X, int batch,
                  ForwardCache<T>* cache = nullptr);

/// Reverse-mode gradient of sum(Y .* dY). Writes parameter gradients into
/// `grad` (overwritten, length param_count) and optionally the input gradient.
void backward(const VNetConfig& cfg, std::span<const double> params,
              const ForwardCache<double>& cache, const RowMat<double>& dY, std::span<double> grad,
              RowMat<double>* dX = nullptr);

enum class Precision { Double, Single };

/// Runs the network on standardized windows, in chunks of `chunk` windows.
std::vector<std::vector<double>> predict_windows(const VNetParams& params,
                                                 std::span<const Signal> windows,
                                                 Precision precision = Precision::Double,
                                                 int chunk = 16);

/// Stacks windows into a network input matrix.
RowMat<double> stack_windows(std::span<const Signal> windows);

}  // namespace fluxnet
