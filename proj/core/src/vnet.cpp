#include "fluxnet/vnet.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "fluxnet/error.hpp"

namespace fluxnet {
namespace {

template <class T>
using ConstMap = Eigen::Map<const RowMat<T>>;
template <class T>
using MutMap = Eigen::Map<RowMat<T>>;

int source_row(int i, int length, Padding padding) {
  if (padding == Padding::Replicate) return std::clamp(i, 0, length - 1);
  return ((i % length) + length) % length;
}

template <class T>
RowMat<T> im2col(const RowMat<T>& x, int batch, int ksize, Padding padding) {
  const int rows = static_cast<int>(x.rows());
  const int length = rows / batch;
  const int c = static_cast<int>(x.cols());
  const int half = ksize / 2;
  RowMat<T> cols(rows, static_cast<Eigen::Index>(ksize) * c);
  for (int b = 0; b < batch; ++b) {
    const T* src = x.data() + static_cast<std::ptrdiff_t>(b) * length * c;
    for (int i = 0; i < length; ++i) {
      T* dst = cols.data() + (static_cast<std::ptrdiff_t>(b) * length + i) * ksize * c;
      for (int t = 0; t < ksize; ++t) {
        const int r = source_row(i + t - half, length, padding);
        std::copy_n(src + static_cast<std::ptrdiff_t>(r) * c, c, dst + t * c);
      }
    }
  }
  return cols;
}

void col2im_add(const RowMat<double>& dcols, int batch, int ksize, int c, Padding padding,
                RowMat<double>& dx) {
  const int rows = static_cast<int>(dcols.rows());
  const int length = rows / batch;
  const int half = ksize / 2;
  for (int b = 0; b < batch; ++b) {
    double* dst = dx.data() + static_cast<std::ptrdiff_t>(b) * length * c;
    for (int i = 0; i < length; ++i) {
      const double* src = dcols.data() + (static_cast<std::ptrdiff_t>(b) * length + i) * ksize * c;
      for (int t = 0; t < ksize; ++t) {
        const int r = source_row(i + t - half, length, padding);
        double* d = dst + static_cast<std::ptrdiff_t>(r) * c;
        for (int j = 0; j < c; ++j) d[j] += src[t * c + j];
      }
    }
  }
}

template <class T>
void activate(RowMat<T>& m, Activation a) {
  if (a == Activation::Identity) return;
  T* p = m.data();
  for (Eigen::Index k = 0; k < m.size(); ++k) p[k] = softplus(p[k]);
}

// g *= act'(pre)
void activation_backward(RowMat<double>& g, const RowMat<double>& pre, Activation a) {
  if (a == Activation::Identity) return;
  double* gp = g.data();
  const double* pp = pre.data();
  for (Eigen::Index k = 0; k < g.size(); ++k) gp[k] *= softplus_grad(pp[k]);
}

template <class T>
std::span<const T> weights_of(std::span<const T> params, const LayerSpec& l) {
  return params.subspan(l.weight_offset, l.weight_count());
}
template <class T>
std::span<const T> bias_of(std::span<const T> params, const LayerSpec& l) {
  return params.subspan(l.bias_offset, l.cout);
}

// Transposed-conv kernel rearranged to cin x (2 * cout): Ku(j, t*cout + k) = K[t][j][k].
template <class T>
RowMat<T> up_matrix(std::span<const T> kernel, int cin, int cout) {
  RowMat<T> ku(cin, 2 * cout);
  for (int t = 0; t < 2; ++t)
    for (int j = 0; j < cin; ++j)
      for (int k = 0; k < cout; ++k)
        ku(j, t * cout + k) = kernel[(static_cast<std::size_t>(t) * cin + j) * cout + k];
  return ku;
}

template <class T>
RowMat<T> apply_layer(const LayerSpec& l, std::span<const T> params, const RowMat<T>& x, int batch,
                      Padding padding) {
  switch (l.kind) {
    case LayerKind::Conv:
      return conv1d<T>(x, batch, weights_of(params, l), bias_of(params, l), l.ksize, l.cout,
                       padding);
    case LayerKind::Down:
      return conv1d_down<T>(x, weights_of(params, l), bias_of(params, l), l.cout);
    case LayerKind::Up:
      return conv1d_transpose_up<T>(x, weights_of(params, l), bias_of(params, l), l.cout);
  }
  throw ConfigError("unknown layer kind");
}

// Accumulates weight/bias gradients for layer l and returns the input gradient.
RowMat<double> layer_backward(const LayerSpec& l, std::span<const double> params,
                              const RowMat<double>& x, const RowMat<double>& g, int batch,
                              Padding padding, std::span<double> grad) {
  Eigen::Map<Eigen::RowVectorXd> db(grad.data() + l.bias_offset, l.cout);
  switch (l.kind) {
    case LayerKind::Conv: {
      const RowMat<double> cols = im2col(x, batch, l.ksize, padding);
      const auto rows = static_cast<Eigen::Index>(l.ksize) * l.cin;
      ConstMap<double> W(params.data() + l.weight_offset, rows, l.cout);
      MutMap<double> dW(grad.data() + l.weight_offset, rows, l.cout);
      dW.noalias() += cols.transpose() * g;
      db += g.colwise().sum();
      const RowMat<double> dcols = g * W.transpose();
      RowMat<double> dx = RowMat<double>::Zero(x.rows(), x.cols());
      col2im_add(dcols, batch, l.ksize, l.cin, padding, dx);
      return dx;
    }
    case LayerKind::Down: {
      ConstMap<double> xr(x.data(), x.rows() / 2, 2 * x.cols());
      ConstMap<double> W(params.data() + l.weight_offset, 2 * l.cin, l.cout);
      MutMap<double> dW(grad.data() + l.weight_offset, 2 * l.cin, l.cout);
      dW.noalias() += xr.transpose() * g;
      db += g.colwise().sum();
      RowMat<double> dxr = g * W.transpose();
      return ConstMap<double>(dxr.data(), x.rows(), x.cols());
    }
    case LayerKind::Up: {
      const RowMat<double> ku = up_matrix(weights_of(params, l), l.cin, l.cout);
      ConstMap<double> gr(g.data(), g.rows() / 2, 2 * g.cols());
      const RowMat<double> dku = x.transpose() * gr;
      for (int t = 0; t < 2; ++t)
        for (int j = 0; j < l.cin; ++j)
          for (int k = 0; k < l.cout; ++k)
            grad[l.weight_offset + (static_cast<std::size_t>(t) * l.cin + j) * l.cout + k] +=
                dku(j, t * l.cout + k);
      db += g.colwise().sum();
      return gr * ku.transpose();
    }
  }
  throw ConfigError("unknown layer kind");
}

}  // namespace

void VNetConfig::validate() const {
  if (levels < 2) throw ConfigError("vnet: levels must be >= 2");
  if (depth < 1) throw ConfigError("vnet: depth must be >= 1");
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("vnet: kernel size must be odd");
  if (in_channels < 1) throw ConfigError("vnet: in_channels must be >= 1");
  const int factor = 1 << (levels - 1);
  if (window < factor || window % factor != 0)
    throw ConfigError("vnet: window must be divisible by 2^(levels-1)");
}

std::vector<LayerSpec> layer_layout(const VNetConfig& cfg) {
  cfg.validate();
  std::vector<LayerSpec> layers;
  std::size_t offset = 0;
  auto add = [&](LayerKind kind, int cin, int cout, int ksize) {
    LayerSpec l{kind, cin, cout, ksize, offset, 0};
    offset += l.weight_count();
    l.bias_offset = offset;
    offset += static_cast<std::size_t>(cout);
    layers.push_back(l);
  };
  const int d = cfg.depth;
  const int p = cfg.kernel;
  add(LayerKind::Conv, cfg.in_channels, d, p);
  add(LayerKind::Conv, d, d, p);
  for (int k = 1; k < cfg.levels; ++k) {
    const int c = d << (k - 1);
    add(LayerKind::Down, c, 2 * c, 2);
    add(LayerKind::Conv, 2 * c, 2 * c, p);
    add(LayerKind::Conv, 2 * c, 2 * c, p);
  }
  for (int k = cfg.levels - 2; k >= 0; --k) {
    const int c = d << k;
    add(LayerKind::Up, 2 * c, c, 2);
    add(LayerKind::Conv, c, c, p);
    add(LayerKind::Conv, c, c, p);
  }
  add(LayerKind::Conv, d, 1, 1);
  return layers;
}

std::size_t param_count(const VNetConfig& cfg) {
  const auto layers = layer_layout(cfg);
  return layers.back().bias_offset + static_cast<std::size_t>(layers.back().cout);
}

VNetParams init_params(const VNetConfig& cfg, std::uint64_t seed) {
  VNetParams out{cfg, std::vector<double>(param_count(cfg), 0.0)};
  std::mt19937_64 rng(seed);
  for (const LayerSpec& l : layer_layout(cfg)) {
    auto w = std::span<double>(out.values).subspan(l.weight_offset, l.weight_count());
    if (l.kind == LayerKind::Up) {
      std::fill(w.begin(), w.end(), 1.0 / l.cin);
      continue;
    }
    const double a = std::sqrt(1.0 / (static_cast<double>(l.ksize) * l.cin));
    std::uniform_real_distribution<double> dist(-a, a);
    for (double& v : w) v = dist(rng);
  }
  return out;
}

template <class T>
T softplus(T x) {
  return std::max(x, T(0)) + std::log1p(std::exp(-std::abs(x)));
}

template <class T>
T softplus_grad(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <class T>
RowMat<T> conv1d(const RowMat<T>& x, int batch, std::span<const T> kernel, std::span<const T> bias,
                 int ksize, int cout, Padding padding) {
  const auto cin = x.cols();
  if (batch < 1 || x.rows() % batch != 0) throw ConfigError("conv1d: rows not divisible by batch");
  if (ksize % 2 == 0) throw ConfigError("conv1d: kernel size must be odd");
  if (kernel.size() != static_cast<std::size_t>(ksize * cin * cout) ||
      bias.size() != static_cast<std::size_t>(cout))
    throw ConfigError("conv1d: kernel or bias shape mismatch");
  ConstMap<T> W(kernel.data(), ksize * cin, cout);
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias.data(), cout);
  RowMat<T> y;
  if (ksize == 1) {
    y.noalias() = x * W;
  } else {
    const RowMat<T> cols = im2col(x, batch, ksize, padding);
    y.noalias() = cols * W;
  }
  y.rowwise() += b;
  return y;
}

template <class T>
RowMat<T> conv1d_down(const RowMat<T>& x, std::span<const T> kernel, std::span<const T> bias,
                      int cout) {
  const auto cin = x.cols();
  if (x.rows() % 2 != 0) throw ConfigError("conv1d_down: odd length");
  if (kernel.size() != static_cast<std::size_t>(2 * cin * cout) ||
      bias.size() != static_cast<std::size_t>(cout))
    throw ConfigError("conv1d_down: kernel or bias shape mismatch");
  ConstMap<T> xr(x.data(), x.rows() / 2, 2 * cin);
  ConstMap<T> W(kernel.data(), 2 * cin, cout);
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias.data(), cout);
  RowMat<T> y = xr * W;
  y.rowwise() += b;
  return y;
}

template <class T>
RowMat<T> conv1d_transpose_up(const RowMat<T>& x, std::span<const T> kernel,
                              std::span<const T> bias, int cout) {
  const auto cin = static_cast<int>(x.cols());
  if (kernel.size() != static_cast<std::size_t>(2 * cin * cout) ||
      bias.size() != static_cast<std::size_t>(cout))
    throw ConfigError("conv1d_transpose_up: kernel or bias shape mismatch");
  const RowMat<T> ku = up_matrix(kernel, cin, cout);
  RowMat<T> wide = x * ku;
  RowMat<T> y = ConstMap<T>(wide.data(), 2 * x.rows(), cout);
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias.data(), cout);
  y.rowwise() += b;
  return y;
}

// Eigen's product kernels peel differently depending on pointer alignment, so
// parameters are copied to aligned storage to keep results reproducible.
namespace {

template <class T>
using AlignedVec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <class T>
AlignedVec<T> aligned_copy(std::span<const T> v) {
  return Eigen::Map<const AlignedVec<T>>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

template <class T>
RowMat<T> forward(const VNetConfig& cfg, std::span<const T> raw_params, const RowMat<T>& X,
                  int batch, ForwardCache<T>* cache) {
  const auto layers = layer_layout(cfg);
  if (raw_params.size() != param_count(cfg))
    throw ConfigError("vnet forward: wrong parameter count");
  const AlignedVec<T> stored = aligned_copy(raw_params);
  const std::span<const T> params(stored.data(), raw_params.size());
  if (batch < 1 || X.rows() != static_cast<Eigen::Index>(batch) * cfg.window ||
      X.cols() != cfg.in_channels)
    throw ConfigError("vnet forward: input shape does not match config");
  if (cache) {
    cache->batch = batch;
    cache->layer_input.assign(layers.size(), {});
    cache->layer_output.assign(layers.size(), {});
  }
  std::size_t li = 0;
  auto run = [&](const RowMat<T>& in) {
    RowMat<T> out = apply_layer<T>(layers[li], params, in, batch, cfg.padding);
    if (cache) {
      cache->layer_input[li] = in;
      cache->layer_output[li] = out;
    }
    ++li;
    return out;
  };
  auto act = [&](RowMat<T> m) {
    activate(m, cfg.activation);
    return m;
  };

  std::vector<RowMat<T>> level(cfg.levels);
  RowMat<T> h = act(run(X));
  h = act(run(h));
  level[0] = h;
  for (int k = 1; k < cfg.levels; ++k) {
    RowMat<T> z = run(level[k - 1]);
    RowMat<T> a = act(run(z));
    level[k] = act(run(a)) + z;
  }
  h = level[cfg.levels - 1];
  for (int k = cfg.levels - 2; k >= 0; --k) {
    RowMat<T> z = run(h) + level[k];
    RowMat<T> a = act(run(z));
    h = act(run(a)) + z;
  }
  return run(h);
}

void backward(const VNetConfig& cfg, std::span<const double> raw_params,
              const ForwardCache<double>& cache, const RowMat<double>& dY,
              std::span<double> grad_out, RowMat<double>* dX) {
  const auto layers = layer_layout(cfg);
  if (raw_params.size() != param_count(cfg) || grad_out.size() != raw_params.size())
    throw ConfigError("vnet backward: parameter/gradient length mismatch");
  const AlignedVec<double> stored = aligned_copy(raw_params);
  const std::span<const double> params(stored.data(), raw_params.size());
  AlignedVec<double> grad_store(static_cast<Eigen::Index>(raw_params.size()));
  const std::span<double> grad(grad_store.data(), raw_params.size());
  if (cache.layer_input.size() != layers.size())
    throw ConfigError("vnet backward: cache does not match config");
  if (dY.rows() != cache.layer_output.back().rows() || dY.cols() != 1)
    throw ConfigError("vnet backward: dY shape mismatch");
  std::fill(grad.begin(), grad.end(), 0.0);
  const int batch = cache.batch;
  std::size_t li = layers.size();
  auto back = [&](const RowMat<double>& g) {
    --li;
    return layer_backward(layers[li], params, cache.layer_input[li], g, batch, cfg.padding, grad);
  };
  auto through_act = [&](RowMat<double> g, std::size_t layer) {
    activation_backward(g, cache.layer_output[layer], cfg.activation);
    return g;
  };

  const int L = cfg.levels;
  std::vector<RowMat<double>> g_level(L);
  RowMat<double> g = back(dY);
  // Ascents in reverse: level k = 0 .. L-2.
  for (int k = 0; k <= L - 2; ++k) {
    RowMat<double> g_z = g;
    RowMat<double> gs = back(through_act(g, li - 1));
    g_z += back(through_act(gs, li - 1));
    g_level[k] = g_z;
    g = back(g_z);
  }
  // g now holds the gradient w.r.t. the deepest level output.
  for (int k = L - 1; k >= 1; --k) {
    RowMat<double> g_z = g;
    RowMat<double> gs = back(through_act(g, li - 1));
    g_z += back(through_act(gs, li - 1));
    g = back(g_z) + g_level[k - 1];
  }
  RowMat<double> gs = back(through_act(g, li - 1));
  RowMat<double> gx = back(through_act(gs, li - 1));
  if (li != 0) throw ConfigError("vnet backward: layer bookkeeping error");
  std::copy(grad.begin(), grad.end(), grad_out.begin());
  if (dX) *dX = std::move(gx);
}

RowMat<double> stack_windows(std::span<const Signal> windows) {
  if (windows.empty()) throw ConfigError("stack_windows: no windows");
  const int n = windows.front().length;
  const int c = windows.front().channels;
  RowMat<double> X(static_cast<Eigen::Index>(windows.size()) * n, c);
  for (std::size_t b = 0; b < windows.size(); ++b) {
    if (windows[b].length != n || windows[b].channels != c)
      throw ConfigError("stack_windows: inconsistent window shapes");
    std::copy(windows[b].data.begin(), windows[b].data.end(),
              X.data() + static_cast<std::ptrdiff_t>(b) * n * c);
  }
  return X;
}

std::vector<std::vector<double>> predict_windows(const VNetParams& params,
                                                 std::span<const Signal> windows,
                                                 Precision precision, int chunk) {
  const VNetConfig& cfg = params.config;
  const int n = cfg.window;
  std::vector<std::vector<double>> out;
  out.reserve(windows.size());
  std::vector<float> single;
  if (precision == Precision::Single)
    single.assign(params.values.begin(), params.values.end());
  chunk = std::max(1, chunk);
  for (std::size_t start = 0; start < windows.size(); start += chunk) {
    const std::size_t count = std::min<std::size_t>(chunk, windows.size() - start);
    const RowMat<double> X = stack_windows(windows.subspan(start, count));
    if (precision == Precision::Double) {
      const RowMat<double> Y =
          forward<double>(cfg, params.values, X, static_cast<int>(count), nullptr);
      for (std::size_t b = 0; b < count; ++b)
        out.emplace_back(Y.data() + b * n, Y.data() + (b + 1) * n);
    } else {
      const RowMat<float> Xf = X.cast<float>();
      const RowMat<float> Y = forward<float>(cfg, single, Xf, static_cast<int>(count), nullptr);
      for (std::size_t b = 0; b < count; ++b)
        out.emplace_back(Y.data() + b * n, Y.data() + (b + 1) * n);
    }
  }
  return out;
}

template float softplus<float>(float);
template double softplus<double>(double);
template float softplus_grad<float>(float);
template double softplus_grad<double>(double);
template RowMat<float> conv1d<float>(const RowMat<float>&, int, std::span<const float>,
                                     std::span<const float>, int, int, Padding);
template RowMat<double> conv1d<double>(const RowMat<double>&, int, std::span<const double>,
                                       std::span<const double>, int, int, Padding);
template RowMat<float> conv1d_down<float>(const RowMat<float>&, std::span<const float>,
                                          std::span<const float>, int);
template RowMat<double> conv1d_down<double>(const RowMat<double>&, std::span<const double>,
                                            std::span<const double>, int);
template RowMat<float> conv1d_transpose_up<float>(const RowMat<float>&, std::span<const float>,
                                                  std::span<const float>, int);
template RowMat<double> conv1d_transpose_up<double>(const RowMat<double>&,
                                                    std::span<const double>,
                                                    std::span<const double>, int);
template RowMat<float> forward<float>(const VNetConfig&, std::span<const float>,
                                      const RowMat<float>&, int, ForwardCache<float>*);
template RowMat<double> forward<double>(const VNetConfig&, std::span<const double>,
                                        const RowMat<double>&, int, ForwardCache<double>*);

}  // namespace fluxnet
