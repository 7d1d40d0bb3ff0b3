#include "fluxnet/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

#include "fluxnet/error.hpp"

namespace fluxnet {
namespace {

struct PlanPair {
  int n = 0;
  double* real = nullptr;
  fftw_complex* cplx = nullptr;
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;

  explicit PlanPair(int size) : n(size) {
    real = fftw_alloc_real(static_cast<size_t>(n));
    cplx = fftw_alloc_complex(static_cast<size_t>(n / 2 + 1));
    r2c = fftw_plan_dft_r2c_1d(n, real, cplx, FFTW_ESTIMATE);
    c2r = fftw_plan_dft_c2r_1d(n, cplx, real, FFTW_ESTIMATE);
  }
  ~PlanPair() {
    fftw_destroy_plan(r2c);
    fftw_destroy_plan(c2r);
    fftw_free(real);
    fftw_free(cplx);
  }
  PlanPair(const PlanPair&) = delete;
  PlanPair& operator=(const PlanPair&) = delete;
};

// FFTW's planner is not reentrant; executions through a shared plan reuse its
// buffers, so the whole transform runs under the lock.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

PlanPair& plan_for(int n) {
  static std::map<int, std::unique_ptr<PlanPair>> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, std::make_unique<PlanPair>(n)).first;
  return *it->second;
}

}  // namespace

RealFft::RealFft(int n) : n_(n) {
  if (n < 1) throw ConfigError("RealFft: length must be positive");
}

std::vector<std::complex<double>> RealFft::forward(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != n_) throw ConfigError("RealFft::forward: length mismatch");
  std::lock_guard lock(plan_mutex());
  PlanPair& p = plan_for(n_);
  std::copy(x.begin(), x.end(), p.real);
  fftw_execute(p.r2c);
  std::vector<std::complex<double>> out(static_cast<size_t>(spectrum_size()));
  for (int k = 0; k < spectrum_size(); ++k) out[k] = {p.cplx[k][0], p.cplx[k][1]};
  return out;
}

std::vector<double> RealFft::backward(std::span<const std::complex<double>> spectrum) const {
  if (static_cast<int>(spectrum.size()) != spectrum_size())
    throw ConfigError("RealFft::backward: spectrum length mismatch");
  std::lock_guard lock(plan_mutex());
  PlanPair& p = plan_for(n_);
  for (int k = 0; k < spectrum_size(); ++k) {
    p.cplx[k][0] = spectrum[k].real();
    p.cplx[k][1] = spectrum[k].imag();
  }
  fftw_execute(p.c2r);
  return std::vector<double>(p.real, p.real + n_);
}

}  // namespace fluxnet
