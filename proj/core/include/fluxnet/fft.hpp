#pragma once

#include <complex>
#include <span>
#include <vector>

namespace fluxnet {

// Thin wrapper over FFTW's real-to-complex transforms. Plans are cached per
// length; the transforms are unnormalized (backward(forward(x)) == n * x).
class RealFft {
 public:
  explicit RealFft(int n);

  int size() const noexcept { return n_; }
  int spectrum_size() const noexcept { return n_ / 2 + 1; }

  std::vector<std::complex<double>> forward(std::span<const double> x) const;
  std::vector<double> backward(std::span<const std::complex<double>> spectrum) const;

 private:
  int n_;
};

}  // namespace fluxnet
