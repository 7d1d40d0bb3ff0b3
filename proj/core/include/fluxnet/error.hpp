#pragma once

#include <stdexcept>
#include <string>

namespace fluxnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or arguments (shape mismatch, out-of-range settings).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Loss of realizability or non-finite values inside a numerical routine.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A time integration stopped before reaching its final time.
class SimulationAborted : public NumericalError {
 public:
  SimulationAborted(const std::string& what, double time_reached)
      : NumericalError(what + " (t = " + std::to_string(time_reached) + ")"),
        time_reached_(time_reached) {}

  double time_reached() const noexcept { return time_reached_; }

 private:
  double time_reached_;
};

/// File could not be read, written or decoded.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fluxnet
