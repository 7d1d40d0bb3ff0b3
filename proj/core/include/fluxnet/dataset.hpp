#pragma once

#include <cstdint>
#include <vector>

namespace fluxnet {

struct Provenance {
  std::int64_t run_id = 0;
  double time = 0.0;
  std::uint64_t seed = 0;
};

/// One labelled sample: the Knudsen number and the moment profiles at one
/// recorded time. eps is stored as a scalar; the constant input channel is
/// built when the network inputs are assembled.
struct DatasetEntry {
  double eps = 0.0;
  std::vector<double> rho, u, T, q;
  Provenance provenance;

  int size() const noexcept { return static_cast<int>(rho.size()); }
};

using Dataset = std::vector<DatasetEntry>;

}  // namespace fluxnet
