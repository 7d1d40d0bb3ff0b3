#include "fluxnet/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <optional>

#include "fluxnet/error.hpp"
#include "fluxnet/parallel.hpp"

namespace fluxnet {

void GenConfig::validate() const {
  if (n_eps < 1 || inits_per_eps < 1 || times_per_run < 1)
    throw ConfigError("datagen: counts must be >= 1");
  if (!(eps_min > 0.0) || !(eps_max >= eps_min)) throw ConfigError("datagen: invalid eps range");
  if (!(t_min >= 0.0) || !(t_max >= t_min)) throw ConfigError("datagen: invalid time window");
  if (n_modes < 1) throw ConfigError("datagen: n_modes must be >= 1");
  if (!(mach_min > 0.0) || !(mach_max >= mach_min)) throw ConfigError("datagen: invalid Mach range");
  if (max_rejections < 1) throw ConfigError("datagen: max_rejections must be >= 1");
  phase_grid();
}

std::vector<double> fourier_series(double a0_half, double alpha, std::span<const double> a,
                                   std::span<const double> b, int points, double length) {
  if (a.size() != b.size()) throw ConfigError("fourier_series: coefficient length mismatch");
  std::vector<double> out(points);
  const double k = 2.0 * std::numbers::pi / length;
  for (int i = 0; i < points; ++i) {
    const double x = i * length / points;
    double s = 0.0;
    for (std::size_t n = 1; n <= a.size(); ++n)
      s += a[n - 1] * std::cos(n * k * x) + b[n - 1] * std::sin(n * k * x);
    out[i] = alpha * (a0_half + 0.5 * s);
  }
  return out;
}

std::vector<double> random_fourier(std::mt19937_64& rng, double a0_half, double alpha, int n_modes,
                                   int points, double length) {
  if (n_modes < 1) throw ConfigError("random_fourier: n_modes must be >= 1");
  std::vector<double> a(n_modes), b(n_modes);
  for (int n = 1; n <= n_modes; ++n) {
    std::uniform_real_distribution<double> dist(-1.0 / n, 1.0 / n);
    a[n - 1] = dist(rng);
    b[n - 1] = dist(rng);
  }
  return fourier_series(a0_half, alpha, a, b, points, length);
}

double max_mach(std::span<const double> u, std::span<const double> T) {
  double m = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) m = std::max(m, std::abs(u[i]) / std::sqrt(2.0 * T[i]));
  return m;
}

namespace {

std::vector<double> positive_draw(std::mt19937_64& rng, const GenConfig& cfg, double alpha,
                                  const char* what) {
  for (int attempt = 0; attempt < cfg.max_rejections; ++attempt) {
    auto f = random_fourier(rng, 1.0, alpha, cfg.n_modes, cfg.resolution, cfg.length);
    if (*std::min_element(f.begin(), f.end()) > 0.0) return f;
  }
  throw NumericalError(std::string("random_initial_condition: no positive ") + what +
                       " after the rejection cap");
}

}  // namespace

InitialCondition random_initial_condition(std::mt19937_64& rng, const GenConfig& cfg) {
  InitialCondition ic;
  ic.rho = positive_draw(rng, cfg, 1.0, "density");
  std::uniform_real_distribution<double> t_alpha(0.1, 1.0);
  ic.T = positive_draw(rng, cfg, t_alpha(rng), "temperature");

  std::uniform_real_distribution<double> mean_u(-1.0, 1.0);
  std::uniform_real_distribution<double> log_mach(std::log(cfg.mach_min), std::log(cfg.mach_max));
  for (int attempt = 0; attempt < cfg.max_rejections; ++attempt) {
    auto u = random_fourier(rng, mean_u(rng), 1.0, cfg.n_modes, cfg.resolution, cfg.length);
    const double base = max_mach(u, ic.T);
    if (!(base > 0.0)) continue;
    ic.mach_target = std::exp(log_mach(rng));
    const double alpha = ic.mach_target / base;
    for (double& v : u) v *= alpha;
    ic.u = std::move(u);
    return ic;
  }
  throw NumericalError("random_initial_condition: velocity profile vanished");
}

std::vector<double> sample_knudsen(const GenConfig& cfg) {
  if (cfg.eps_sampling == EpsSampling::Random) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      0x6b6e7564u};
    std::mt19937_64 rng(seq);
    return sample_knudsen(cfg, rng);
  }
  const double lo = std::sqrt(cfg.eps_min);
  const double hi = std::sqrt(cfg.eps_max);
  std::vector<double> eps(cfg.n_eps);
  for (int k = 0; k < cfg.n_eps; ++k) {
    const double s = cfg.n_eps == 1 ? lo : lo + (static_cast<double>(k) / (cfg.n_eps - 1)) * (hi - lo);
    eps[k] = s * s;
  }
  eps.front() = cfg.eps_min;
  if (cfg.n_eps > 1) eps.back() = cfg.eps_max;
  return eps;
}

std::vector<double> sample_knudsen(const GenConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(std::sqrt(cfg.eps_min), std::sqrt(cfg.eps_max));
  std::vector<double> eps(cfg.n_eps);
  for (double& e : eps) {
    const double s = dist(rng);
    e = std::clamp(s * s, cfg.eps_min, cfg.eps_max);
  }
  return eps;
}

std::vector<double> sample_record_times(std::mt19937_64& rng, const GenConfig& cfg) {
  std::uniform_real_distribution<double> dist(cfg.t_min, cfg.t_max);
  std::vector<double> t(cfg.times_per_run);
  for (double& v : t) v = dist(rng);
  std::sort(t.begin(), t.end());
  return t;
}

double discontinuity_multiplier(double x_d, double c, double x) {
  const double slope = c / std::numbers::pi * (x - x_d);
  return x < x_d ? slope + (1.0 + c) : slope + (1.0 - c);
}

std::vector<double> discontinuity_profile(double x_d, double c, int points, double length) {
  std::vector<double> out(points);
  // The multiplier is defined on [0, 2 pi]; other lengths are mapped onto it.
  const double scale = 2.0 * std::numbers::pi / length;
  for (int i = 0; i < points; ++i) out[i] = discontinuity_multiplier(x_d, c, i * length / points * scale);
  return out;
}

void add_random_discontinuities(std::mt19937_64& rng, InitialCondition& ic, double max_amplitude,
                                double length) {
  if (!(max_amplitude >= 0.0 && max_amplitude <= 1.0))
    throw ConfigError("add_random_discontinuities: amplitude must be in [0, 1]");
  std::uniform_real_distribution<double> where(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> amp(-max_amplitude, max_amplitude);
  for (auto* f : {&ic.rho, &ic.u, &ic.T}) {
    const double x_d = where(rng);
    const double c = amp(rng);
    const auto m = discontinuity_profile(x_d, c, static_cast<int>(f->size()), length);
    for (std::size_t i = 0; i < f->size(); ++i) (*f)[i] *= m[i];
  }
}

std::mt19937_64 run_rng(std::uint64_t seed, std::uint64_t eps_index, std::uint64_t init_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(eps_index), static_cast<std::uint32_t>(init_index)};
  return std::mt19937_64(seq);
}

GenReport generate_dataset(const GenConfig& cfg, const GenProgress& progress) {
  cfg.validate();
  const PhaseGrid grid = cfg.phase_grid();
  const std::vector<double> eps = sample_knudsen(cfg);
  const int total = cfg.n_eps * cfg.inits_per_eps;

  std::vector<std::optional<Dataset>> per_run(total);
  std::vector<std::string> errors(total);
  std::mutex progress_mutex;
  int done = 0;

  parallel_for(static_cast<std::size_t>(total), cfg.threads, [&](std::size_t r) {
    const int k = static_cast<int>(r) / cfg.inits_per_eps;
    const int j = static_cast<int>(r) % cfg.inits_per_eps;
    bool ok = true;
    try {
      auto rng = run_rng(cfg.seed, k, j);
      const InitialCondition ic = random_initial_condition(rng, cfg);
      const auto times = sample_record_times(rng, cfg);
      const KineticState init = maxwellian(ic.rho, ic.u, ic.T, grid);
      const auto snaps = run_kinetic(init, eps[k], times, grid, {cfg.kinetic_safety, {}});
      Dataset run_entries;
      for (const auto& s : snaps) {
        DatasetEntry e;
        e.eps = eps[k];
        e.rho = s.moments.rho;
        e.u = s.moments.u;
        e.T = s.moments.T;
        e.q = s.moments.q;
        e.provenance = {static_cast<std::int64_t>(r), s.time, cfg.seed};
        for (int i = 0; i < e.size(); ++i)
          if (!(e.rho[i] > 0.0) || !(e.T[i] > 0.0) || !std::isfinite(e.q[i]) ||
              !std::isfinite(e.u[i]))
            throw NumericalError("invalid moments in recorded entry");
        run_entries.push_back(std::move(e));
      }
      per_run[r] = std::move(run_entries);
    } catch (const Error& e) {
      ok = false;
      errors[r] = "run " + std::to_string(r) + " (eps=" + std::to_string(eps[k]) + "): " + e.what();
    }
    if (progress) {
      std::lock_guard lock(progress_mutex);
      progress(++done, total, ok);
    }
  });

  GenReport report;
  report.runs = total;
  for (int r = 0; r < total; ++r) {
    if (!per_run[r]) {
      ++report.failed_runs;
      report.failures.push_back(errors[r]);
      continue;
    }
    for (auto& e : *per_run[r]) report.entries.push_back(std::move(e));
  }
  return report;
}

}  // namespace fluxnet
