#include "fluxnet/closures.hpp"

#include <cmath>

#include "fluxnet/error.hpp"

namespace fluxnet {

Closure zero_closure() {
  return {ClosureKind::Zero,
          [](const ClosureArgs& a) { return std::vector<double>(a.rho.size(), 0.0); }, "euler"};
}

std::vector<double> navier_stokes_heat_flux(double eps, std::span<const double> rho,
                                            std::span<const double> T, double dx) {
  const auto n = rho.size();
  if (T.size() != n) throw ConfigError("navier_stokes_heat_flux: length mismatch");
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double dT = (T[(i + 1) % n] - T[(i + n - 1) % n]) / (2.0 * dx);
    q[i] = -1.5 * eps * rho[i] * T[i] * dT;
  }
  return q;
}

Closure navier_stokes_closure() {
  return {ClosureKind::NavierStokes,
          [](const ClosureArgs& a) { return navier_stokes_heat_flux(a.eps, a.rho, a.T, a.dx); },
          "navier-stokes"};
}

KineticCoupling::KineticCoupling(KineticState init, double eps, const PhaseGrid& grid,
                                 KineticOptions options)
    : sim_(std::move(init), eps, grid, options), prev_time_(sim_.time()) {
  cur_q_ = sim_.snapshot().moments.q;
  prev_q_ = cur_q_;
}

std::vector<double> KineticCoupling::heat_flux_at(double t) {
  if (t < prev_time_) throw ConfigError("KineticCoupling: time went backwards");
  while (sim_.time() < t) {
    const auto rho = compute_moments(sim_.state(), sim_.grid()).rho;
    const auto field = solve_poisson(rho, sim_.grid().dx(), sim_.options().poisson_sign);
    prev_time_ = sim_.time();
    prev_q_ = std::move(cur_q_);
    sim_.step(stable_dt(field.E, sim_.grid(), sim_.options().safety));
    cur_q_ = sim_.snapshot().moments.q;
  }
  if (t == sim_.time()) return cur_q_;
  const double w = (t - prev_time_) / (sim_.time() - prev_time_);
  std::vector<double> q(cur_q_.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = (1.0 - w) * prev_q_[i] + w * cur_q_[i];
  return q;
}

Closure kinetic_closure(std::shared_ptr<KineticCoupling> coupling) {
  if (!coupling) throw ConfigError("kinetic_closure: no coupling");
  return {ClosureKind::Kinetic,
          [coupling](const ClosureArgs& a) {
            auto q = coupling->heat_flux_at(a.time);
            if (q.size() != a.rho.size()) q = fourier_resample(q, static_cast<int>(a.rho.size()));
            return q;
          },
          "kinetic"};
}

void NeuralClosureConfig::validate() const {
  pipeline.validate();
  if (!predictor) {
    model.config.validate();
    if (model.values.size() != param_count(model.config))
      throw ConfigError("neural closure: parameter count does not match the network config");
    if (model.config.window != pipeline.window_size)
      throw ConfigError("neural closure: network window differs from pipeline window_size");
    if (model.config.in_channels != kInputChannels)
      throw ConfigError("neural closure: network must take 4 input channels");
  }
}

std::vector<std::vector<double>> neural_heat_flux_sweep(const NeuralClosureConfig& cfg, double eps,
                                                        std::span<const double> rho,
                                                        std::span<const double> u,
                                                        std::span<const double> T, double dx,
                                                        std::span<const double> sigmas) {
  const int m = static_cast<int>(rho.size());
  if (m < 4 || static_cast<int>(u.size()) != m || static_cast<int>(T.size()) != m)
    throw ConfigError("neural_heat_flux: inputs must share a length >= 4");
  const int target = cfg.pipeline.training_resolution;
  const bool resample = cfg.resample && m != target;

  std::vector<double> r, v, t;
  if (resample) {
    r = fourier_resample(rho, target);
    v = fourier_resample(u, target);
    t = fourier_resample(T, target);
  } else {
    r.assign(rho.begin(), rho.end());
    v.assign(u.begin(), u.end());
    t.assign(T.begin(), T.end());
  }
  const int len = static_cast<int>(r.size());
  const double work_dx = dx * m / len;

  const Signal inputs = standardize(assemble_inputs(eps, r, v, t), cfg.stats);
  const WindowSet ws = slice_predict(inputs, cfg.pipeline);
  const auto predictions =
      cfg.predictor ? cfg.predictor(ws.windows)
                    : predict_windows(cfg.model, ws.windows, cfg.precision);
  const double q_ns = compute_qns_scale(eps, r, t, work_dx);
  const std::vector<double> raw =
      ns_denormalize(reconstruct(ws, predictions), q_ns, cfg.pipeline.norm_threshold);

  std::vector<std::vector<double>> out;
  out.reserve(sigmas.size());
  for (double sigma : sigmas) {
    std::vector<double> q = gaussian_smooth(raw, sigma, work_dx);
    if (resample) q = fourier_resample(q, m);
    for (double x : q)
      if (!std::isfinite(x)) throw NumericalError("neural closure produced a non-finite heat flux");
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<double> neural_heat_flux(const NeuralClosureConfig& cfg, double eps,
                                     std::span<const double> rho, std::span<const double> u,
                                     std::span<const double> T, double dx) {
  const double sigma = cfg.pipeline.smoothing_sigma;
  return std::move(neural_heat_flux_sweep(cfg, eps, rho, u, T, dx, {&sigma, 1}).front());
}

Closure neural_closure(std::shared_ptr<const NeuralClosureConfig> cfg) {
  if (!cfg) throw ConfigError("neural_closure: no configuration");
  cfg->validate();
  return {ClosureKind::Neural,
          [cfg](const ClosureArgs& a) { return neural_heat_flux(*cfg, a.eps, a.rho, a.u, a.T, a.dx); },
          "network"};
}

}  // namespace fluxnet
