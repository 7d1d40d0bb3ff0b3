#include "fluxnet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fluxnet/error.hpp"
#include "fluxnet/parallel.hpp"
#include "fluxnet/processing.hpp"

namespace fluxnet {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double entry_dx(const DatasetEntry& e, const PipelineConfig& p) {
  return p.domain_length / e.size();
}

void check_indices(std::span<const DatasetEntry> dataset, std::span<const std::size_t> indices) {
  for (std::size_t i : indices)
    if (i >= dataset.size()) throw ConfigError("evaluation: entry index out of range");
}

ModelRun run_fluid_model(ModelTag tag, const FluidState& init, const Closure& closure, double eps,
                         const CompareConfig& cfg) {
  ModelRun run;
  run.model = tag;
  try {
    const auto records = run_fluid(init, closure, eps, cfg.t_end, cfg.record_dt, cfg.fluid);
    for (const auto& r : records) {
      run.times.push_back(r.time);
      run.energy.push_back(electric_energy(r.E, init.grid.dx()));
    }
    run.completed = true;
    run.time_reached = cfg.t_end;
  } catch (const SimulationAborted& e) {
    run.failure = e.what();
    run.time_reached = e.time_reached();
  }
  return run;
}

}  // namespace

std::string_view model_tag_name(ModelTag tag) {
  switch (tag) {
    case ModelTag::Kinetic: return "Kinetic";
    case ModelTag::FluidKinetic: return "Fluid+Kinetic";
    case ModelTag::FluidNetwork: return "Fluid+Network";
    case ModelTag::NavierStokes: return "Navier-Stokes";
    case ModelTag::FluidEuler: return "Fluid+Euler";
    case ModelTag::NSEstimate: return "NS-estimate";
    case ModelTag::NNEstimate: return "NN-estimate";
  }
  return "unknown";
}

bool ErrorRecord::defined() const { return !failed && std::isfinite(value); }

std::optional<double> rel_l2(std::span<const double> q, std::span<const double> qhat) {
  if (q.size() != qhat.size()) throw ConfigError("rel_l2: length mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    num += (q[i] - qhat[i]) * (q[i] - qhat[i]);
    den += q[i] * q[i];
  }
  if (!(den > 0.0)) return std::nullopt;
  return std::sqrt(num / den);
}

double electric_energy(std::span<const double> E, double dx) {
  double s = 0.0;
  for (double e : E) s += e * e;
  return dx * s;
}

std::optional<double> log_energy_rel_error(std::span<const double> model_energy,
                                           std::span<const double> kinetic_energy) {
  if (model_energy.size() != kinetic_energy.size())
    throw ConfigError("log_energy_rel_error: trajectories differ in length");
  std::vector<double> lm(model_energy.size()), lk(kinetic_energy.size());
  for (std::size_t i = 0; i < lm.size(); ++i) {
    if (!(model_energy[i] > 0.0) || !(kinetic_energy[i] > 0.0)) return std::nullopt;
    lm[i] = std::log(model_energy[i]);
    lk[i] = std::log(kinetic_energy[i]);
  }
  return rel_l2(lk, lm);
}

double percentile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) return kNaN;
  const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

Summary summarize(std::span<const double> values) {
  Summary s;
  std::vector<double> v;
  v.reserve(values.size());
  for (double x : values) {
    if (std::isnan(x))
      ++s.undefined;
    else
      v.push_back(x);
  }
  s.count = v.size();
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  s.median = percentile_sorted(v, 0.5);
  s.q1 = percentile_sorted(v, 0.25);
  s.q3 = percentile_sorted(v, 0.75);
  s.min = v.front();
  s.max = v.back();
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  return s;
}

std::vector<Bin> uniform_bins(std::span<const double> key, std::span<const double> values,
                              int bins, double lo, double hi) {
  if (key.size() != values.size()) throw ConfigError("uniform_bins: length mismatch");
  if (bins < 1 || !(hi > lo)) throw ConfigError("uniform_bins: need bins >= 1 and hi > lo");
  std::vector<std::vector<double>> members(bins);
  const double width = (hi - lo) / bins;
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (key[i] < lo || key[i] > hi) continue;
    const int b = std::min(bins - 1, static_cast<int>((key[i] - lo) / width));
    members[b].push_back(values[i]);
  }
  std::vector<Bin> out(bins);
  for (int b = 0; b < bins; ++b) {
    out[b].lo = lo + b * width;
    out[b].hi = lo + (b + 1) * width;
    out[b].summary = summarize(members[b]);
  }
  return out;
}

std::vector<Bin> quantile_groups(std::span<const double> key, std::span<const double> values,
                                 int groups) {
  if (key.size() != values.size()) throw ConfigError("quantile_groups: length mismatch");
  if (groups < 1 || key.size() < static_cast<std::size_t>(groups))
    throw ConfigError("quantile_groups: fewer values than groups");
  std::vector<std::size_t> order(key.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return key[a] < key[b]; });
  std::vector<Bin> out(groups);
  const std::size_t n = order.size();
  for (int g = 0; g < groups; ++g) {
    const std::size_t first = n * g / groups;
    const std::size_t last = n * (g + 1) / groups;
    std::vector<double> members;
    for (std::size_t k = first; k < last; ++k) members.push_back(values[order[k]]);
    out[g].lo = key[order[first]];
    out[g].hi = key[order[last - 1]];
    out[g].summary = summarize(members);
  }
  return out;
}

std::vector<PredictionRecord> predict_vs_dataset(const NeuralClosureConfig& model,
                                                 std::span<const DatasetEntry> dataset,
                                                 std::span<const std::size_t> indices,
                                                 int threads) {
  check_indices(dataset, indices);
  std::vector<PredictionRecord> out(indices.size());
  parallel_for(indices.size(), threads, [&](std::size_t k) {
    const DatasetEntry& e = dataset[indices[k]];
    const double dx = entry_dx(e, model.pipeline);
    const auto nn = neural_heat_flux(model, e.eps, e.rho, e.u, e.T, dx);
    const auto ns = navier_stokes_heat_flux(e.eps, e.rho, e.T, dx);
    out[k] = {indices[k],          e.eps, e.provenance.time, l2_norm(e.q), value_or_nan(rel_l2(e.q, nn)),
              value_or_nan(rel_l2(e.q, ns))};
  });
  return out;
}

std::vector<ErrorRecord> to_error_records(std::span<const PredictionRecord> records) {
  std::vector<ErrorRecord> out;
  out.reserve(2 * records.size());
  for (const auto& r : records) {
    const auto id = static_cast<std::int64_t>(r.entry);
    out.push_back({id, r.eps, ModelTag::NNEstimate, "rel_l2_q", r.nn_error, std::isnan(r.nn_error)});
    out.push_back({id, r.eps, ModelTag::NSEstimate, "rel_l2_q", r.ns_error, std::isnan(r.ns_error)});
  }
  return out;
}

PredictionExample predict_example(const NeuralClosureConfig& model, const DatasetEntry& entry,
                                  std::size_t index) {
  const double dx = entry_dx(entry, model.pipeline);
  return {index, entry.q, neural_heat_flux(model, entry.eps, entry.rho, entry.u, entry.T, dx),
          navier_stokes_heat_flux(entry.eps, entry.rho, entry.T, dx)};
}

std::vector<SmoothingRecord> smoothing_sweep(const NeuralClosureConfig& model,
                                             std::span<const DatasetEntry> dataset,
                                             std::span<const std::size_t> indices,
                                             std::span<const double> sigmas, int threads) {
  check_indices(dataset, indices);
  std::vector<SmoothingRecord> out(indices.size() * sigmas.size());
  parallel_for(indices.size(), threads, [&](std::size_t k) {
    const DatasetEntry& e = dataset[indices[k]];
    const auto qs =
        neural_heat_flux_sweep(model, e.eps, e.rho, e.u, e.T, entry_dx(e, model.pipeline), sigmas);
    for (std::size_t s = 0; s < sigmas.size(); ++s)
      out[k * sigmas.size() + s] = {indices[k], e.eps, sigmas[s], value_or_nan(rel_l2(e.q, qs[s]))};
  });
  return out;
}

std::vector<ResolutionRecord> resolution_test(const NeuralClosureConfig& model,
                                              std::span<const DatasetEntry> dataset,
                                              std::span<const std::size_t> indices,
                                              std::span<const int> targets, int threads) {
  check_indices(dataset, indices);
  for (int t : targets)
    if (t < 4) throw ConfigError("resolution_test: target resolution must be >= 4");
  NeuralClosureConfig naive = model;
  naive.resample = false;
  NeuralClosureConfig corrected = model;
  corrected.resample = true;
  const std::size_t per_entry = 2 * targets.size();
  std::vector<ResolutionRecord> out(indices.size() * per_entry);
  parallel_for(indices.size(), threads, [&](std::size_t k) {
    const DatasetEntry& e = dataset[indices[k]];
    for (std::size_t j = 0; j < targets.size(); ++j) {
      const int m = targets[j];
      const bool same = m == e.size();
      const auto rho = same ? e.rho : fourier_resample(e.rho, m);
      const auto u = same ? e.u : fourier_resample(e.u, m);
      const auto T = same ? e.T : fourier_resample(e.T, m);
      const auto q = same ? e.q : fourier_resample(e.q, m);
      const double dx = model.pipeline.domain_length / m;
      for (int c = 0; c < 2; ++c) {
        const auto& cfg = c ? corrected : naive;
        double err = kNaN;
        try {
          err = value_or_nan(rel_l2(q, neural_heat_flux(cfg, e.eps, rho, u, T, dx)));
        } catch (const NumericalError&) {
        }
        out[k * per_entry + 2 * j + c] = {indices[k], e.eps, m, c == 1, err};
      }
    }
  });
  return out;
}

void CompareConfig::validate() const {
  phase_grid().validate();
  if (!(t_end > 0.0) || !(record_dt > 0.0))
    throw ConfigError("compare: t_end and record_dt must be positive");
  if (kinetic.poisson_sign != fluid.poisson_sign)
    throw ConfigError("compare: kinetic and fluid Poisson signs differ");
}

const ModelRun* CompareResult::find(ModelTag tag) const {
  for (const auto& r : runs)
    if (r.model == tag) return &r;
  return nullptr;
}

CompareResult compare_models(const InitialCondition& init, double eps, const CompareConfig& cfg,
                             std::shared_ptr<const NeuralClosureConfig> neural,
                             std::int64_t run_id) {
  cfg.validate();
  if (static_cast<int>(init.rho.size()) != cfg.nx)
    throw ConfigError("compare_models: initial condition is not on the compare grid");
  const PhaseGrid grid = cfg.phase_grid();
  const KineticState f0 = maxwellian(init.rho, init.u, init.T, grid);
  const FluidState u0 = fluid_from_primitives(init.rho, init.u, init.T, grid.space());

  CompareResult result;
  result.run_id = run_id;
  result.eps = eps;

  ModelRun kin;
  kin.model = ModelTag::Kinetic;
  {
    KineticSimulation sim(f0, eps, grid, cfg.kinetic);
    try {
      for (double t : record_schedule(cfg.t_end, cfg.record_dt)) {
        sim.advance_to(t);
        const auto snap = sim.snapshot();
        kin.times.push_back(t);
        kin.energy.push_back(electric_energy(snap.field.E, grid.dx()));
      }
      kin.completed = true;
      kin.time_reached = cfg.t_end;
    } catch (const SimulationAborted& e) {
      kin.failure = e.what();
      kin.time_reached = e.time_reached();
    }
  }
  result.runs.push_back(std::move(kin));

  auto coupling = std::make_shared<KineticCoupling>(f0, eps, grid, cfg.kinetic);
  result.runs.push_back(
      run_fluid_model(ModelTag::FluidKinetic, u0, kinetic_closure(coupling), eps, cfg));
  if (neural)
    result.runs.push_back(
        run_fluid_model(ModelTag::FluidNetwork, u0, neural_closure(neural), eps, cfg));
  result.runs.push_back(
      run_fluid_model(ModelTag::NavierStokes, u0, navier_stokes_closure(), eps, cfg));
  if (cfg.include_euler)
    result.runs.push_back(run_fluid_model(ModelTag::FluidEuler, u0, zero_closure(), eps, cfg));

  const ModelRun& ref = result.runs.front();
  for (auto& r : result.runs) {
    if (r.model == ModelTag::Kinetic || !r.completed || !ref.completed) continue;
    r.error = value_or_nan(log_energy_rel_error(r.energy, ref.energy));
  }
  return result;
}

std::vector<ErrorRecord> to_error_records(const CompareResult& result) {
  std::vector<ErrorRecord> out;
  for (const auto& r : result.runs) {
    if (r.model == ModelTag::Kinetic) continue;
    out.push_back({result.run_id, result.eps, r.model, "log_energy_rel_l2", r.error, !r.completed});
  }
  return out;
}

void ScenarioConfig::validate() const {
  if (runs < 1) throw ConfigError("scenarios: runs must be >= 1");
  if (!(eps_min > 0.0) || !(eps_max >= eps_min))
    throw ConfigError("scenarios: need 0 < eps_min <= eps_max");
  if (!(discontinuity_amplitude >= 0.0 && discontinuity_amplitude <= 1.0))
    throw ConfigError("scenarios: discontinuity_amplitude must lie in [0, 1]");
}

std::vector<Scenario> make_scenarios(const ScenarioConfig& cfg, int points, double length) {
  cfg.validate();
  GenConfig gen;
  gen.resolution = points;
  gen.length = length;
  gen.n_modes = cfg.n_modes;
  gen.mach_min = cfg.mach_min;
  gen.mach_max = cfg.mach_max;
  gen.max_rejections = cfg.max_rejections;

  auto to_axis = [&](double e) {
    switch (cfg.spread) {
      case EpsSpread::Uniform: return e;
      case EpsSpread::Log: return std::log(e);
      case EpsSpread::Sqrt: return std::sqrt(e);
    }
    return e;
  };
  auto from_axis = [&](double a) {
    switch (cfg.spread) {
      case EpsSpread::Uniform: return a;
      case EpsSpread::Log: return std::exp(a);
      case EpsSpread::Sqrt: return a * a;
    }
    return a;
  };
  const double lo = to_axis(cfg.eps_min), hi = to_axis(cfg.eps_max);

  std::vector<Scenario> out;
  out.reserve(cfg.runs);
  for (int k = 0; k < cfg.runs; ++k) {
    auto rng = run_rng(cfg.seed, static_cast<std::uint64_t>(k), 0x73636e61u);
    Scenario s;
    s.run_id = k;
    s.eps = from_axis(lo + (k + 0.5) / cfg.runs * (hi - lo));
    s.init = random_initial_condition(rng, gen);
    if (cfg.discontinuous) add_random_discontinuities(rng, s.init, cfg.discontinuity_amplitude, length);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<CompareResult> compare_suite(std::span<const Scenario> scenarios,
                                         const CompareConfig& cfg,
                                         std::shared_ptr<const NeuralClosureConfig> neural,
                                         int threads) {
  std::vector<CompareResult> out(scenarios.size());
  parallel_for(scenarios.size(), threads, [&](std::size_t k) {
    out[k] = compare_models(scenarios[k].init, scenarios[k].eps, cfg, neural, scenarios[k].run_id);
  });
  return out;
}

std::vector<StabilityRecord> stability_sweep(std::span<const Scenario> scenarios,
                                             const NeuralClosureConfig& model,
                                             std::span<const double> sigmas, double t_target,
                                             const CompareConfig& cfg, int threads) {
  if (!(t_target > 0.0)) throw ConfigError("stability_sweep: t_target must be positive");
  const SpaceGrid space{cfg.nx, cfg.length};
  std::vector<std::shared_ptr<const NeuralClosureConfig>> models;
  for (double sigma : sigmas) {
    auto m = std::make_shared<NeuralClosureConfig>(model);
    m->pipeline.smoothing_sigma = sigma;
    models.push_back(std::move(m));
  }
  const std::size_t n = scenarios.size() * sigmas.size();
  std::vector<StabilityRecord> out(n);
  parallel_for(n, threads, [&](std::size_t k) {
    const std::size_t s = k / scenarios.size();
    const Scenario& sc = scenarios[k % scenarios.size()];
    if (static_cast<int>(sc.init.rho.size()) != cfg.nx)
      throw ConfigError("stability_sweep: initial condition is not on the compare grid");
    StabilityRecord r{sc.run_id, sc.eps, sigmas[s], false, 0.0};
    try {
      run_fluid(fluid_from_primitives(sc.init.rho, sc.init.u, sc.init.T, space),
                neural_closure(models[s]), sc.eps, t_target, t_target, cfg.fluid);
      r.reached = true;
      r.time_reached = t_target;
    } catch (const SimulationAborted& e) {
      r.time_reached = e.time_reached();
    }
    out[k] = r;
  });
  return out;
}

std::vector<SimTimeRecord> simulation_time_errors(const NeuralClosureConfig& model,
                                                  std::span<const Scenario> scenarios,
                                                  const PhaseGrid& grid, double t_end,
                                                  double sample_dt, KineticOptions options,
                                                  int threads) {
  const auto times = record_schedule(t_end, sample_dt);
  std::vector<std::vector<SimTimeRecord>> per_run(scenarios.size());
  parallel_for(scenarios.size(), threads, [&](std::size_t k) {
    const Scenario& sc = scenarios[k];
    if (static_cast<int>(sc.init.rho.size()) != grid.nx)
      throw ConfigError("simulation_time_errors: initial condition is not on the kinetic grid");
    KineticSimulation sim(maxwellian(sc.init.rho, sc.init.u, sc.init.T, grid), sc.eps, grid, options);
    try {
      for (double t : times) {
        sim.advance_to(t);
        const Moments m = sim.snapshot().moments;
        const auto nn = neural_heat_flux(model, sc.eps, m.rho, m.u, m.T, grid.dx());
        const auto ns = navier_stokes_heat_flux(sc.eps, m.rho, m.T, grid.dx());
        per_run[k].push_back({sc.run_id, sc.eps, t, l2_norm(m.q), value_or_nan(rel_l2(m.q, nn)),
                              value_or_nan(rel_l2(m.q, ns))});
      }
    } catch (const SimulationAborted& e) {
      per_run[k].push_back({sc.run_id, sc.eps, e.time_reached(), kNaN, kNaN, kNaN});
    }
  });
  std::vector<SimTimeRecord> out;
  for (auto& v : per_run) out.insert(out.end(), v.begin(), v.end());
  return out;
}

std::vector<ArchitectureRecord> architecture_sweep(std::span<const VNetConfig> variants,
                                                   std::span<const DatasetEntry> dataset,
                                                   const PipelineConfig& pipeline,
                                                   const TrainConfig* train_cfg, int threads) {
  std::vector<ArchitectureRecord> out;
  for (const VNetConfig& v : variants) {
    v.validate();
    ArchitectureRecord rec{v.levels, v.depth, v.kernel, param_count(v)};
    if (train_cfg) {
      PipelineConfig p = pipeline;
      p.window_size = v.window;
      const TrainResult tr = train(dataset, v, p, *train_cfg);
      NeuralClosureConfig nc;
      nc.model = tr.params;
      nc.stats = tr.stats;
      nc.pipeline = p;
      const auto recs = predict_vs_dataset(nc, dataset, tr.split.test, threads);
      std::vector<double> errs;
      for (const auto& r : recs) errs.push_back(r.nn_error);
      rec.median_error = summarize(errs).median;
      rec.best_epoch = tr.best_epoch;
    }
    out.push_back(rec);
  }
  return out;
}

}  // namespace fluxnet
