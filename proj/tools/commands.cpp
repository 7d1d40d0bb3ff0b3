#include "commands.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "fluxnet/closures.hpp"
#include "fluxnet/datagen.hpp"
#include "fluxnet/error.hpp"
#include "fluxnet/evaluation.hpp"
#include "fluxnet/io.hpp"
#include "fluxnet/json_config.hpp"
#include "run_config.hpp"

namespace fluxnet::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kOutputRootEnv = "FLUXNET_OUTPUT_ROOT";

struct Context {
  RunConfig cfg;
  fs::path out_dir;
  std::ostream& out;
  std::ostream& err;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

fs::path output_dir(const std::string& flag, const std::string& command) {
  if (!flag.empty()) return flag;
  if (const char* root = std::getenv(kOutputRootEnv); root && *root) return fs::path(root) / command;
  return fs::path("fluxnet_out") / command;
}

void echo_config(const Context& c, const std::string& command, const std::vector<std::string>& argv) {
  fs::create_directories(c.out_dir);
  const json echo{{"command", command},
                  {"argv", argv},
                  {"seed", c.cfg.seed ? json(*c.cfg.seed) : json(nullptr)},
                  {"datagen_seed", c.cfg.gen.seed},
                  {"train_seed", c.cfg.train.seed},
                  {"scenario_seed", c.cfg.scenario_seed()},
                  {"config", run_config_to_json(c.cfg)}};
  const fs::path p = c.out_dir / "config.json";
  std::ofstream f(p);
  if (!f) throw IoError("cannot write " + p.string());
  f << echo.dump(2) << '\n';
  c.out << "output " << c.out_dir.string() << '\n';
  c.out << "seed " << c.cfg.seed.value_or(c.cfg.gen.seed) << '\n';
}

void summary_cells(CsvWriter& w, const Summary& s) {
  w.cell(static_cast<long long>(s.count))
      .cell(static_cast<long long>(s.undefined))
      .cell(s.median)
      .cell(s.q1)
      .cell(s.q3);
}

const std::vector<std::string> kSummaryColumns{"count", "undefined", "median", "q1", "q3"};

std::vector<std::string> with_summary(std::vector<std::string> head) {
  head.insert(head.end(), kSummaryColumns.begin(), kSummaryColumns.end());
  return head;
}

std::shared_ptr<NeuralClosureConfig> load_neural(const fs::path& path, const RunConfig& cfg,
                                                 ModelFile* file = nullptr) {
  ModelFile mf = load_model(path);
  auto nc = std::make_shared<NeuralClosureConfig>();
  nc->model = mf.params;
  nc->stats = mf.stats;
  nc->pipeline = mf.pipeline;
  nc->pipeline.smoothing_sigma = cfg.pipeline.smoothing_sigma;
  nc->validate();
  if (file) *file = std::move(mf);
  return nc;
}

std::vector<std::size_t> select_entries(const std::string& which, const ModelFile& mf,
                                        std::size_t dataset_size) {
  if (which == "test" && !mf.test_entries.empty()) return mf.test_entries;
  std::vector<std::size_t> all(dataset_size);
  std::iota(all.begin(), all.end(), 0);
  return all;
}

void require(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("this command needs --") + what);
}

// datagen

int cmd_datagen(Context& c) {
  const GenConfig& g = c.cfg.gen;
  const auto report = generate_dataset(g, [&](int done, int total, bool ok) {
    c.err << "run " << done << "/" << total << (ok ? "" : " failed") << '\n';
  });
  if (report.entries.empty()) throw NumericalError("datagen: every run failed");
  const fs::path path = c.out_dir / "dataset.bin";
  save_dataset(path, DatasetFile{report.entries, json(g), g.seed});
  if (!report.failures.empty()) {
    std::ofstream f(c.out_dir / "failures.txt");
    for (const auto& s : report.failures) f << s << '\n';
  }
  c.out << "entries " << report.entries.size() << '\n'
        << "runs " << report.runs << '\n'
        << "failed_runs " << report.failed_runs << '\n'
        << "dataset " << path.string() << '\n';
  return kOk;
}

// train

struct TrainArgs {
  std::string data, checkpoint;
  bool resume = false;
  int stop_after = -1;
  int checkpoint_every = 1;
};

int cmd_train(Context& c, const TrainArgs& a) {
  require(a.data, "data");
  const RunConfig& cfg = c.cfg;
  const DatasetFile df = load_dataset(a.data);
  if (df.entries.empty()) throw ConfigError("train: dataset is empty");
  if (df.entries.front().size() != cfg.pipeline.training_resolution)
    throw ConfigError("train: dataset resolution " + std::to_string(df.entries.front().size()) +
                      " differs from pipeline.training_resolution " +
                      std::to_string(cfg.pipeline.training_resolution));
  const fs::path ck_path = a.checkpoint.empty() ? c.out_dir / "checkpoint.bin" : fs::path(a.checkpoint);

  TrainCheckpoint resume_from;
  TrainOptions opt;
  if (a.resume) {
    resume_from = load_checkpoint(ck_path);
    opt.resume = &resume_from;
    c.err << "resuming at epoch " << resume_from.next_epoch << '\n';
  }
  opt.stop_at_epoch = a.stop_after;
  opt.on_epoch = [&](const TrainCheckpoint& ck) {
    const EpochRecord& r = ck.history.back();
    c.err << "series " << r.series << " epoch " << r.epoch << " train " << r.train_mae << " val "
          << r.val_mae << " lr " << r.lr << '\n';
    if (a.checkpoint_every > 0 && ck.next_epoch % a.checkpoint_every == 0) save_checkpoint(ck_path, ck);
  };

  const TrainResult res = train(df.entries, cfg.vnet, cfg.pipeline, cfg.train, opt);
  save_checkpoint(ck_path, res.checkpoint);

  ModelFile mf;
  mf.params = res.params;
  mf.pipeline = cfg.pipeline;
  mf.stats = res.stats;
  mf.seed = cfg.train.seed;
  mf.best_epoch = res.best_epoch;
  mf.test_entries = res.split.test;
  mf.extra = json{{"train", cfg.train},
                  {"dataset", fs::absolute(a.data).string()},
                  {"epochs_run", res.history.size()},
                  {"best_val_mae", res.checkpoint.best_val}};
  const fs::path model_path = c.out_dir / "model.bin";
  save_model(model_path, mf);

  CsvWriter hist(c.out_dir / "history.csv", {"series", "epoch", "train_mae", "val_mae", "lr"});
  for (const auto& r : res.history) hist.cell(r.series).cell(r.epoch).cell(r.train_mae).cell(r.val_mae).cell(r.lr).end_row();

  c.out << "params " << res.params.values.size() << '\n'
        << "split " << res.split.train.size() << " " << res.split.val.size() << " "
        << res.split.test.size() << '\n'
        << "epochs " << res.history.size() << '\n'
        << "best_epoch " << res.best_epoch << '\n'
        << "best_val_mae " << fmt(res.checkpoint.best_val) << '\n'
        << "model " << model_path.string() << '\n';
  return kOk;
}

// predict

void write_prediction_csv(const fs::path& path, std::span<const PredictionRecord> recs,
                          std::span<const DatasetEntry> data) {
  CsvWriter w(path, {"entry", "run_id", "eps", "time", "q_norm", "model", "metric", "value"});
  for (const auto& r : recs) {
    for (int m = 0; m < 2; ++m) {
      w.cell(static_cast<long long>(r.entry))
          .cell(static_cast<long long>(data[r.entry].provenance.run_id))
          .cell(r.eps)
          .cell(r.time)
          .cell(r.q_norm)
          .cell(std::string(model_tag_name(m ? ModelTag::NSEstimate : ModelTag::NNEstimate)))
          .cell("rel_l2_q")
          .cell(m ? r.ns_error : r.nn_error)
          .end_row();
    }
  }
}

double mean_defined(const std::vector<double>& v) {
  double s = 0.0;
  std::size_t n = 0;
  for (double x : v)
    if (!std::isnan(x)) {
      s += x;
      ++n;
    }
  return n ? s / static_cast<double>(n) : std::nan("");
}

int cmd_predict(Context& c, const std::string& model, const std::string& data,
                const std::string& entries) {
  require(model, "model");
  require(data, "data");
  ModelFile mf;
  const auto nc = load_neural(model, c.cfg, &mf);
  const DatasetFile df = load_dataset(data);
  const auto idx = select_entries(entries.empty() ? c.cfg.eval.entries : entries, mf, df.entries.size());
  const auto recs = predict_vs_dataset(*nc, df.entries, idx, c.cfg.threads);
  write_prediction_csv(c.out_dir / "predictions.csv", recs, df.entries);
  std::vector<double> nn, ns;
  for (const auto& r : recs) {
    nn.push_back(r.nn_error);
    ns.push_back(r.ns_error);
  }
  const Summary snn = summarize(nn), sns = summarize(ns);
  c.out << "entries " << recs.size() << '\n'
        << "mean_rel_l2_nn " << fmt(mean_defined(nn)) << '\n'
        << "mean_rel_l2_ns " << fmt(mean_defined(ns)) << '\n'
        << "median_rel_l2_nn " << fmt(snn.median) << '\n'
        << "median_rel_l2_ns " << fmt(sns.median) << '\n'
        << "undefined " << snn.undefined << '\n';
  return kOk;
}

// sim

InitialCondition sim_initial_condition(const RunConfig& cfg) {
  const SimSettings& s = cfg.sim;
  const double L = cfg.gen.length;
  InitialCondition ic;
  if (s.init == "random") {
    GenConfig g = cfg.gen;
    g.resolution = s.nx;
    auto rng = run_rng(cfg.scenario_seed(), 0, 0);
    ic = random_initial_condition(rng, g);
    if (s.discontinuous) add_random_discontinuities(rng, ic, cfg.eval.discontinuity_amplitude, L);
    return ic;
  }
  for (int i = 0; i < s.nx; ++i) {
    const double x = L * i / s.nx;
    ic.rho.push_back(s.init == "cosine" ? 1.0 + s.amplitude * std::cos(2 * std::numbers::pi * x / L) : 1.0);
    ic.u.push_back(0.0);
    ic.T.push_back(1.0);
  }
  return ic;
}

int cmd_sim(Context& c, const std::string& model) {
  const RunConfig& cfg = c.cfg;
  const SimSettings& s = cfg.sim;
  const InitialCondition ic = sim_initial_condition(cfg);
  const SpaceGrid space{s.nx, cfg.gen.length};
  const FluidState u0 = fluid_from_primitives(ic.rho, ic.u, ic.T, space);
  FluidOptions fopt;
  fopt.poisson_sign = cfg.eval.compare.fluid.poisson_sign;

  Closure closure;
  if (s.closure == "zero") {
    closure = zero_closure();
  } else if (s.closure == "ns") {
    closure = navier_stokes_closure();
  } else if (s.closure == "kinetic") {
    const PhaseGrid grid = PhaseGrid::make(s.nx, s.nv, s.vmax, cfg.gen.length);
    closure = kinetic_closure(std::make_shared<KineticCoupling>(
        maxwellian(ic.rho, ic.u, ic.T, grid), s.eps, grid, cfg.eval.compare.kinetic));
  } else {
    require(model, "model");
    closure = neural_closure(load_neural(model, cfg));
  }

  const auto recs = run_fluid(u0, closure, s.eps, s.t_end, s.record_dt, fopt);
  CsvWriter energy(c.out_dir / "energy.csv", {"time", "energy"});
  for (const auto& r : recs) energy.cell(r.time).cell(electric_energy(r.E, space.dx())).end_row();

  CsvWriter fields(c.out_dir / "fields.csv", {"time", "i", "x", "rho", "u", "T", "E", "q"});
  double max_change = 0.0;
  const Primitives p0 = primitive_vars(recs.front().state);
  for (const FluidRecord* r : {&recs.front(), &recs.back()}) {
    const Primitives p = primitive_vars(r->state);
    for (int i = 0; i < s.nx; ++i) {
      fields.cell(r->time).cell(i).cell(space.dx() * i).cell(p.rho[i]).cell(p.u[i]).cell(p.T[i])
          .cell(r->E[i]).cell(r->q.empty() ? 0.0 : r->q[i]).end_row();
      max_change = std::max({max_change, std::abs(p.rho[i] - p0.rho[i]), std::abs(p.u[i] - p0.u[i]),
                             std::abs(p.T[i] - p0.T[i])});
    }
  }
  c.out << "closure " << closure.name << '\n'
        << "records " << recs.size() << '\n'
        << "t_final " << fmt(recs.back().time) << '\n'
        << "energy_final " << fmt(electric_energy(recs.back().E, space.dx())) << '\n'
        << "max_change " << fmt(max_change) << '\n';
  return kOk;
}

// eval

std::vector<Scenario> scenarios(const RunConfig& cfg, int runs, EpsSpread spread, double lo,
                                double hi, int points, bool discontinuous, std::uint64_t salt) {
  ScenarioConfig sc;
  sc.runs = runs;
  sc.spread = spread;
  sc.eps_min = lo;
  sc.eps_max = hi;
  sc.n_modes = cfg.gen.n_modes;
  sc.mach_min = cfg.gen.mach_min;
  sc.mach_max = cfg.gen.mach_max;
  sc.max_rejections = cfg.gen.max_rejections;
  sc.discontinuous = discontinuous;
  sc.discontinuity_amplitude = cfg.eval.discontinuity_amplitude;
  sc.seed = cfg.scenario_seed() + salt;
  return make_scenarios(sc, points, cfg.gen.length);
}

void write_compare(const Context& c, const std::string& prefix,
                   std::span<const CompareResult> results) {
  CsvWriter errs(c.out_dir / (prefix + "_errors.csv"),
                 {"run_id", "eps", "model", "metric", "value", "failed", "time_reached"});
  CsvWriter energy(c.out_dir / (prefix + "_energy.csv"), {"run_id", "eps", "model", "time", "energy"});
  std::map<ModelTag, std::vector<double>> values, eps;
  std::map<ModelTag, int> failed;
  for (const auto& res : results) {
    for (const auto& r : res.runs) {
      for (std::size_t k = 0; k < r.times.size(); ++k)
        energy.cell(static_cast<long long>(res.run_id)).cell(res.eps)
            .cell(std::string(model_tag_name(r.model))).cell(r.times[k]).cell(r.energy[k]).end_row();
      if (r.model == ModelTag::Kinetic) continue;
      errs.cell(static_cast<long long>(res.run_id)).cell(res.eps).cell(std::string(model_tag_name(r.model)))
          .cell("log_energy_rel_l2").cell(r.error).cell(r.completed ? 0 : 1).cell(r.time_reached).end_row();
      values[r.model].push_back(r.error);
      eps[r.model].push_back(res.eps);
      failed[r.model] += r.completed ? 0 : 1;
    }
  }
  CsvWriter bins(c.out_dir / (prefix + "_bins.csv"), with_summary({"model", "eps_lo", "eps_hi"}));
  for (const auto& [tag, v] : values) {
    for (const auto& b : uniform_bins(eps[tag], v, c.cfg.eval.eps_classes, 0.01, 1.0)) {
      bins.cell(std::string(model_tag_name(tag))).cell(b.lo).cell(b.hi);
      summary_cells(bins, b.summary);
      bins.end_row();
    }
    const Summary s = summarize(v);
    c.out << model_tag_name(tag) << " median " << fmt(s.median) << " q1 " << fmt(s.q1) << " q3 "
          << fmt(s.q3) << " failed " << failed[tag] << "/" << v.size() << '\n';
  }
}

struct EvalArgs {
  std::string suite, model, data, entries;
};

int eval_pred(Context& c, const EvalArgs& a) {
  require(a.model, "model");
  require(a.data, "data");
  ModelFile mf;
  const auto nc = load_neural(a.model, c.cfg, &mf);
  const DatasetFile df = load_dataset(a.data);
  const auto idx = select_entries(a.entries.empty() ? c.cfg.eval.entries : a.entries, mf, df.entries.size());
  const auto recs = predict_vs_dataset(*nc, df.entries, idx, c.cfg.threads);
  write_prediction_csv(c.out_dir / "pred_errors.csv", recs, df.entries);

  std::vector<double> eps, qn, nn, ns;
  for (const auto& r : recs) {
    eps.push_back(r.eps);
    qn.push_back(r.q_norm);
    nn.push_back(r.nn_error);
    ns.push_back(r.ns_error);
  }
  CsvWriter bins(c.out_dir / "pred_eps_bins.csv", with_summary({"model", "eps_lo", "eps_hi"}));
  CsvWriter groups(c.out_dir / "pred_qnorm_groups.csv", with_summary({"model", "q_norm_lo", "q_norm_hi"}));
  for (int m = 0; m < 2; ++m) {
    const std::string name(model_tag_name(m ? ModelTag::NSEstimate : ModelTag::NNEstimate));
    const auto& v = m ? ns : nn;
    for (const auto& b : uniform_bins(eps, v, c.cfg.eval.eps_classes, 0.01, 1.0)) {
      bins.cell(name).cell(b.lo).cell(b.hi);
      summary_cells(bins, b.summary);
      bins.end_row();
    }
    if (recs.size() >= 10)
      for (const auto& b : quantile_groups(qn, v, 10)) {
        groups.cell(name).cell(b.lo).cell(b.hi);
        summary_cells(groups, b.summary);
        groups.end_row();
      }
    const Summary s = summarize(v);
    c.out << name << " median " << fmt(s.median) << " q1 " << fmt(s.q1) << " q3 " << fmt(s.q3)
          << " undefined " << s.undefined << '\n';
  }

  // Profiles of the entries with the lowest, median and highest eps.
  std::vector<std::size_t> order(recs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return recs[x].eps < recs[y].eps; });
  CsvWriter ex(c.out_dir / "pred_examples.csv", {"entry", "eps", "i", "q", "nn", "ns"});
  if (!order.empty())
    for (std::size_t k : {order.front(), order[order.size() / 2], order.back()}) {
      const std::size_t e = recs[k].entry;
      const auto p = predict_example(*nc, df.entries[e], e);
      for (std::size_t i = 0; i < p.q.size(); ++i)
        ex.cell(static_cast<long long>(e)).cell(df.entries[e].eps).cell(static_cast<long long>(i))
            .cell(p.q[i]).cell(p.nn[i]).cell(p.ns[i]).end_row();
    }
  return kOk;
}

int eval_simtime(Context& c, const EvalArgs& a) {
  require(a.model, "model");
  const RunConfig& cfg = c.cfg;
  const auto nc = load_neural(a.model, cfg);
  const auto scen = scenarios(cfg, cfg.eval.simtime_runs, EpsSpread::Sqrt, cfg.gen.eps_min,
                              cfg.gen.eps_max, cfg.gen.resolution, false, 3);
  KineticOptions ko = cfg.eval.compare.kinetic;
  ko.safety = cfg.gen.kinetic_safety;
  const auto recs = simulation_time_errors(*nc, scen, cfg.gen.phase_grid(), cfg.eval.simtime_t_end,
                                           cfg.eval.simtime_dt, ko, cfg.threads);
  CsvWriter w(c.out_dir / "simtime.csv", {"run_id", "eps", "time", "q_norm", "model", "metric", "value"});
  std::map<double, std::vector<double>> by_time_nn, by_time_ns;
  for (const auto& r : recs) {
    for (int m = 0; m < 2; ++m)
      w.cell(static_cast<long long>(r.run_id)).cell(r.eps).cell(r.time).cell(r.q_norm)
          .cell(std::string(model_tag_name(m ? ModelTag::NSEstimate : ModelTag::NNEstimate)))
          .cell("rel_l2_q").cell(m ? r.ns_error : r.nn_error).end_row();
    by_time_nn[r.time].push_back(r.nn_error);
    by_time_ns[r.time].push_back(r.ns_error);
  }
  CsvWriter s(c.out_dir / "simtime_summary.csv", with_summary({"model", "time"}));
  for (int m = 0; m < 2; ++m)
    for (const auto& [t, v] : m ? by_time_ns : by_time_nn) {
      s.cell(std::string(model_tag_name(m ? ModelTag::NSEstimate : ModelTag::NNEstimate))).cell(t);
      summary_cells(s, summarize(v));
      s.end_row();
    }
  std::vector<double> nn, ns;
  for (const auto& r : recs) {
    nn.push_back(r.nn_error);
    ns.push_back(r.ns_error);
  }
  c.out << "NN-estimate median " << fmt(summarize(nn).median) << '\n'
        << "NS-estimate median " << fmt(summarize(ns).median) << '\n';
  return kOk;
}

int eval_arch(Context& c, const EvalArgs& a) {
  const RunConfig& cfg = c.cfg;
  Dataset data;
  if (cfg.eval.train_architectures) {
    require(a.data, "data");
    data = load_dataset(a.data).entries;
  }
  const auto recs = architecture_sweep(cfg.eval.architectures, data, cfg.pipeline,
                                       cfg.eval.train_architectures ? &cfg.train : nullptr, cfg.threads);
  CsvWriter w(c.out_dir / "arch.csv", {"levels", "depth", "kernel", "params", "median_error", "best_epoch"});
  for (const auto& r : recs) {
    w.cell(r.levels).cell(r.depth).cell(r.kernel).cell(static_cast<long long>(r.params))
        .cell(r.median_error).cell(r.best_epoch).end_row();
    c.out << "levels " << r.levels << " depth " << r.depth << " kernel " << r.kernel << " params "
          << r.params << " median_error " << fmt(r.median_error) << '\n';
  }
  return kOk;
}

int eval_compare(Context& c, const EvalArgs& a, bool discontinuous) {
  const RunConfig& cfg = c.cfg;
  std::shared_ptr<const NeuralClosureConfig> nc;
  if (!a.model.empty()) nc = load_neural(a.model, cfg);
  else if (discontinuous) require(a.model, "model");
  const int runs = discontinuous ? cfg.eval.discontinuity_runs : cfg.eval.compare_runs;
  const auto scen = scenarios(cfg, runs, cfg.eval.compare_spread, cfg.eval.compare_eps_min,
                              cfg.eval.compare_eps_max, cfg.eval.compare.nx, discontinuous,
                              discontinuous ? 2 : 0);
  const auto results = compare_suite(scen, cfg.eval.compare, nc, cfg.threads);
  write_compare(c, discontinuous ? "discontinuity" : "compare", results);
  return kOk;
}

int eval_smoothing(Context& c, const EvalArgs& a) {
  require(a.model, "model");
  require(a.data, "data");
  ModelFile mf;
  const auto nc = load_neural(a.model, c.cfg, &mf);
  const DatasetFile df = load_dataset(a.data);
  const auto idx = select_entries(a.entries.empty() ? c.cfg.eval.entries : a.entries, mf, df.entries.size());
  const auto& sigmas = c.cfg.eval.smoothing_sigmas;
  const auto recs = smoothing_sweep(*nc, df.entries, idx, sigmas, c.cfg.threads);
  CsvWriter w(c.out_dir / "smoothing.csv", {"entry", "eps", "sigma", "value"});
  std::map<double, std::vector<double>> by_sigma;
  for (const auto& r : recs) {
    w.cell(static_cast<long long>(r.entry)).cell(r.eps).cell(r.sigma).cell(r.error).end_row();
    by_sigma[r.sigma].push_back(r.error);
  }
  CsvWriter s(c.out_dir / "smoothing_summary.csv", with_summary({"sigma"}));
  for (const auto& [sigma, v] : by_sigma) {
    const Summary sum = summarize(v);
    s.cell(sigma);
    summary_cells(s, sum);
    s.end_row();
    c.out << "sigma " << sigma << " median " << fmt(sum.median) << '\n';
  }
  return kOk;
}

int eval_stability(Context& c, const EvalArgs& a) {
  require(a.model, "model");
  const RunConfig& cfg = c.cfg;
  const auto nc = load_neural(a.model, cfg);
  const auto scen = scenarios(cfg, cfg.eval.stability_runs, EpsSpread::Log, 0.01, 1.0,
                              cfg.eval.compare.nx, false, 1);
  const auto recs = stability_sweep(scen, *nc, cfg.eval.stability_sigmas, cfg.eval.stability_t,
                                    cfg.eval.compare, cfg.threads);
  CsvWriter w(c.out_dir / "stability.csv", {"run_id", "eps", "sigma", "reached", "time_reached"});
  std::map<double, std::pair<int, int>> counts;
  for (const auto& r : recs) {
    w.cell(static_cast<long long>(r.run_id)).cell(r.eps).cell(r.sigma).cell(r.reached ? 1 : 0)
        .cell(r.time_reached).end_row();
    counts[r.sigma].first += r.reached ? 1 : 0;
    counts[r.sigma].second += 1;
  }
  CsvWriter s(c.out_dir / "stability_summary.csv", {"sigma", "runs", "reached", "fraction"});
  for (const auto& [sigma, n] : counts) {
    s.cell(sigma).cell(n.second).cell(n.first).cell(static_cast<double>(n.first) / n.second).end_row();
    c.out << "sigma " << sigma << " reached " << n.first << "/" << n.second << '\n';
  }
  return kOk;
}

int eval_resolution(Context& c, const EvalArgs& a) {
  require(a.model, "model");
  require(a.data, "data");
  ModelFile mf;
  const auto nc = load_neural(a.model, c.cfg, &mf);
  const DatasetFile df = load_dataset(a.data);
  const auto idx = select_entries(a.entries.empty() ? c.cfg.eval.entries : a.entries, mf, df.entries.size());
  const auto recs = resolution_test(*nc, df.entries, idx, c.cfg.eval.resolution_targets, c.cfg.threads);
  CsvWriter w(c.out_dir / "resolution.csv", {"entry", "eps", "resolution", "corrected", "value"});
  std::map<std::pair<int, bool>, std::vector<double>> groups;
  for (const auto& r : recs) {
    w.cell(static_cast<long long>(r.entry)).cell(r.eps).cell(r.resolution).cell(r.corrected ? 1 : 0)
        .cell(r.error).end_row();
    groups[{r.resolution, r.corrected}].push_back(r.error);
  }
  CsvWriter s(c.out_dir / "resolution_summary.csv", with_summary({"resolution", "corrected"}));
  for (const auto& [key, v] : groups) {
    const Summary sum = summarize(v);
    s.cell(key.first).cell(key.second ? 1 : 0);
    summary_cells(s, sum);
    s.end_row();
    c.out << "resolution " << key.first << (key.second ? " corrected" : " naive") << " median "
          << fmt(sum.median) << '\n';
  }
  return kOk;
}

int cmd_eval(Context& c, const EvalArgs& a) {
  if (a.suite == "pred") return eval_pred(c, a);
  if (a.suite == "simtime") return eval_simtime(c, a);
  if (a.suite == "arch") return eval_arch(c, a);
  if (a.suite == "compare") return eval_compare(c, a, false);
  if (a.suite == "discontinuity") return eval_compare(c, a, true);
  if (a.suite == "smoothing") return eval_smoothing(c, a);
  if (a.suite == "stability") return eval_stability(c, a);
  if (a.suite == "resolution") return eval_resolution(c, a);
  throw ConfigError("unknown eval suite '" + a.suite + "'");
}

// info

int cmd_info(std::ostream& out, const std::string& file, bool full) {
  const FileSummary s = inspect_file(file);
  out << "kind " << s.kind << '\n' << "bytes " << s.bytes << '\n';
  const json& h = s.header;
  if (s.kind == "dataset") {
    out << "entries " << h.at("count").get<std::size_t>() << '\n'
        << "resolution " << h.at("resolution").get<int>() << '\n'
        << "seed " << h.value("seed", std::uint64_t{0}) << '\n';
  } else if (s.kind == "model") {
    out << "params " << h.at("param_count").get<std::size_t>() << '\n'
        << "vnet " << h.at("vnet").dump() << '\n'
        << "best_epoch " << h.value("best_epoch", -1) << '\n'
        << "seed " << h.value("seed", std::uint64_t{0}) << '\n';
  } else {
    out << "params " << h.at("param_count").get<std::size_t>() << '\n'
        << "next_epoch " << h.at("next_epoch").get<int>() << '\n'
        << "best_epoch " << h.at("best_epoch").get<int>() << '\n';
  }
  if (full) out << h.dump(2) << '\n';
  return kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"fluxnet: kinetic data generation, heat-flux network training and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_flag;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  int threads = 1;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--set", sets, "Override a config value, e.g. --set datagen.n_eps=4");
  auto* seed_opt = app.add_option("--seed", seed, "Seed for data generation, training and scenarios");
  auto* threads_opt = app.add_option("--threads", threads, "Maximum worker threads");
  app.add_option("--out", out_flag,
                 std::string("Output directory (default: $") + kOutputRootEnv + "/<command>)");

  auto* datagen = app.add_subcommand("datagen", "Generate a kinetic dataset");

  TrainArgs targs;
  auto* train_cmd = app.add_subcommand("train", "Train the network on a dataset");
  train_cmd->add_option("--data", targs.data, "Dataset file")->required();
  train_cmd->add_option("--checkpoint", targs.checkpoint, "Checkpoint file (default: <out>/checkpoint.bin)");
  train_cmd->add_flag("--resume", targs.resume, "Continue from the checkpoint");
  train_cmd->add_option("--stop-after", targs.stop_after, "Stop after this many epochs in total");
  train_cmd->add_option("--checkpoint-every", targs.checkpoint_every, "Epochs between checkpoints (0: end only)");

  std::string model, data, entries;
  auto* predict = app.add_subcommand("predict", "Network and NS heat-flux errors on a dataset");
  predict->add_option("--model", model, "Model file")->required();
  predict->add_option("--data", data, "Dataset file")->required();
  predict->add_option("--entries", entries, "test | all")->check(CLI::IsMember({"test", "all"}));

  auto* sim = app.add_subcommand("sim", "Run the fluid model with one closure");
  std::string closure, init;
  double eps = 0.0, t_end = 0.0;
  int nx = 0;
  sim->add_option("--closure", closure, "zero | ns | kinetic | neural");
  sim->add_option("--init", init, "random | uniform | cosine");
  auto* eps_opt = sim->add_option("--eps", eps, "Knudsen number");
  auto* tend_opt = sim->add_option("--t-end", t_end, "Final time");
  auto* nx_opt = sim->add_option("--nx", nx, "Grid points");
  sim->add_option("--model", model, "Model file for the neural closure");

  EvalArgs eargs;
  auto* eval = app.add_subcommand("eval", "Evaluation suites");
  eval->add_option("suite", eargs.suite,
                   "pred | simtime | arch | compare | smoothing | stability | resolution | discontinuity")
      ->required();
  eval->add_option("--model", eargs.model, "Model file");
  eval->add_option("--data", eargs.data, "Dataset file");
  eval->add_option("--entries", eargs.entries, "test | all")->check(CLI::IsMember({"test", "all"}));

  std::string info_file;
  bool info_full = false;
  auto* info = app.add_subcommand("info", "Describe a dataset, model or checkpoint file");
  info->add_option("file", info_file, "File")->required();
  info->add_flag("--header", info_full, "Print the full header");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (info->parsed()) return cmd_info(out, info_file, info_full);

    CLI::App* cmd = app.get_subcommands().front();
    std::optional<fs::path> cfg_file;
    if (!config_path.empty()) cfg_file = config_path;
    Context c{load_run_config(cfg_file, sets), output_dir(out_flag, cmd->get_name()), out, err};
    if (seed_opt->count()) c.cfg.seed = seed;
    if (threads_opt->count()) c.cfg.threads = threads;
    if (!closure.empty()) c.cfg.sim.closure = closure;
    if (!init.empty()) c.cfg.sim.init = init;
    if (eps_opt->count()) c.cfg.sim.eps = eps;
    if (tend_opt->count()) c.cfg.sim.t_end = t_end;
    if (nx_opt->count()) c.cfg.sim.nx = nx;
    c.cfg.resolve();
    echo_config(c, cmd->get_name(), std::vector<std::string>(argv, argv + argc));

    if (datagen->parsed()) return cmd_datagen(c);
    if (train_cmd->parsed()) return cmd_train(c, targs);
    if (predict->parsed()) return cmd_predict(c, model, data, entries);
    if (sim->parsed()) return cmd_sim(c, model);
    if (eval->parsed()) return cmd_eval(c, eargs);
    return kFailure;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace fluxnet::cli
