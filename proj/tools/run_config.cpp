#include "run_config.hpp"

#include <fstream>

#include "fluxnet/error.hpp"
#include "fluxnet/json_config.hpp"

namespace fluxnet::cli {

using nlohmann::json;

namespace {

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

const char* sign_name(PoissonSign s) { return s == PoissonSign::Restoring ? "restoring" : "flipped"; }

PoissonSign parse_sign(const std::string& s) {
  if (s == "restoring") return PoissonSign::Restoring;
  if (s == "flipped") return PoissonSign::Flipped;
  throw ConfigError("poisson_sign: expected 'restoring' or 'flipped', got '" + s + "'");
}

const char* spread_name(EpsSpread s) {
  switch (s) {
    case EpsSpread::Uniform: return "uniform";
    case EpsSpread::Log: return "log";
    case EpsSpread::Sqrt: return "sqrt";
  }
  return "uniform";
}

EpsSpread parse_spread(const std::string& s) {
  if (s == "uniform") return EpsSpread::Uniform;
  if (s == "log") return EpsSpread::Log;
  if (s == "sqrt") return EpsSpread::Sqrt;
  throw ConfigError("eps spread: expected uniform, log or sqrt, got '" + s + "'");
}

json compare_to_json(const CompareConfig& c) {
  return {{"nx", c.nx},
          {"nv", c.nv},
          {"vmax", c.vmax},
          {"length", c.length},
          {"t_end", c.t_end},
          {"record_dt", c.record_dt},
          {"include_euler", c.include_euler},
          {"kinetic_safety", c.kinetic.safety},
          {"poisson_sign", sign_name(c.kinetic.poisson_sign)}};
}

void compare_from_json(const json& j, CompareConfig& c) {
  const std::string w = "eval.compare";
  require_known_keys(j,
                     {"nx", "nv", "vmax", "length", "t_end", "record_dt", "include_euler",
                      "kinetic_safety", "poisson_sign"},
                     w.c_str());
  read(j, "nx", c.nx, w);
  read(j, "nv", c.nv, w);
  read(j, "vmax", c.vmax, w);
  read(j, "length", c.length, w);
  read(j, "t_end", c.t_end, w);
  read(j, "record_dt", c.record_dt, w);
  read(j, "include_euler", c.include_euler, w);
  read(j, "kinetic_safety", c.kinetic.safety, w);
  std::string sign = sign_name(c.kinetic.poisson_sign);
  read(j, "poisson_sign", sign, w);
  c.kinetic.poisson_sign = c.fluid.poisson_sign = parse_sign(sign);
}

json eval_to_json(const EvalSettings& e) {
  return {{"compare", compare_to_json(e.compare)},
          {"compare_runs", e.compare_runs},
          {"compare_spread", spread_name(e.compare_spread)},
          {"compare_eps_min", e.compare_eps_min},
          {"compare_eps_max", e.compare_eps_max},
          {"eps_classes", e.eps_classes},
          {"stability_runs", e.stability_runs},
          {"stability_t", e.stability_t},
          {"stability_sigmas", e.stability_sigmas},
          {"smoothing_sigmas", e.smoothing_sigmas},
          {"resolution_targets", e.resolution_targets},
          {"simtime_runs", e.simtime_runs},
          {"simtime_t_end", e.simtime_t_end},
          {"simtime_dt", e.simtime_dt},
          {"discontinuity_runs", e.discontinuity_runs},
          {"discontinuity_amplitude", e.discontinuity_amplitude},
          {"entries", e.entries},
          {"train_architectures", e.train_architectures},
          {"architectures", e.architectures}};
}

void eval_from_json(const json& j, EvalSettings& e) {
  const std::string w = "eval";
  require_known_keys(j,
                     {"compare", "compare_runs", "compare_spread", "compare_eps_min",
                      "compare_eps_max", "eps_classes", "stability_runs", "stability_t",
                      "stability_sigmas", "smoothing_sigmas", "resolution_targets", "simtime_runs",
                      "simtime_t_end", "simtime_dt", "discontinuity_runs",
                      "discontinuity_amplitude", "entries", "train_architectures", "architectures"},
                     w.c_str());
  if (auto it = j.find("compare"); it != j.end()) compare_from_json(*it, e.compare);
  read(j, "compare_runs", e.compare_runs, w);
  std::string spread = spread_name(e.compare_spread);
  read(j, "compare_spread", spread, w);
  e.compare_spread = parse_spread(spread);
  read(j, "compare_eps_min", e.compare_eps_min, w);
  read(j, "compare_eps_max", e.compare_eps_max, w);
  read(j, "eps_classes", e.eps_classes, w);
  read(j, "stability_runs", e.stability_runs, w);
  read(j, "stability_t", e.stability_t, w);
  read(j, "stability_sigmas", e.stability_sigmas, w);
  read(j, "smoothing_sigmas", e.smoothing_sigmas, w);
  read(j, "resolution_targets", e.resolution_targets, w);
  read(j, "simtime_runs", e.simtime_runs, w);
  read(j, "simtime_t_end", e.simtime_t_end, w);
  read(j, "simtime_dt", e.simtime_dt, w);
  read(j, "discontinuity_runs", e.discontinuity_runs, w);
  read(j, "discontinuity_amplitude", e.discontinuity_amplitude, w);
  read(j, "entries", e.entries, w);
  read(j, "train_architectures", e.train_architectures, w);
  if (auto it = j.find("architectures"); it != j.end()) {
    if (!it->is_array()) throw ConfigError("eval.architectures: expected an array");
    e.architectures.clear();
    for (const auto& a : *it) e.architectures.push_back(a.get<VNetConfig>());
  }
}

json sim_to_json(const SimSettings& s) {
  return {{"closure", s.closure}, {"init", s.init},           {"nx", s.nx},
          {"nv", s.nv},           {"vmax", s.vmax},           {"eps", s.eps},
          {"t_end", s.t_end},     {"record_dt", s.record_dt}, {"amplitude", s.amplitude},
          {"discontinuous", s.discontinuous}};
}

void sim_from_json(const json& j, SimSettings& s) {
  const std::string w = "sim";
  require_known_keys(j,
                     {"closure", "init", "nx", "nv", "vmax", "eps", "t_end", "record_dt",
                      "amplitude", "discontinuous"},
                     w.c_str());
  read(j, "closure", s.closure, w);
  read(j, "init", s.init, w);
  read(j, "nx", s.nx, w);
  read(j, "nv", s.nv, w);
  read(j, "vmax", s.vmax, w);
  read(j, "eps", s.eps, w);
  read(j, "t_end", s.t_end, w);
  read(j, "record_dt", s.record_dt, w);
  read(j, "amplitude", s.amplitude, w);
  read(j, "discontinuous", s.discontinuous, w);
}

std::vector<VNetConfig> default_architectures() {
  std::vector<VNetConfig> out;
  auto variant = [&](int levels, int depth, int kernel) {
    VNetConfig v;
    v.levels = levels;
    v.depth = depth;
    v.kernel = kernel;
    out.push_back(v);
  };
  variant(5, 4, 11);
  variant(4, 4, 11);
  variant(6, 4, 11);
  variant(5, 2, 11);
  variant(5, 8, 11);
  variant(5, 4, 5);
  variant(5, 4, 7);
  variant(5, 4, 15);
  return out;
}

}  // namespace

RunConfig default_run_config() {
  RunConfig c;
  c.eval.architectures = default_architectures();
  return c;
}

void RunConfig::resolve() {
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (seed) {
    gen.seed = *seed;
    train.seed = *seed;
  }
  gen.threads = threads;
  gen.validate();
  vnet.validate();
  pipeline.validate();
  train.validate();
  if (vnet.window != pipeline.window_size)
    throw ConfigError("vnet.window must equal pipeline.window_size");
  eval.compare.validate();
  if (eval.compare_runs < 1 || eval.stability_runs < 1 || eval.simtime_runs < 1 ||
      eval.discontinuity_runs < 1)
    throw ConfigError("eval: run counts must be >= 1");
  if (eval.eps_classes < 1) throw ConfigError("eval.eps_classes must be >= 1");
  if (!(eval.stability_t > 0.0) || !(eval.simtime_t_end > 0.0) || !(eval.simtime_dt > 0.0))
    throw ConfigError("eval: times must be positive");
  for (double s : eval.stability_sigmas)
    if (!(s >= 0.0)) throw ConfigError("eval.stability_sigmas must be >= 0");
  for (double s : eval.smoothing_sigmas)
    if (!(s >= 0.0)) throw ConfigError("eval.smoothing_sigmas must be >= 0");
  if (eval.entries != "test" && eval.entries != "all")
    throw ConfigError("eval.entries must be 'test' or 'all'");
  for (const auto& a : eval.architectures) a.validate();
  if (sim.closure != "zero" && sim.closure != "ns" && sim.closure != "kinetic" &&
      sim.closure != "neural")
    throw ConfigError("sim.closure must be zero, ns, kinetic or neural");
  if (sim.init != "random" && sim.init != "uniform" && sim.init != "cosine")
    throw ConfigError("sim.init must be random, uniform or cosine");
  if (sim.nx < 4 || !(sim.eps > 0.0) || !(sim.t_end > 0.0) || !(sim.record_dt > 0.0))
    throw ConfigError("sim: need nx >= 4 and positive eps, t_end, record_dt");
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c = default_run_config();
  require_known_keys(j,
                     {"seed", "threads", "datagen", "vnet", "pipeline", "train", "eval", "sim"},
                     "config");
  if (auto it = j.find("seed"); it != j.end() && !it->is_null()) {
    std::uint64_t s = 0;
    read(j, "seed", s, "config");
    c.seed = s;
  }
  read(j, "threads", c.threads, "config");
  if (auto it = j.find("datagen"); it != j.end()) c.gen = it->get<GenConfig>();
  if (auto it = j.find("vnet"); it != j.end()) c.vnet = it->get<VNetConfig>();
  if (auto it = j.find("pipeline"); it != j.end()) c.pipeline = it->get<PipelineConfig>();
  if (auto it = j.find("train"); it != j.end()) c.train = it->get<TrainConfig>();
  if (auto it = j.find("eval"); it != j.end()) eval_from_json(*it, c.eval);
  if (auto it = j.find("sim"); it != j.end()) sim_from_json(*it, c.sim);
  return c;
}

json run_config_to_json(const RunConfig& c) {
  return {{"seed", c.seed ? json(*c.seed) : json(nullptr)},
          {"threads", c.threads},
          {"datagen", c.gen},
          {"vnet", c.vnet},
          {"pipeline", c.pipeline},
          {"train", c.train},
          {"eval", eval_to_json(c.eval)},
          {"sim", sim_to_json(c.sim)}};
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "': expected key.path=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  std::string pointer;
  std::size_t start = 0;
  while (start <= key.size()) {
    const auto dot = key.find('.', start);
    const auto part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override '" + assignment + "': empty key component");
    pointer += "/" + part;
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  j[json::json_pointer(pointer)] = value;
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& file,
                          const std::vector<std::string>& overrides) {
  json j = json::object();
  if (file) {
    std::ifstream in(*file);
    if (!in) throw IoError("cannot open config " + file->string());
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError(file->string() + ": " + e.what());
    }
  }
  for (const auto& o : overrides) apply_override(j, o);
  return run_config_from_json(j);
}

}  // namespace fluxnet::cli
