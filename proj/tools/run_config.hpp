#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fluxnet/datagen.hpp"
#include "fluxnet/evaluation.hpp"
#include "fluxnet/processing.hpp"
#include "fluxnet/trainer.hpp"
#include "fluxnet/vnet.hpp"

namespace fluxnet::cli {

/// Single fluid or kinetic run driven by `fluxnet sim`.
struct SimSettings {
  std::string closure = "ns";  // zero | ns | kinetic | neural
  std::string init = "random";  // random | uniform | cosine
  int nx = 512;
  int nv = 101;
  double vmax = 7.0;
  double eps = 0.1;
  double t_end = 8.0;
  double record_dt = 0.05;
  double amplitude = 0.1;  // cosine density perturbation
  bool discontinuous = false;
};

struct EvalSettings {
  CompareConfig compare;
  int compare_runs = 20;  // 200 at full scale
  EpsSpread compare_spread = EpsSpread::Uniform;
  double compare_eps_min = 0.01;
  double compare_eps_max = 1.0;
  int eps_classes = 20;

  int stability_runs = 30;
  double stability_t = 3.0;
  std::vector<double> stability_sigmas{0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.08, 0.1};

  std::vector<double> smoothing_sigmas{0.0, 0.01, 0.02, 0.04, 0.06, 0.08, 0.1, 0.15, 0.2};
  std::vector<int> resolution_targets{1024, 768, 512};

  int simtime_runs = 50;
  double simtime_t_end = 8.0;
  double simtime_dt = 0.25;

  int discontinuity_runs = 10;
  double discontinuity_amplitude = 1.0;

  /// Dataset entries used by the prediction suites: "test" (held-out split of
  /// the model) or "all".
  std::string entries = "test";
  /// Train each architecture variant (otherwise only parameter counts).
  bool train_architectures = false;
  std::vector<VNetConfig> architectures;
};

struct RunConfig {
  /// When set, overrides the datagen, training and scenario seeds.
  std::optional<std::uint64_t> seed;
  int threads = 1;
  GenConfig gen;
  VNetConfig vnet;
  PipelineConfig pipeline;
  TrainConfig train;
  EvalSettings eval;
  SimSettings sim;

  /// Propagates the global seed and thread count, then checks every section.
  void resolve();
  std::uint64_t scenario_seed() const { return seed.value_or(gen.seed) + 1; }
};

RunConfig default_run_config();

/// Strict parse: unknown keys and wrong types raise ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& c);

/// Applies "a.b.c=value" overrides to a JSON document; the value is parsed as
/// JSON when possible and taken as a string otherwise.
void apply_override(nlohmann::json& j, const std::string& assignment);

RunConfig load_run_config(const std::optional<std::filesystem::path>& file,
                          const std::vector<std::string>& overrides);

}  // namespace fluxnet::cli
