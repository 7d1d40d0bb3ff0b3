#include "fluxnet/json_config.hpp"

#include <string>

#include "fluxnet/error.hpp"

namespace fluxnet {

using nlohmann::json;

void require_known_keys(const json& j, std::initializer_list<const char*> allowed,
                        const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed) known = known || item.key() == k;
    if (!known) throw ConfigError(std::string(where) + ": unknown key '" + item.key() + "'");
  }
}

namespace {

template <class T>
void read(const json& j, const char* key, T& out, const char* where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(where) + "." + key + ": " + e.what());
  }
}

template <class E>
struct EnumNames;

template <>
struct EnumNames<Activation> {
  static constexpr std::pair<Activation, const char*> values[] = {
      {Activation::Softplus, "softplus"}, {Activation::Identity, "identity"}};
};
template <>
struct EnumNames<Padding> {
  static constexpr std::pair<Padding, const char*> values[] = {{Padding::Replicate, "replicate"},
                                                               {Padding::Periodic, "periodic"}};
};
template <>
struct EnumNames<EpsSampling> {
  static constexpr std::pair<EpsSampling, const char*> values[] = {
      {EpsSampling::Deterministic, "deterministic"}, {EpsSampling::Random, "random"}};
};

template <class E>
std::string enum_name(E e) {
  for (const auto& [v, n] : EnumNames<E>::values)
    if (v == e) return n;
  throw ConfigError("unnamed enum value");
}

template <class E>
void read_enum(const json& j, const char* key, E& out, const char* where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_string()) throw ConfigError(std::string(where) + "." + key + ": expected a string");
  const auto s = it->get<std::string>();
  for (const auto& [v, n] : EnumNames<E>::values)
    if (s == n) {
      out = v;
      return;
    }
  throw ConfigError(std::string(where) + "." + key + ": unknown value '" + s + "'");
}

}  // namespace

void to_json(json& j, const VNetConfig& c) {
  j = json{{"window", c.window},       {"levels", c.levels},
           {"depth", c.depth},         {"kernel", c.kernel},
           {"in_channels", c.in_channels}, {"activation", enum_name(c.activation)},
           {"padding", enum_name(c.padding)}};
}

void from_json(const json& j, VNetConfig& c) {
  const char* w = "vnet";
  require_known_keys(j, {"window", "levels", "depth", "kernel", "in_channels", "activation", "padding"},
                     w);
  read(j, "window", c.window, w);
  read(j, "levels", c.levels, w);
  read(j, "depth", c.depth, w);
  read(j, "kernel", c.kernel, w);
  read(j, "in_channels", c.in_channels, w);
  read_enum(j, "activation", c.activation, w);
  read_enum(j, "padding", c.padding, w);
}

void to_json(json& j, const PipelineConfig& c) {
  j = json{{"window_size", c.window_size},
           {"margin_fraction", c.margin_fraction},
           {"redundancy", c.redundancy},
           {"norm_threshold", c.norm_threshold},
           {"smoothing_sigma", c.smoothing_sigma},
           {"training_resolution", c.training_resolution},
           {"training_windows_per_entry", c.training_windows_per_entry},
           {"domain_length", c.domain_length}};
}

void from_json(const json& j, PipelineConfig& c) {
  const char* w = "pipeline";
  require_known_keys(j,
                     {"window_size", "margin_fraction", "redundancy", "norm_threshold",
                      "smoothing_sigma", "training_resolution", "training_windows_per_entry",
                      "domain_length"},
                     w);
  read(j, "window_size", c.window_size, w);
  read(j, "margin_fraction", c.margin_fraction, w);
  read(j, "redundancy", c.redundancy, w);
  read(j, "norm_threshold", c.norm_threshold, w);
  read(j, "smoothing_sigma", c.smoothing_sigma, w);
  read(j, "training_resolution", c.training_resolution, w);
  read(j, "training_windows_per_entry", c.training_windows_per_entry, w);
  read(j, "domain_length", c.domain_length, w);
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"lr0", c.lr0},
           {"series", c.series},
           {"epochs_per_series", c.epochs_per_series},
           {"batch_size", c.batch_size},
           {"decay", c.decay},
           {"test_fraction", c.test_fraction},
           {"val_fraction", c.val_fraction},
           {"beta1", c.beta1},
           {"beta2", c.beta2},
           {"adam_eps", c.adam_eps},
           {"seed", c.seed}};
}

void from_json(const json& j, TrainConfig& c) {
  const char* w = "train";
  require_known_keys(j,
                     {"lr0", "series", "epochs_per_series", "batch_size", "decay", "test_fraction",
                      "val_fraction", "beta1", "beta2", "adam_eps", "seed"},
                     w);
  read(j, "lr0", c.lr0, w);
  read(j, "series", c.series, w);
  read(j, "epochs_per_series", c.epochs_per_series, w);
  read(j, "batch_size", c.batch_size, w);
  read(j, "decay", c.decay, w);
  read(j, "test_fraction", c.test_fraction, w);
  read(j, "val_fraction", c.val_fraction, w);
  read(j, "beta1", c.beta1, w);
  read(j, "beta2", c.beta2, w);
  read(j, "adam_eps", c.adam_eps, w);
  read(j, "seed", c.seed, w);
}

void to_json(json& j, const GenConfig& c) {
  j = json{{"n_eps", c.n_eps},
           {"inits_per_eps", c.inits_per_eps},
           {"times_per_run", c.times_per_run},
           {"eps_min", c.eps_min},
           {"eps_max", c.eps_max},
           {"t_min", c.t_min},
           {"t_max", c.t_max},
           {"resolution", c.resolution},
           {"nv", c.nv},
           {"vmax", c.vmax},
           {"length", c.length},
           {"n_modes", c.n_modes},
           {"mach_min", c.mach_min},
           {"mach_max", c.mach_max},
           {"seed", c.seed},
           {"eps_sampling", enum_name(c.eps_sampling)},
           {"kinetic_safety", c.kinetic_safety},
           {"max_rejections", c.max_rejections},
           {"threads", c.threads}};
}

void from_json(const json& j, GenConfig& c) {
  const char* w = "datagen";
  require_known_keys(j,
                     {"n_eps", "inits_per_eps", "times_per_run", "eps_min", "eps_max", "t_min",
                      "t_max", "resolution", "nv", "vmax", "length", "n_modes", "mach_min",
                      "mach_max", "seed", "eps_sampling", "kinetic_safety", "max_rejections",
                      "threads"},
                     w);
  read(j, "n_eps", c.n_eps, w);
  read(j, "inits_per_eps", c.inits_per_eps, w);
  read(j, "times_per_run", c.times_per_run, w);
  read(j, "eps_min", c.eps_min, w);
  read(j, "eps_max", c.eps_max, w);
  read(j, "t_min", c.t_min, w);
  read(j, "t_max", c.t_max, w);
  read(j, "resolution", c.resolution, w);
  read(j, "nv", c.nv, w);
  read(j, "vmax", c.vmax, w);
  read(j, "length", c.length, w);
  read(j, "n_modes", c.n_modes, w);
  read(j, "mach_min", c.mach_min, w);
  read(j, "mach_max", c.mach_max, w);
  read(j, "seed", c.seed, w);
  read_enum(j, "eps_sampling", c.eps_sampling, w);
  read(j, "kinetic_safety", c.kinetic_safety, w);
  read(j, "max_rejections", c.max_rejections, w);
  read(j, "threads", c.threads, w);
}

void to_json(json& j, const StandardizationStats& s) {
  j = json{{"mean", s.mean}, {"std", s.stddev}};
}

void from_json(const json& j, StandardizationStats& s) {
  require_known_keys(j, {"mean", "std"}, "stats");
  read(j, "mean", s.mean, "stats");
  read(j, "std", s.stddev, "stats");
}

}  // namespace fluxnet
