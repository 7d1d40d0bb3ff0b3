#include "fluxnet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "fluxnet/error.hpp"

namespace fluxnet {

void TrainConfig::validate() const {
  if (!(lr0 > 0.0)) throw ConfigError("train: lr0 must be positive");
  if (series < 1 || epochs_per_series < 1) throw ConfigError("train: epoch counts must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("train: decay must be in (0, 1]");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("train: test_fraction must be in (0, 1)");
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    throw ConfigError("train: val_fraction must be in (0, 1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(adam_eps > 0.0))
    throw ConfigError("train: invalid Adam constants");
}

double mae_loss(std::span<const double> pred, std::span<const double> label,
                std::span<double> grad) {
  if (pred.size() != label.size() || pred.empty())
    throw ConfigError("mae_loss: shape mismatch or empty input");
  if (!grad.empty() && grad.size() != pred.size()) throw ConfigError("mae_loss: gradient shape");
  const double n = static_cast<double>(pred.size());
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - label[i];
    total += std::abs(d);
    if (!grad.empty()) grad[i] = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) / n;
  }
  return total / n;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr, const TrainConfig& cfg) {
  if (grads.size() != params.size()) throw ConfigError("adam_step: gradient length mismatch");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size()) throw ConfigError("adam_step: state length mismatch");
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
  }
}

double lr_schedule(int series, int epoch, const TrainConfig& cfg) {
  if (series < 0 || series >= cfg.series || epoch < 0 || epoch >= cfg.epochs_per_series)
    throw ConfigError("lr_schedule: index out of range");
  return cfg.lr0 * std::pow(cfg.decay, epoch);
}

DatasetSplit split_dataset(std::size_t entries, const TrainConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::vector<std::size_t> order(entries);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n = static_cast<long long>(entries);
  const long long n_test = std::llround(cfg.test_fraction * static_cast<double>(n));
  const long long n_val = std::llround(cfg.val_fraction * static_cast<double>(n - n_test));
  const long long n_train = n - n_test - n_val;
  if (n_test < 1 || n_val < 1 || n_train < 1)
    throw ConfigError("split_dataset: a split would be empty (" + std::to_string(entries) +
                      " entries)");
  DatasetSplit s;
  s.test.assign(order.begin(), order.begin() + n_test);
  s.val.assign(order.begin() + n_test, order.begin() + n_test + n_val);
  s.train.assign(order.begin() + n_test + n_val, order.end());
  for (auto* v : {&s.train, &s.val, &s.test}) std::sort(v->begin(), v->end());
  return s;
}

std::vector<TrainingWindow> prepare_windows(std::span<const DatasetEntry> dataset,
                                            std::span<const std::size_t> indices,
                                            const StandardizationStats& stats,
                                            const PipelineConfig& pipeline) {
  std::vector<TrainingWindow> out;
  out.reserve(indices.size() * pipeline.training_windows_per_entry);
  for (std::size_t idx : indices) {
    const DatasetEntry& e = dataset[idx];
    const Signal inputs = standardize(assemble_inputs(e), stats);
    const double q_ns = compute_qns_scale(e.eps, e.rho, e.T, pipeline.training_dx());
    const auto labels = ns_normalize(e.q, q_ns, pipeline.norm_threshold);
    for (auto& w : slice_train(inputs, labels, pipeline)) out.push_back(std::move(w));
  }
  return out;
}

double evaluate_mae(const VNetConfig& vcfg, std::span<const double> params,
                    std::span<const TrainingWindow> windows, int chunk) {
  if (windows.empty()) throw ConfigError("evaluate_mae: no windows");
  double total = 0.0;
  std::size_t count = 0;
  std::vector<Signal> inputs;
  for (std::size_t start = 0; start < windows.size(); start += chunk) {
    const std::size_t n = std::min<std::size_t>(chunk, windows.size() - start);
    inputs.clear();
    for (std::size_t b = 0; b < n; ++b) inputs.push_back(windows[start + b].input);
    const RowMat<double> Y =
        forward<double>(vcfg, params, stack_windows(inputs), static_cast<int>(n), nullptr);
    for (std::size_t b = 0; b < n; ++b) {
      const auto& label = windows[start + b].label;
      for (std::size_t i = 0; i < label.size(); ++i)
        total += std::abs(Y(static_cast<Eigen::Index>(b * label.size() + i), 0) - label[i]);
      count += label.size();
    }
  }
  return total / static_cast<double>(count);
}

TrainCheckpoint train_windows(std::span<const TrainingWindow> train_set,
                              std::span<const TrainingWindow> val_set, const VNetConfig& vcfg,
                              const TrainConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  if (train_set.empty()) throw ConfigError("train: empty training set");
  const std::size_t n_params = param_count(vcfg);
  TrainCheckpoint ck;
  if (options.resume) {
    ck = *options.resume;
    if (ck.params.size() != n_params) throw ConfigError("train: checkpoint does not match config");
  } else {
    ck.params = init_params(vcfg, cfg.seed).values;
    ck.best_params = ck.params;
    ck.best_val = std::numeric_limits<double>::infinity();
  }
  const int total = cfg.total_epochs();
  const int end = options.stop_at_epoch >= 0 ? std::min(options.stop_at_epoch, total) : total;
  const int n = vcfg.window;

  std::vector<std::size_t> order(train_set.size());
  std::vector<double> grad(n_params);
  std::vector<Signal> batch_inputs;
  ForwardCache<double> cache;

  for (int g = ck.next_epoch; g < end; ++g) {
    const int series = g / cfg.epochs_per_series;
    const int epoch = g % cfg.epochs_per_series;
    const double lr = lr_schedule(series, epoch, cfg);

    std::iota(order.begin(), order.end(), std::size_t{0});
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(g)};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t bsz = std::min<std::size_t>(cfg.batch_size, order.size() - start);
      batch_inputs.clear();
      std::vector<double> labels;
      labels.reserve(bsz * n);
      for (std::size_t b = 0; b < bsz; ++b) {
        const auto& w = train_set[order[start + b]];
        if (w.input.length != n || static_cast<int>(w.label.size()) != n)
          throw ConfigError("train: window size does not match network");
        batch_inputs.push_back(w.input);
        labels.insert(labels.end(), w.label.begin(), w.label.end());
      }
      const RowMat<double> Y = forward<double>(vcfg, ck.params, stack_windows(batch_inputs),
                                               static_cast<int>(bsz), &cache);
      RowMat<double> dY(Y.rows(), 1);
      const double loss = mae_loss(std::span<const double>(Y.data(), Y.size()), labels,
                                   std::span<double>(dY.data(), dY.size()));
      if (!std::isfinite(loss))
        throw NumericalError("train: non-finite loss at epoch " + std::to_string(g));
      backward(vcfg, ck.params, cache, dY, grad);
      adam_step(ck.params, grad, ck.adam, lr, cfg);
      loss_sum += loss * static_cast<double>(bsz);
    }
    EpochRecord rec{series, epoch, loss_sum / static_cast<double>(order.size()), 0.0, lr};
    rec.val_mae = val_set.empty() ? rec.train_mae : evaluate_mae(vcfg, ck.params, val_set);
    if (!std::isfinite(rec.val_mae))
      throw NumericalError("train: non-finite validation loss at epoch " + std::to_string(g));
    if (rec.val_mae < ck.best_val) {
      ck.best_val = rec.val_mae;
      ck.best_params = ck.params;
      ck.best_epoch = g;
    }
    ck.history.push_back(rec);
    ck.next_epoch = g + 1;
    if (options.on_epoch) options.on_epoch(ck);
  }
  return ck;
}

TrainResult train(std::span<const DatasetEntry> dataset, const VNetConfig& vcfg,
                  const PipelineConfig& pipeline, const TrainConfig& cfg,
                  const TrainOptions& options) {
  cfg.validate();
  pipeline.validate();
  if (vcfg.window != pipeline.window_size)
    throw ConfigError("train: network window differs from pipeline window_size");
  TrainResult result;
  result.split = split_dataset(dataset.size(), cfg, cfg.seed);
  std::vector<DatasetEntry> train_entries;
  for (std::size_t i : result.split.train) train_entries.push_back(dataset[i]);
  result.stats = fit_standardization(std::span<const DatasetEntry>(train_entries));
  const auto train_set = prepare_windows(dataset, result.split.train, result.stats, pipeline);
  const auto val_set = prepare_windows(dataset, result.split.val, result.stats, pipeline);
  result.checkpoint = train_windows(train_set, val_set, vcfg, cfg, options);
  result.params = VNetParams{vcfg, result.checkpoint.best_params};
  result.history = result.checkpoint.history;
  result.best_epoch = result.checkpoint.best_epoch;
  return result;
}

}  // namespace fluxnet
