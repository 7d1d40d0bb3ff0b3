#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <vector>

#include "fluxnet/error.hpp"
#include "fluxnet/trainer.hpp"

using namespace fluxnet;

namespace {

std::vector<TrainingWindow> synthetic_windows(int count, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2 * std::numbers::pi);
  std::vector<TrainingWindow> out;
  for (int k = 0; k < count; ++k) {
    TrainingWindow w;
    w.input = Signal(n, 4);
    w.label.resize(n);
    const double ph = phase(rng);
    for (int i = 0; i < n; ++i) {
      const double x = 2 * std::numbers::pi * i / n + ph;
      w.input.at(i, 0) = 0.3 * k - 1;
      w.input.at(i, 1) = std::sin(x);
      w.input.at(i, 2) = std::cos(2 * x);
      w.input.at(i, 3) = std::sin(3 * x + 1);
      w.label[i] = 0.5 * std::cos(x) * (1 + 0.03 * k) - 0.2 * std::sin(3 * x + 1);
    }
    out.push_back(std::move(w));
  }
  return out;
}

VNetConfig small_net() {
  VNetConfig v;
  v.window = 32;
  v.levels = 3;
  v.depth = 4;
  v.kernel = 5;
  return v;
}

DatasetEntry synthetic_entry(int n, double eps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ph(0.0, 6.0);
  const double a = ph(rng), b = ph(rng);
  DatasetEntry e;
  e.eps = eps;
  for (int i = 0; i < n; ++i) {
    const double x = 2 * std::numbers::pi * i / n;
    e.rho.push_back(1 + 0.2 * std::sin(x + a));
    e.u.push_back(0.1 * std::cos(2 * x + b));
    e.T.push_back(1 + 0.1 * std::sin(x + b));
    e.q.push_back(-0.15 * eps * std::cos(x + b));
  }
  return e;
}

}  // namespace

TEST(MaeLossTest, ValuesAndSubgradient) {
  const std::vector<double> a{1.0, -2.0, 0.5, 3.0};
  EXPECT_EQ(mae_loss(a, a), 0.0);
  std::vector<double> b = a;
  for (double& v : b) v -= 0.25;
  EXPECT_NEAR(mae_loss(a, b), 0.25, 1e-15);
  std::vector<double> grad(4, 9.0);
  mae_loss(a, a, grad);
  for (double g : grad) EXPECT_EQ(g, 0.0);
  EXPECT_THROW(mae_loss(a, std::vector<double>(3)), ConfigError);
}

TEST(MaeLossTest, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d;
  std::vector<double> pred(50), label(50), grad(50);
  for (int i = 0; i < 50; ++i) {
    pred[i] = d(rng);
    label[i] = d(rng);
  }
  mae_loss(pred, label, grad);
  const double h = 1e-7;
  for (int i = 0; i < 50; ++i) {
    if (std::abs(pred[i] - label[i]) < 1e-3) continue;
    auto pp = pred, pm = pred;
    pp[i] += h;
    pm[i] -= h;
    EXPECT_NEAR((mae_loss(pp, label) - mae_loss(pm, label)) / (2 * h), grad[i], 1e-7);
  }
}

TEST(AdamTest, FirstStepMovesByLearningRate) {
  TrainConfig cfg;
  std::vector<double> p{1.0, -2.0, 0.0}, g{0.3, -5.0, 1e-3};
  AdamState st;
  adam_step(p, g, st, 0.01, cfg);
  EXPECT_NEAR(p[0], 1.0 - 0.01, 1e-9);
  EXPECT_NEAR(p[1], -2.0 + 0.01, 1e-9);
  EXPECT_NEAR(p[2], -0.01, 1e-7);
  EXPECT_EQ(st.t, 1);
}

TEST(AdamTest, ZeroGradientLeavesParameters) {
  TrainConfig cfg;
  std::vector<double> p{1.0, 2.0}, g{0.0, 0.0};
  AdamState st;
  adam_step(p, g, st, 0.1, cfg);
  EXPECT_EQ(p, (std::vector<double>{1.0, 2.0}));
}

TEST(AdamTest, ScalarRecurrenceOracle) {
  TrainConfig cfg;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> d;
  std::vector<double> p(5), ref(5), m(5, 0.0), v(5, 0.0);
  for (int i = 0; i < 5; ++i) p[i] = ref[i] = d(rng);
  AdamState st;
  for (int t = 1; t <= 20; ++t) {
    std::vector<double> g(5);
    for (double& x : g) x = d(rng);
    const double lr = 0.003 * t;
    adam_step(p, g, st, lr, cfg);
    for (int i = 0; i < 5; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(0.9, t)), vh = v[i] / (1 - std::pow(0.999, t));
      ref[i] -= lr * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(p[i], ref[i], 1e-14);
}

TEST(AdamTest, ConstantGradientStepsStayNearLearningRate) {
  TrainConfig cfg;
  std::vector<double> p{0.0};
  AdamState st;
  double prev = 0.0;
  for (int k = 0; k < 2; ++k) {
    adam_step(p, std::vector<double>{0.7}, st, 0.02, cfg);
    const double step = std::abs(p[0] - prev);
    EXPECT_GE(step, 0.9 * 0.02);
    EXPECT_LE(step, 1.1 * 0.02);
    prev = p[0];
  }
}

TEST(LrScheduleTest, ResetAndDecay) {
  TrainConfig cfg;
  for (int s = 0; s < cfg.series; ++s) EXPECT_EQ(lr_schedule(s, 0, cfg), 0.005);
  EXPECT_NEAR(lr_schedule(0, 119, cfg), 0.005 * std::pow(0.98, 119), 1e-18);
  EXPECT_NEAR(lr_schedule(3, 119, cfg), 4.55e-4, 1e-5);
  for (int e = 1; e < cfg.epochs_per_series; ++e)
    EXPECT_LE(lr_schedule(2, e, cfg), lr_schedule(2, e - 1, cfg));
  EXPECT_THROW(lr_schedule(5, 0, cfg), ConfigError);
  EXPECT_THROW(lr_schedule(0, 120, cfg), ConfigError);
}

TEST(SplitTest, ReferenceArithmetic) {
  TrainConfig cfg;
  const auto s = split_dataset(10000, cfg, 1);
  EXPECT_EQ(s.test.size(), 400u);
  EXPECT_EQ(s.val.size(), 960u);
  EXPECT_EQ(s.train.size(), 8640u);
  // Eight training windows per entry give the window counts.
  EXPECT_EQ(8 * s.test.size(), 3200u);
  EXPECT_EQ(8 * s.val.size(), 7680u);
  EXPECT_EQ(8 * s.train.size(), 69120u);
}

TEST(SplitTest, DeterministicDisjointCovering) {
  TrainConfig cfg;
  const auto a = split_dataset(600, cfg, 5), b = split_dataset(600, cfg, 5),
             c = split_dataset(600, cfg, 6);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.val, b.val);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(a.test, c.test);
  std::set<std::size_t> all;
  for (const auto* v : {&a.train, &a.val, &a.test})
    for (std::size_t i : *v) EXPECT_TRUE(all.insert(i).second);
  EXPECT_EQ(all.size(), 600u);
  EXPECT_EQ(*all.rbegin(), 599u);
  EXPECT_THROW(split_dataset(5, cfg, 1), ConfigError);
}

TEST(PrepareWindowsTest, NormalizationBeforeSlicing) {
  PipelineConfig pipe;
  pipe.window_size = 32;
  pipe.training_resolution = 64;
  pipe.training_windows_per_entry = 4;
  std::vector<DatasetEntry> data{synthetic_entry(64, 0.02, 1), synthetic_entry(64, 0.7, 2)};
  const auto stats = fit_standardization(std::span<const DatasetEntry>(data));
  const std::vector<std::size_t> idx{0, 1};
  const auto ws = prepare_windows(data, idx, stats, pipe);
  ASSERT_EQ(ws.size(), 8u);
  for (int e = 0; e < 2; ++e) {
    const auto& d = data[e];
    const double qns = compute_qns_scale(d.eps, d.rho, d.T, pipe.training_dx());
    const auto full = ns_normalize(d.q, qns, pipe.norm_threshold);
    for (int k = 0; k < 4; ++k) {
      const auto& w = ws[e * 4 + k];
      for (int n = 0; n < 32; ++n) {
        const int src = (16 * k + n) % 64;
        EXPECT_EQ(w.label[n], full[src]);
        EXPECT_NEAR(w.input.at(n, 1), (d.rho[src] - stats.mean[1]) / stats.stddev[1], 1e-15);
      }
    }
  }
  // eps = 0.02 gives a small NS scale, so its labels are rescaled.
  EXPECT_NE(ws[0].label[0], data[0].q[0]);
}

TEST(TrainWindowsTest, DeterministicAndResumable) {
  const auto vcfg = small_net();
  const auto train_set = synthetic_windows(6, 32, 1), val_set = synthetic_windows(2, 32, 2);
  TrainConfig cfg;
  cfg.series = 2;
  cfg.epochs_per_series = 3;
  cfg.batch_size = 4;
  cfg.seed = 11;
  const auto a = train_windows(train_set, val_set, vcfg, cfg);
  const auto b = train_windows(train_set, val_set, vcfg, cfg);
  ASSERT_EQ(a.history.size(), 6u);
  EXPECT_EQ(a.params, b.params);
  for (std::size_t k = 0; k < a.history.size(); ++k) {
    EXPECT_EQ(a.history[k].train_mae, b.history[k].train_mae);
    EXPECT_EQ(a.history[k].val_mae, b.history[k].val_mae);
  }
  EXPECT_EQ(a.history[3].series, 1);
  EXPECT_EQ(a.history[3].lr, cfg.lr0);

  TrainOptions first;
  first.stop_at_epoch = 4;
  const auto partial = train_windows(train_set, val_set, vcfg, cfg, first);
  EXPECT_EQ(partial.next_epoch, 4);
  TrainOptions second;
  second.resume = &partial;
  const auto resumed = train_windows(train_set, val_set, vcfg, cfg, second);
  EXPECT_EQ(resumed.params, a.params);
  EXPECT_EQ(resumed.best_params, a.best_params);
  EXPECT_EQ(resumed.best_epoch, a.best_epoch);
  EXPECT_EQ(resumed.adam.m, a.adam.m);
  EXPECT_EQ(resumed.adam.v, a.adam.v);
  ASSERT_EQ(resumed.history.size(), a.history.size());
  for (std::size_t k = 0; k < a.history.size(); ++k)
    EXPECT_EQ(resumed.history[k].train_mae, a.history[k].train_mae);
}

TEST(TrainWindowsTest, BestValidationParametersAreKept) {
  const auto vcfg = small_net();
  const auto train_set = synthetic_windows(6, 32, 3), val_set = synthetic_windows(2, 32, 4);
  TrainConfig cfg;
  cfg.series = 1;
  cfg.epochs_per_series = 8;
  cfg.batch_size = 6;
  int calls = 0;
  TrainOptions opt;
  opt.on_epoch = [&](const TrainCheckpoint& ck) { EXPECT_EQ(ck.next_epoch, ++calls); };
  const auto ck = train_windows(train_set, val_set, vcfg, cfg, opt);
  EXPECT_EQ(calls, 8);
  double best = 1e300;
  int best_epoch = -1;
  for (std::size_t k = 0; k < ck.history.size(); ++k)
    if (ck.history[k].val_mae < best) {
      best = ck.history[k].val_mae;
      best_epoch = static_cast<int>(k);
    }
  EXPECT_EQ(ck.best_epoch, best_epoch);
  EXPECT_NEAR(evaluate_mae(vcfg, ck.best_params, val_set), best, 1e-12);
}

TEST(TrainWindowsTest, SmallNetworkOverfitsTenWindows) {
  const auto vcfg = small_net();
  const auto windows = synthetic_windows(10, 32, 7);
  TrainConfig cfg;
  cfg.series = 1;
  cfg.epochs_per_series = 2000;
  cfg.decay = 0.998;
  cfg.batch_size = 10;
  const double initial = evaluate_mae(vcfg, init_params(vcfg, cfg.seed).values, windows);
  const auto ck = train_windows(windows, {}, vcfg, cfg);
  const double final_mae = evaluate_mae(vcfg, ck.params, windows);
  RecordProperty("final_over_initial", std::to_string(final_mae / initial));
  EXPECT_LT(ck.history.back().train_mae, ck.history.front().train_mae);
  EXPECT_LT(final_mae, 1e-2 * initial);
}

TEST(TrainTest, FullRecipeFitsStatisticsOnTrainingEntriesOnly) {
  PipelineConfig pipe;
  pipe.window_size = 32;
  pipe.training_resolution = 64;
  pipe.training_windows_per_entry = 2;
  std::vector<DatasetEntry> data;
  for (int k = 0; k < 30; ++k) data.push_back(synthetic_entry(64, 0.05 + 0.03 * k, 100 + k));
  TrainConfig cfg;
  cfg.series = 2;
  cfg.epochs_per_series = 5;
  cfg.batch_size = 8;
  cfg.test_fraction = 0.1;
  const auto r = train(data, small_net(), pipe, cfg);
  std::vector<DatasetEntry> tr;
  for (std::size_t i : r.split.train) tr.push_back(data[i]);
  const auto expected = fit_standardization(std::span<const DatasetEntry>(tr));
  for (int c = 0; c < 4; ++c) {
    EXPECT_EQ(r.stats.mean[c], expected.mean[c]);
    EXPECT_EQ(r.stats.stddev[c], expected.stddev[c]);
  }
  EXPECT_EQ(r.history.size(), 10u);
  EXPECT_LT(r.history.back().train_mae, r.history.front().train_mae);
  EXPECT_EQ(r.params.values, r.checkpoint.best_params);
  EXPECT_EQ(r.split.test.size(), 3u);
  VNetConfig wrong = small_net();
  wrong.window = 64;
  EXPECT_THROW(train(data, wrong, pipe, cfg), ConfigError);
}
