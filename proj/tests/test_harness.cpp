// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "htgnn/dataset.hpp"
#include "htgnn/error.hpp"
#include "htgnn/experiment.hpp"
#include "htgnn/metrics.hpp"
#include "htgnn/split.hpp"
#include "htgnn/training.hpp"

using namespace htgnn;

namespace {

ExperimentConfig small_experiment() {
  ExperimentConfig cfg;
  cfg.simulator.grid = GridSpec{{500, 1500, 2500}, {100, 300}, {10, 20}};
  cfg.split.holdout = 3;
  cfg.preprocess.stride = 10;
  cfg.model.node_embedding_dim = 4;
  cfg.model.gnn_layers = 1;
  cfg.model.gnn_hidden = 4;
  cfg.model.head_hidden = 8;
  cfg.baseline.channels = 4;
  cfg.baseline.hidden = 8;
  cfg.training.max_epochs = 3;
  cfg.training.batch_size = 64;
  return cfg;
}

const PreparedData& small_data() {
  static const PreparedData data = [] {
    const auto cfg = small_experiment();
    const auto layout = RigLayout::two_bearing_default();
    return prepare_data(cfg, layout, simulate_dataset(cfg.simulator, layout, cfg.data_seed));
  }();
  return data;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("htgnn_harness_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Split, FiftySixConditionsTwelveUnseen) {
  SplitConfig cfg;
  const auto plan = make_split(56, cfg);
  EXPECT_EQ(plan.unseen.size(), 12u);
  EXPECT_EQ(plan.seen.size(), 44u);
  EXPECT_EQ(plan.test_conditions().size(), 56u);
  std::set<std::size_t> all(plan.seen.begin(), plan.seen.end());
  for (auto u : plan.unseen) {
    EXPECT_TRUE(plan.is_unseen(u));
    EXPECT_FALSE(all.count(u));
  }
  // Head share of each seen recording so that train + validation is 55 % of all data.
  EXPECT_NEAR(plan.seen_head_fraction * 44.0 / 56.0, 0.55, 1e-12);
}

TEST(Split, HoldoutZeroAndDeterminism) {
  SplitConfig cfg;
  cfg.holdout = 0;
  const auto plan = make_split(56, cfg);
  EXPECT_TRUE(plan.unseen.empty());
  EXPECT_EQ(plan.seen.size(), 56u);
  cfg.holdout = 12;
  cfg.seed = 9;
  const auto a = make_split(56, cfg), b = make_split(56, cfg);
  EXPECT_EQ(a.unseen, b.unseen);
  cfg.seed = 10;
  EXPECT_NE(make_split(56, cfg).unseen, a.unseen);
}

TEST(Split, InfeasibleHoldoutThrows) {
  SplitConfig cfg;
  cfg.holdout = 56;
  EXPECT_THROW(make_split(56, cfg), ConfigError);
  cfg.holdout = 40;  // 16 seen conditions cannot hold 55 % of the data
  EXPECT_THROW(make_split(56, cfg), ConfigError);
}

TEST(Split, NoUnseenWindowsInTrainingAcrossSeeds) {
  const auto& base = small_data();
  auto cfg = small_experiment();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    cfg.split.seed = seed;
    const auto plan = make_split(base.conditions.size(), cfg.split);
    auto windows = base.windows;
    for (auto& w : windows) w.seen = !plan.is_unseen(w.case_id);
    const auto a = assign_windows(windows, base.case_length, plan);
    for (const auto* part : {&a.train, &a.validation}) {
      for (auto i : *part) {
        EXPECT_FALSE(plan.is_unseen(windows[i].case_id)) << "seed " << seed;
        // Head of the recording only.
        const double boundary = plan.seen_head_fraction * static_cast<double>(base.case_length[windows[i].case_id]);
        EXPECT_LT(static_cast<double>(windows[i].end_index), boundary);
      }
    }
    for (auto i : a.test) {
      if (!plan.is_unseen(windows[i].case_id)) {
        const auto len = base.case_length[windows[i].case_id];
        const double boundary = std::floor(plan.seen_head_fraction * static_cast<double>(len));
        EXPECT_GE(static_cast<double>(windows[i].end_index + 1 - windows[i].window), boundary);
      }
    }
    const double val_share = static_cast<double>(a.validation.size()) /
                             static_cast<double>(a.train.size() + a.validation.size());
    EXPECT_NEAR(val_share, 0.2, 0.01);
  }
}

TEST(EarlyStopping, StopsElevenEpochsAfterBestOncePastStart) {
  EarlyStopping es(10, 0);
  es.update(1, 1.0);
  std::size_t stopped = 0;
  for (std::size_t epoch = 2; epoch < 40 && !stopped; ++epoch) {
    es.update(epoch, 1.0 + static_cast<double>(epoch));
    if (es.should_stop(epoch)) stopped = epoch;
  }
  EXPECT_EQ(stopped, 11u);
  EXPECT_EQ(es.best_epoch(), 1u);

  EarlyStopping late(10, 30);
  late.update(1, 1.0);
  stopped = 0;
  for (std::size_t epoch = 2; epoch < 60 && !stopped; ++epoch) {
    late.update(epoch, 2.0);
    if (late.should_stop(epoch)) stopped = epoch;
  }
  EXPECT_EQ(stopped, 30u);
}

TEST(EarlyStopping, EqualLossIsNotAnImprovement) {
  EarlyStopping es(2, 0);
  EXPECT_TRUE(es.update(1, 0.5));
  EXPECT_FALSE(es.update(2, 0.5));
  EXPECT_EQ(es.epochs_since_improvement(), 1u);
}

TEST(Metrics, PerfectPredictor) {
  const std::vector<std::array<double, 2>> y{{100, 20}, {110, 25}, {300, 40}};
  const std::vector<std::size_t> ids{0, 0, 1};
  const std::vector<char> seen{1, 1, 0};
  const std::vector<OperatingCondition> conds{{100, 20, 10}, {300, 40, 10}};
  const auto r = compute_metrics(y, y, ids, seen, conds);
  ASSERT_EQ(r.cases.size(), 2u);
  for (const auto& c : r.cases) {
    EXPECT_EQ(c.mae_fx, 0.0);
    EXPECT_EQ(c.mape_fy, 0.0);
  }
  EXPECT_EQ(r.seen.cases, 1u);
  EXPECT_EQ(r.unseen.cases, 1u);
}

TEST(Metrics, ConstantPredictorHandComputed) {
  // Three cases, one window each; predictor outputs the mean target.
  const std::vector<std::array<double, 2>> y{{100, 10}, {200, 20}, {600, 60}};
  const std::vector<std::array<double, 2>> p(3, {300, 30});
  const std::vector<std::size_t> ids{0, 1, 2};
  const std::vector<char> seen{1, 1, 1};
  const std::vector<OperatingCondition> conds{{100, 10, 10}, {200, 20, 10}, {600, 60, 10}};
  const auto r = compute_metrics(p, y, ids, seen, conds);
  EXPECT_DOUBLE_EQ(r.cases[0].mae_fx, 200.0);
  EXPECT_DOUBLE_EQ(r.cases[1].mae_fy, 10.0);
  EXPECT_DOUBLE_EQ(r.cases[2].mape_fx, 50.0);
  EXPECT_DOUBLE_EQ(r.seen.mae_fx, (200.0 + 100.0 + 300.0) / 3.0);
  EXPECT_DOUBLE_EQ(r.seen.mape_fx, (200.0 + 50.0 + 50.0) / 3.0);
  EXPECT_EQ(r.unseen.cases, 0u);
}

TEST(Metrics, FloorExcludesNearZeroTargets) {
  const std::vector<std::array<double, 2>> y{{0.5, 10}}, p{{1.5, 11}};
  const std::vector<std::size_t> ids{0};
  const std::vector<char> seen{1};
  const std::vector<OperatingCondition> conds{{0.5, 10, 10}};
  const auto r = compute_metrics(p, y, ids, seen, conds);
  EXPECT_TRUE(std::isnan(r.cases[0].mape_fx));
  EXPECT_DOUBLE_EQ(r.cases[0].mae_fx, 1.0);
  EXPECT_DOUBLE_EQ(r.cases[0].mape_fy, 10.0);
  EXPECT_THROW(compute_metrics({}, {}, {}, {}, conds), DataError);
}

TEST(Metrics, UnseenAggregateExcludesSeenCases) {
  const std::vector<std::array<double, 2>> y{{100, 10}, {100, 10}, {100, 10}};
  const std::vector<std::array<double, 2>> p{{110, 10}, {150, 10}, {300, 10}};
  const std::vector<std::size_t> ids{0, 1, 2};
  const std::vector<char> seen{1, 0, 0};
  const std::vector<OperatingCondition> conds(3, {100, 10, 10});
  const auto r = compute_metrics(p, y, ids, seen, conds);
  EXPECT_DOUBLE_EQ(r.seen.mae_fx, 10.0);
  EXPECT_DOUBLE_EQ(r.unseen.mae_fx, 125.0);
}

TEST(Metrics, CsvWritesNaAndFixedPrecision) {
  MetricsReport r;
  CaseMetrics c;
  c.case_id = 4;
  c.condition = {0.5, 10, 20};
  c.mae_fx = 1.0 / 3.0;
  c.mape_fx = std::nan("");
  r.cases.push_back(c);
  const auto dir = fresh_dir("csv");
  write_metrics_csv(dir / "m.csv", r);
  const auto text = read_file(dir / "m.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "case_id,F_x,F_y,speed,seen,mae_fx,mae_fy,mape_fx,mape_fy");
  EXPECT_NE(text.find("0.333333"), std::string::npos);
  EXPECT_NE(text.find("NA"), std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST(Metrics, RepeatSummaryMeanAndSampleStd) {
  MetricsReport a, b;
  a.seen.mape_fx = 4.0;
  b.seen.mape_fx = 6.0;
  const std::vector<MetricsReport> runs{a, b};
  const auto s = summarize_runs(runs);
  EXPECT_EQ(s.runs, 2u);
  EXPECT_DOUBLE_EQ(s.seen[2].mean, 5.0);
  EXPECT_DOUBLE_EQ(s.seen[2].std, std::sqrt(2.0));
}

TEST(Normalization, FittedOnGivenIndicesOnly) {
  const auto& data = small_data();
  const auto n = Normalization::fit(data.windows, data.assignment.train);
  double mean = 0.0;
  for (auto i : data.assignment.train) mean += data.windows[i].load[0];
  mean /= static_cast<double>(data.assignment.train.size());
  EXPECT_NEAR(n.target_mean[0], mean, 1e-9 * std::abs(mean));
  const auto z = n.apply(data.windows[data.assignment.train[0]]);
  const auto back = n.decode_target(z.load);
  EXPECT_NEAR(back[0], data.windows[data.assignment.train[0]].load[0], 1e-9);
  EXPECT_EQ(Normalization::from_json(n.to_json()).to_json(), n.to_json());
}

TEST(Training, EvaluationIsBatchSizeInvariant) {
  const auto& data = small_data();
  const auto cfg = small_experiment();
  for (auto kind : {ModelKind::Htgnn, ModelKind::Cnn}) {
    auto model = make_model(kind, cfg, *data.graph);
    std::mt19937_64 rng(3);
    model->parameters().initialize(rng);
    const auto norm = Normalization::fit(data.windows, data.assignment.train);
    const auto a = evaluate(*model, norm, data.windows, data.assignment.test, data.conditions, 7);
    const auto b = evaluate(*model, norm, data.windows, data.assignment.test, data.conditions, 1000);
    ASSERT_EQ(a.cases.size(), b.cases.size());
    for (std::size_t i = 0; i < a.cases.size(); ++i) {
      EXPECT_NEAR(a.cases[i].mae_fx, b.cases[i].mae_fx, 1e-9);
      EXPECT_NEAR(a.cases[i].mape_fy, b.cases[i].mape_fy, 1e-9);
    }
  }
}

TEST(Training, SameSeedGivesIdenticalMetricsCsv) {
  const auto& data = small_data();
  const auto cfg = small_experiment();
  const auto dir = fresh_dir("repro");
  for (auto kind : {ModelKind::Htgnn, ModelKind::Cnn}) {
    std::string first;
    for (int run = 0; run < 2; ++run) {
      auto out = run_training(kind, cfg, data, 5);
      EXPECT_EQ(out.training.log.size(), 3u);
      const auto path = dir / ("m" + std::to_string(run) + ".csv");
      write_metrics_csv(path, out.metrics);
      if (run == 0) first = read_file(path);
      else EXPECT_EQ(read_file(path), first) << to_string(kind);
    }
  }
  std::filesystem::remove_all(dir);
}

TEST(Training, LogRecordsBestEpoch) {
  const auto& data = small_data();
  const auto cfg = small_experiment();
  const auto out = run_training(ModelKind::Htgnn, cfg, data, 1);
  std::size_t best = 0;
  double best_loss = 1e300;
  for (const auto& r : out.training.log) {
    EXPECT_TRUE(std::isfinite(r.train_loss));
    if (r.validation_loss < best_loss) {
      best_loss = r.validation_loss;
      best = r.epoch;
    }
  }
  EXPECT_EQ(out.training.best_epoch, best);
  // The best-validation state is the one left in the model.
  const auto norm = Normalization::fit(data.windows, data.assignment.train);
  std::vector<WindowSample> z;
  for (const auto& w : data.windows) z.push_back(norm.apply(w));
  EXPECT_NEAR(evaluate_loss(*out.model, z, data.assignment.validation, 512), best_loss, 1e-9);
}

TEST(Config, UnknownKeysAndWindowMismatch) {
  auto j = ExperimentConfig{}.to_json();
  EXPECT_NO_THROW(ExperimentConfig::from_json(j));
  j["training"]["lr"] = 0.1;
  EXPECT_THROW(ExperimentConfig::from_json(j), ConfigError);
  j = ExperimentConfig{}.to_json();
  j["surprise"] = true;
  EXPECT_THROW(ExperimentConfig::from_json(j), ConfigError);
  ExperimentConfig cfg;
  cfg.model.window = 40;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(model_kind_from_string("rnn"), ConfigError);
}

TEST(Dataset, RawAndProcessedDirectoriesLoadIdentically) {
  auto cfg = small_experiment();
  const auto layout = RigLayout::two_bearing_default();
  const auto recs = simulate_dataset(cfg.simulator, layout, cfg.data_seed);
  const auto plan = make_split(recs.size(), cfg.split);
  const auto raw = fresh_dir("raw"), processed = fresh_dir("processed");
  write_raw_dataset(raw, layout, recs, plan);
  write_processed_dataset(raw, processed, cfg.preprocess, plan);
  const auto from_raw = load_dataset(raw, cfg), from_processed = load_dataset(processed, cfg);
  const auto& direct = small_data();
  ASSERT_EQ(from_raw.windows.size(), direct.windows.size());
  ASSERT_EQ(from_processed.windows.size(), direct.windows.size());
  EXPECT_EQ(from_raw.assignment.test, direct.assignment.test);
  EXPECT_EQ(from_processed.assignment.train, direct.assignment.train);
  for (std::size_t i = 0; i < direct.windows.size(); i += 17) {
    EXPECT_EQ(from_raw.windows[i].temperature, direct.windows[i].temperature);
    EXPECT_EQ(from_processed.windows[i].vibration, direct.windows[i].vibration);
    EXPECT_EQ(from_processed.windows[i].load, direct.windows[i].load);
  }
  auto other = cfg;
  other.preprocess.rate_span_s = 200;
  EXPECT_THROW(load_dataset(processed, other), ConfigError);
  EXPECT_THROW(load_dataset(fresh_dir("empty"), cfg), DataError);
  for (const auto& d : {raw, processed}) std::filesystem::remove_all(d);
}
