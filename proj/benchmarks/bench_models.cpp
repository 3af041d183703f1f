// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <cstdint>
#include <memory>
#include <random>

#include "htgnn/baseline.hpp"
#include "htgnn/model.hpp"

namespace {

constexpr std::size_t kTemperatureNodes = 20;
constexpr std::size_t kVibrationNodes = 12;
constexpr std::size_t kWindow = 30;

std::vector<htgnn::WindowSample> random_windows(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> dist;
  std::vector<htgnn::WindowSample> out(n);
  for (auto& w : out) {
    w.window = kWindow;
    w.temperature_nodes = kTemperatureNodes;
    w.vibration_nodes = kVibrationNodes;
    for (std::size_t i = 0; i < kTemperatureNodes * kWindow; ++i) w.temperature.push_back(dist(rng));
    for (std::size_t i = 0; i < kVibrationNodes * kWindow; ++i) w.vibration.push_back(dist(rng));
    for (std::size_t i = 0; i < kWindow; ++i) w.speed.push_back(dist(rng));
    w.load = {dist(rng), dist(rng)};
  }
  return out;
}

htgnn::BatchTensors stack(const std::vector<htgnn::WindowSample>& windows) {
  std::vector<const htgnn::WindowSample*> ptrs;
  for (const auto& w : windows) ptrs.push_back(&w);
  return htgnn::stack_batch(ptrs);
}

std::unique_ptr<htgnn::LoadModel> make_model(bool graph_model, std::mt19937_64& rng) {
  std::unique_ptr<htgnn::LoadModel> model;
  if (graph_model) {
    model = std::make_unique<htgnn::HtgnnModel>(
        htgnn::ModelConfig{}, htgnn::build_bearing_graph(htgnn::RigLayout::two_bearing_default()));
  } else {
    model = std::make_unique<htgnn::CnnBaseline>(htgnn::BaselineConfig{}, kTemperatureNodes, kVibrationNodes);
  }
  model->parameters().initialize(rng);
  return model;
}

// range(0): batch size, range(1): 1 for the graph model, 0 for the baseline.
void BM_ModelForward(benchmark::State& state) {
  std::mt19937_64 rng(1);
  auto model = make_model(state.range(1) != 0, rng);
  const auto windows = random_windows(static_cast<std::size_t>(state.range(0)), rng);
  const auto batch = stack(windows);
  htgnn::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(model->forward(batch, false));
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.SetLabel(state.range(1) ? "htgnn" : "cnn");
}
BENCHMARK(BM_ModelForward)->ArgsProduct({{32, 512}, {1, 0}})->Unit(benchmark::kMillisecond);

void BM_ModelTrainStep(benchmark::State& state) {
  std::mt19937_64 rng(2);
  auto model = make_model(state.range(1) != 0, rng);
  const auto windows = random_windows(static_cast<std::size_t>(state.range(0)), rng);
  const auto batch = stack(windows);
  for (auto _ : state) {
    model->parameters().zero_grad();
    auto loss = htgnn::l1_loss(model->forward(batch, true), batch.load);
    loss.backward();
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.SetLabel(state.range(1) ? "htgnn" : "cnn");
}
BENCHMARK(BM_ModelTrainStep)->ArgsProduct({{32, 512}, {1, 0}})->Unit(benchmark::kMillisecond);

}  // namespace
