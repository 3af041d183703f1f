// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <cstdint>
#include <random>

#include "htgnn/ops.hpp"

namespace {

htgnn::Tensor random_tensor(htgnn::Shape shape, std::mt19937_64& rng, bool requires_grad = false) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::normal_distribution<double> dist;
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return htgnn::Tensor::from(std::move(shape), std::move(v), requires_grad);
}

// Square products at the sizes the head and interaction layers hit.
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const auto a = random_tensor({n, n}, rng), b = random_tensor({n, n}, rng);
  htgnn::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(htgnn::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(4)->Range(16, 256);

// Per-node encoder shape: one input channel, window 30, kernel 3.
void BM_Conv1dForward(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  const auto x = random_tensor({batch, 1, 30}, rng);
  const auto k = random_tensor({2, 1, 3}, rng), bias = random_tensor({2}, rng);
  htgnn::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(htgnn::conv1d(x, k, bias));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_Conv1dForward)->RangeMultiplier(4)->Range(64, 16384);

void BM_Conv1dBackward(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  const auto x = random_tensor({batch, 8, 30}, rng);
  const auto k = random_tensor({8, 8, 9}, rng, true), bias = random_tensor({8}, rng, true);
  for (auto _ : state) {
    auto loss = htgnn::sum(htgnn::conv1d(x, k, bias, 4));
    loss.backward();
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_Conv1dBackward)->RangeMultiplier(4)->Range(64, 1024);

}  // namespace
