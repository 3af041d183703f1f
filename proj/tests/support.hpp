// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "htgnn/ops.hpp"
#include "htgnn/sample.hpp"
#include "htgnn/tensor.hpp"

namespace htgnn::test {

inline constexpr double kFdEpsilon = 1e-5;
inline constexpr double kFdRelTol = 1e-4;
// Gradients below this magnitude are compared on an absolute scale.
inline constexpr double kFdMagnitudeFloor = 1e-4;

/// Uniform values in [lo, hi); with `away_from_zero`, values within 1e-2 of
/// zero are pushed out so kinks (|x|, LeakyReLU) are not straddled.
inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0,
                            bool requires_grad = true, bool away_from_zero = false) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(shape_size(shape));
  for (auto& x : v) {
    x = u(rng);
    if (away_from_zero && std::abs(x) < 1e-2) x = x < 0 ? x - 1e-2 : x + 1e-2;
  }
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

struct GradCheck {
  double max_error = 0.0;  // relative, with the magnitude floor
  std::string where;
  std::size_t checked = 0;
};

/// Central finite differences of loss = sum(f(inputs) * R) for a fixed random
/// R against the reverse-mode gradient of every input with requires_grad.
inline GradCheck check_gradients(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                                 std::vector<Tensor> inputs, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  const auto probe_shape = f(inputs).shape();
  const auto r = random_tensor(probe_shape, rng, -1.0, 1.0, false);
  auto loss_of = [&] { return sum(mul(f(inputs), r)); };

  for (auto& t : inputs) t.zero_grad();
  loss_of().backward();
  std::vector<std::vector<double>> analytic;
  for (const auto& t : inputs) {
    analytic.emplace_back(t.grad().begin(), t.grad().end());
  }

  GradCheck out;
  NoGradGuard no_grad;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (!inputs[k].requires_grad()) continue;
    auto values = inputs[k].mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + kFdEpsilon;
      const double up = loss_of().item();
      values[i] = saved - kFdEpsilon;
      const double down = loss_of().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * kFdEpsilon);
      const double a = analytic[k][i];
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), kFdMagnitudeFloor});
      ++out.checked;
      if (err > out.max_error) {
        out.max_error = err;
        out.where = "input " + std::to_string(k) + "[" + std::to_string(i) + "] analytic " + std::to_string(a) +
                    " numeric " + std::to_string(numeric);
      }
    }
  }
  return out;
}

/// A raw window with smooth random series.
inline WindowSample random_window(std::size_t nt, std::size_t nv, std::size_t len, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  WindowSample w;
  w.window = len;
  w.temperature_nodes = nt;
  w.vibration_nodes = nv;
  for (std::size_t i = 0; i < nt * len; ++i) w.temperature.push_back(n(rng));
  for (std::size_t i = 0; i < nv * len; ++i) w.vibration.push_back(n(rng));
  for (std::size_t i = 0; i < len; ++i) w.speed.push_back(n(rng));
  w.load = {n(rng), n(rng)};
  return w;
}

inline BatchTensors stack(const std::vector<WindowSample>& windows) {
  std::vector<const WindowSample*> ptrs;
  for (const auto& w : windows) ptrs.push_back(&w);
  return stack_batch(ptrs);
}

}  // namespace htgnn::test
