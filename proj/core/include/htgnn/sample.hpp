// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "htgnn/tensor.hpp"

namespace htgnn {

/// One training example. Temperature and vibration rows follow the graph's
/// node order of the respective meta-type.
struct WindowSample {
  std::size_t window = 0;
  std::size_t temperature_nodes = 0;
  std::size_t vibration_nodes = 0;
  std::vector<double> temperature;  // temperature_nodes x window
  std::vector<double> vibration;    // vibration_nodes x window
  std::vector<double> speed;        // window
  std::array<double, 2> load{};     // F_x, F_y in kN
  std::size_t case_id = 0;
  std::size_t end_index = 0;  // last time step of the window in the processed case
  bool seen = true;

  /// Throws DataError on inconsistent sizes or non-finite values.
  void validate() const;
};

using SampleBatch = std::span<const WindowSample* const>;

/// Stacked model inputs for B samples.
struct BatchTensors {
  std::size_t batch = 0;
  Tensor temperature;  // (B * N_T) x L, sample-major
  Tensor vibration;    // (B * N_V) x L
  Tensor speed;        // B x L
  Tensor load;         // B x 2
};

BatchTensors stack_batch(SampleBatch samples);

}  // namespace htgnn
