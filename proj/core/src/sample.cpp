// SPDX-License-Identifier: Apache-2.0
#include "htgnn/sample.hpp"

#include <cmath>

namespace htgnn {

void WindowSample::validate() const {
  if (window == 0 || temperature_nodes == 0 || vibration_nodes == 0) {
    throw DataError("window sample with empty extent");
  }
  if (temperature.size() != temperature_nodes * window || vibration.size() != vibration_nodes * window ||
      speed.size() != window) {
    throw DataError("window sample channel sizes do not match its extents");
  }
  auto finite = [](const std::vector<double>& v) {
    for (double x : v) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  };
  if (!finite(temperature) || !finite(vibration) || !finite(speed) || !std::isfinite(load[0]) ||
      !std::isfinite(load[1])) {
    throw DataError("window sample contains non-finite values");
  }
}

BatchTensors stack_batch(SampleBatch samples) {
  if (samples.empty()) throw DataError("empty batch");
  const auto& first = *samples.front();
  const std::size_t b = samples.size(), l = first.window, nt = first.temperature_nodes,
                    nv = first.vibration_nodes;
  std::vector<double> t, v, w, y;
  t.reserve(b * nt * l);
  v.reserve(b * nv * l);
  w.reserve(b * l);
  y.reserve(b * 2);
  for (const auto* s : samples) {
    if (s->window != l || s->temperature_nodes != nt || s->vibration_nodes != nv) {
      throw DimensionError("batch mixes samples of different extents");
    }
    t.insert(t.end(), s->temperature.begin(), s->temperature.end());
    v.insert(v.end(), s->vibration.begin(), s->vibration.end());
    w.insert(w.end(), s->speed.begin(), s->speed.end());
    y.insert(y.end(), s->load.begin(), s->load.end());
  }
  return {b, Tensor::from({b * nt, l}, std::move(t)), Tensor::from({b * nv, l}, std::move(v)),
          Tensor::from({b, l}, std::move(w)), Tensor::from({b, 2}, std::move(y))};
}

}  // namespace htgnn
