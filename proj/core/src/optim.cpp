// SPDX-License-Identifier: Apache-2.0
#include "htgnn/optim.hpp"

#include <cmath>

namespace htgnn {

void adamw_step(std::span<double> param, std::span<const double> grad, AdamWState& state,
                const AdamWOptions& options) {
  if (grad.size() != param.size()) {
    throw DimensionError("adamw_step: gradient has " + std::to_string(grad.size()) +
                         " values, parameter " + std::to_string(param.size()));
  }
  if (state.first_moment.empty()) {
    state.first_moment.assign(param.size(), 0.0);
    state.second_moment.assign(param.size(), 0.0);
  }
  if (state.first_moment.size() != param.size() || state.second_moment.size() != param.size()) {
    throw DimensionError("adamw_step: optimizer state does not match parameter size");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(options.beta1, t);
  const double correction2 = 1.0 - std::pow(options.beta2, t);
  const double decay = 1.0 - options.lr * options.weight_decay;
  for (std::size_t i = 0; i < param.size(); ++i) {
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    m = options.beta1 * m + (1.0 - options.beta1) * grad[i];
    v = options.beta2 * v + (1.0 - options.beta2) * grad[i] * grad[i];
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    param[i] = param[i] * decay - options.lr * m_hat / (std::sqrt(v_hat) + options.eps);
  }
}

AdamW::AdamW(ParameterStore& params, AdamWOptions options)
    : params_(params), options_(options), state_(params.entries().size()) {}

void AdamW::step() {
  auto& entries = params_.entries();
  if (entries.size() != state_.size()) throw ConfigError("parameter set changed under optimizer");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& t = entries[i].tensor;
    adamw_step(t.mutable_values(), t.grad(), state_[i], options_);
  }
}

}  // namespace htgnn
